#include "dime/cli.hpp"

int main(int argc, char** argv) { return dime::cli::run(argc, argv); }
