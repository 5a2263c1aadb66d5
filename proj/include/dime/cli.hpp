#pragma once

#include <map>
#include <string>
#include <vector>

#include "dime/common.hpp"

namespace dime::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Flat key=value configuration; CLI flags are folded in before a command
// runs, so commands see one resolved map.
class Config {
public:
    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
    bool has(const std::string& key) const { return values_.count(key) != 0; }

    const std::string& get(const std::string& key) const;  // error names the key
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_double_list(const std::string& key,
                                        const std::string& fallback) const;
    std::vector<int> get_int_list(const std::string& key, const std::string& fallback) const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

// key=value lines, '#' comments; unknown keys are rejected against the
// command's schema when the command runs.
Config load_config_file(const std::string& path);

// Runs one subcommand with a fully resolved config; every command writes a
// manifest.json into out_dir. Returns the files it wrote.
std::vector<std::string> cmd_generate(const Config& cfg, const std::string& out_dir);
std::vector<std::string> cmd_proximity(const Config& cfg, const std::string& out_dir);
std::vector<std::string> cmd_embed(const Config& cfg, const std::string& out_dir);
std::vector<std::string> cmd_eval_link(const Config& cfg, const std::string& out_dir);
std::vector<std::string> cmd_eval_community(const Config& cfg, const std::string& out_dir);

// Re-runs the command recorded in a manifest; outputs land in out_dir
// (empty = the manifest's original out_dir).
std::vector<std::string> replay(const std::string& manifest_path, const std::string& out_dir = "");

// argv entry point (CLI11 parsing); returns the process exit code.
int run(int argc, const char* const* argv);

}  // namespace dime::cli
