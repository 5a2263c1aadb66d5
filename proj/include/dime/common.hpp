#pragma once

#include <stdexcept>
#include <string>

namespace dime {

enum class ErrorKind {
    parse,
    dangling_reference,
    duplicate_edge,
    duplicate_node,
    non_injective,
    unknown_user,
    bad_argument,
    shape_mismatch,
    divergence,
    insufficient_non_edges,
    single_class,
    infeasible_config,
    io,
};

// Single exception type for the whole library; `kind()` lets callers and
// tests distinguish error classes without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace dime
