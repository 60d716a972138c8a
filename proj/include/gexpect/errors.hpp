#pragma once

#include <stdexcept>
#include <string>

namespace gexpect {

/// Error categories. The CLI maps these onto process exit codes
/// (validation -> 2, numerical -> 3, resource -> 4).
enum class ErrorKind {
    kValidation,  // bad input data, dimension mismatch, violated invariant
    kConfig,      // inconsistent grid / experiment configuration
    kNumerical,   // blow-up, non-finite values
    kResource,    // state budget exceeded
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void throw_validation(const std::string& msg) {
    throw Error(ErrorKind::kValidation, msg);
}
[[noreturn]] inline void throw_config(const std::string& msg) {
    throw Error(ErrorKind::kConfig, msg);
}
[[noreturn]] inline void throw_numerical(const std::string& msg) {
    throw Error(ErrorKind::kNumerical, msg);
}
[[noreturn]] inline void throw_resource(const std::string& msg) {
    throw Error(ErrorKind::kResource, msg);
}

}  // namespace gexpect
