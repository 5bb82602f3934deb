#pragma once

#include <stdexcept>
#include <string>

namespace sclab {

// Failure categories raised by the numerical kernels. The CLI maps them onto
// exit codes (config -> 2, numerical guards -> 3).
enum class ErrorKind {
    InvalidArgument,
    ZeroNorm,
    OutOfBox,
    OnSingularSet,
    NyquistViolation,
    TailOverflow,
    SupportViolation,
    NonSeparable,
    BoundViolation,
    NotNormalized,
    Config,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    // Nyquist and tail guards signal an under-resolved run rather than a bug.
    bool is_numerical_guard() const noexcept {
        return kind_ == ErrorKind::NyquistViolation || kind_ == ErrorKind::TailOverflow;
    }

private:
    ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) throw Error(kind, message);
}

}  // namespace sclab
