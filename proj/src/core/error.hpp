#pragma once

#include <stdexcept>
#include <string>

namespace dira {

// Error categories map 1:1 onto process exit codes and C API status values.
enum class ErrorCode : int {
    config = 2,   // bad configuration, contract violation, shape mismatch
    format = 3,   // malformed files, integrity failures
    numeric = 4,  // non-finite values where finite ones are required
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorCode::config, what) {}
};

struct FormatError : Error {
    explicit FormatError(const std::string& what) : Error(ErrorCode::format, what) {}
};

struct NumericError : Error {
    explicit NumericError(const std::string& what) : Error(ErrorCode::numeric, what) {}
};

}  // namespace dira
