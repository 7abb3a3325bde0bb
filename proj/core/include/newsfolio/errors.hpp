#pragma once

#include <stdexcept>
#include <string>

namespace newsfolio {

// Error categories map onto CLI exit codes: config=2, data=3, numeric=4, io=5.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParseError : DataError {
    ParseError(const std::string& msg, long line)
        : DataError(msg + " (line " + std::to_string(line) + ")"), line_number(line) {}
    long line_number;
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct RemoteError : std::runtime_error {
    explicit RemoteError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace newsfolio
