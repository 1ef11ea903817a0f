#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace optree {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed event data (JSONL input, lexicon or gazetteer files).
class ParseError : public Error {
public:
    ParseError(std::size_t line, std::string reason)
        : Error("line " + std::to_string(line) + ": " + reason), line_(line), reason_(std::move(reason)) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t line_;
    std::string reason_;
};

/// Malformed configuration file or value.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace optree
