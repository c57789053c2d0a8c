#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hyrf {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller passed arguments that violate a documented precondition.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Internal sequencing violated (e.g. backward without a matching forward).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Dataset or file content could not be parsed.
class DataError : public Error {
public:
    using Error::Error;
};

/// Configuration is inconsistent with the scene (e.g. background sphere too small).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss or an empty model.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Binary stream (checkpoint, bundle, entropy payload) is malformed.
class CorruptStream : public Error {
public:
    CorruptStream(const std::string& what, std::uint64_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

}  // namespace hyrf
