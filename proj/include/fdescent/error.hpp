#pragma once
// Exception hierarchy shared by every fdescent module.

#include <stdexcept>
#include <string>
#include <utility>

namespace fdescent {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad user-supplied configuration (unknown key, out-of-range value, ...).
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
    explicit ConfigError(const std::string& what) : ConfigError("", what) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

// Argument outside the mathematical domain of a function.
class DomainError : public Error {
public:
    using Error::Error;
};

// Malformed input data (mismatched id sets, bad JSONL rows, ...).
class InputError : public Error {
public:
    using Error::Error;
};

// Generator or judge backend failed (transport, exhausted retries, empty script).
class BackendError : public Error {
public:
    using Error::Error;
};

// A single attempt failed in a way that is worth retrying.
class TransientError : public BackendError {
public:
    using BackendError::BackendError;
};

// Backend answered, but the body did not follow the wire protocol.
class ProtocolError : public BackendError {
public:
    using BackendError::BackendError;
};

class TemplateError : public Error {
public:
    using Error::Error;
};

// Model output lacked the expected structure; keeps the raw text for logs.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::string raw)
        : Error(what), raw_(std::move(raw)) {}

    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

class EvaluationError : public Error {
public:
    using Error::Error;
};

class InitializationError : public Error {
public:
    using Error::Error;
};

}  // namespace fdescent
