#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace evcomp {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration: bad flag values, missing files, empty datasets.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed input file. Carries the origin (path or label) and 1-based line.
class ParseError : public Error {
public:
    ParseError(const std::string& origin, int line, const std::string& message)
        : Error(origin + ":" + std::to_string(line) + ": " + message),
          origin_(origin),
          line_(line) {}

    const std::string& origin() const { return origin_; }
    int line() const { return line_; }

private:
    std::string origin_;
    int line_;
};

// Errors raised by next-token-distribution providers.
class BackendError : public Error {
public:
    using Error::Error;
};

class ContextOverflowError : public BackendError {
public:
    using BackendError::BackendError;
};

class UnknownTokenError : public BackendError {
public:
    using BackendError::BackendError;
};

// Transport-level failure talking to a remote backend. Never carries a
// fabricated distribution; `retryable` says whether a retry could help
// (connection refused, timeout, 5xx) or not (protocol violation).
class TransportError : public BackendError {
public:
    TransportError(const std::string& message, bool retryable)
        : BackendError(message), retryable_(retryable) {}

    bool retryable() const { return retryable_; }

private:
    bool retryable_;
};

// Two backends do not share a vocabulary. Carries both fingerprints.
class IncompatibleVocabError : public BackendError {
public:
    IncompatibleVocabError(const std::string& message,
                           std::uint64_t fingerprint_a,
                           std::uint64_t fingerprint_b)
        : BackendError(message),
          fingerprint_a_(fingerprint_a),
          fingerprint_b_(fingerprint_b) {}

    std::uint64_t fingerprint_a() const { return fingerprint_a_; }
    std::uint64_t fingerprint_b() const { return fingerprint_b_; }

private:
    std::uint64_t fingerprint_a_;
    std::uint64_t fingerprint_b_;
};

}  // namespace evcomp
