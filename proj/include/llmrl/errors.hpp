#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace llmrl {

/// Root of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor/vector dimensions disagree with the declared architecture or spec.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// An API was called out of order (e.g. backward without forward, step after done).
class UsageError : public Error {
public:
    using Error::Error;
};

/// A NaN/Inf appeared where only finite values are allowed.
class NumericError : public Error {
public:
    using Error::Error;
};

/// A caller violated an operation precondition (out-of-bounds action, invisible satellite).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration detected at construction time.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input rejected during validation (e.g. a reward expression naming an unknown feature).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A reward expression names a feature outside the declared schema.
class UnknownFeatureError : public ValidationError {
public:
    explicit UnknownFeatureError(const std::string& name)
        : ValidationError("unknown feature '" + name + "'"), name_(name) {}

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

/// Reward DSL syntax error; `position` is the 0-based byte offset of the offending token.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t position)
        : Error(message + " at position " + std::to_string(position)), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Reward DSL evaluation produced a non-finite value or hit a domain error.
class EvaluationError : public Error {
public:
    using Error::Error;
};

/// No admissible sample pair for a Lipschitz estimate.
class EstimationError : public Error {
public:
    using Error::Error;
};

/// Base for LLM backend failures (transport, HTTP status, timeout, mock exhaustion).
class BackendError : public Error {
public:
    using Error::Error;
};

class TransportError : public BackendError {
public:
    using BackendError::BackendError;
};

class TimeoutError : public BackendError {
public:
    using BackendError::BackendError;
};

class HttpStatusError : public BackendError {
public:
    HttpStatusError(int status, const std::string& body_excerpt)
        : BackendError("HTTP " + std::to_string(status) + ": " + body_excerpt),
          status_(status),
          body_excerpt_(body_excerpt) {}

    int status() const noexcept { return status_; }
    const std::string& body_excerpt() const noexcept { return body_excerpt_; }

private:
    int status_;
    std::string body_excerpt_;
};

class MockExhaustedError : public BackendError {
public:
    using BackendError::BackendError;
};

/// No complete JSON object could be found in model output.
class ExtractionError : public Error {
public:
    ExtractionError(const std::string& message, std::string raw_text)
        : Error(message), raw_text_(std::move(raw_text)) {}

    const std::string& raw_text() const noexcept { return raw_text_; }

private:
    std::string raw_text_;
};

/// JSON was extracted but does not match the expected response schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A prompt template references a variable that was not bound.
class TemplateError : public Error {
public:
    using Error::Error;
};

/// Reward design produced no validated candidate. Carries every candidate's violations.
class DesignError : public Error {
public:
    DesignError(const std::string& message, std::vector<std::string> violations)
        : Error(message), violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

}  // namespace llmrl
