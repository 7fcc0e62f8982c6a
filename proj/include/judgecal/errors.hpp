#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace judgecal {

/// Root of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : Error("line " + std::to_string(line) + ": " + reason), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DuplicateError : public Error {
 public:
  using Error::Error;
};

class LinkError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

/// A metric failed inside metric_suite; carries the metric name.
class MetricError : public Error {
 public:
  MetricError(std::string metric, const std::string& reason)
      : Error(metric + ": " + reason), metric_(std::move(metric)) {}

  const std::string& metric() const noexcept { return metric_; }

 private:
  std::string metric_;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class CoverageError : public Error {
 public:
  CoverageError(const std::string& what, std::vector<std::string> missing)
      : Error(what), missing_(std::move(missing)) {}

  const std::vector<std::string>& missing() const noexcept { return missing_; }

 private:
  std::vector<std::string> missing_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Backend failures.

class BackendError : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public BackendError {
 public:
  using BackendError::BackendError;
};

class HttpError : public BackendError {
 public:
  HttpError(int status, std::string body_excerpt)
      : BackendError("HTTP " + std::to_string(status) + ": " + body_excerpt),
        status_(status),
        body_excerpt_(std::move(body_excerpt)) {}

  int status() const noexcept { return status_; }
  const std::string& body_excerpt() const noexcept { return body_excerpt_; }

 private:
  int status_;
  std::string body_excerpt_;
};

class CapabilityError : public BackendError {
 public:
  using BackendError::BackendError;
};

class ScriptExhaustedError : public BackendError {
 public:
  using BackendError::BackendError;
};

class ExtractionError : public Error {
 public:
  using Error::Error;
};

}  // namespace judgecal
