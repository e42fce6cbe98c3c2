#pragma once

#include <stdexcept>
#include <string>

namespace geocloud {

/// Base class for all geocloud errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// Malformed file content; carries the 1-based line number where parsing failed.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Header declared more records than the body contains.
class TruncationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class EmptyRequest : public Error {
public:
    using Error::Error;
};

class InsufficientPoints : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

class RatioError : public Error {
public:
    using Error::Error;
};

class SizeMismatch : public Error {
public:
    using Error::Error;
};

class TooLargeForExact : public Error {
public:
    using Error::Error;
};

class CovarianceError : public Error {
public:
    using Error::Error;
};

class UnsupportedDimension : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class TooShort : public Error {
public:
    using Error::Error;
};

class SizeError : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

/// Wraps a failure from a pipeline stage with the stage name attached.
class StageError : public Error {
public:
    StageError(const std::string& stage, const std::string& msg)
        : Error("[stage " + stage + "] " + msg), stage_(stage) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

}  // namespace geocloud
