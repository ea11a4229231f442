#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace jetforge {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DivisionByZero : public Error {
public:
    using Error::Error;
};

class MissingVariable : public Error {
public:
    using Error::Error;
};

/// Raised when an exact evaluation meets a primitive without a rational value.
class NotExact : public Error {
public:
    using Error::Error;
};

class MissingDerivativeRule : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

/// An affine lift system without solution: the projection E^(l+1) -> E^(l)
/// is not onto at the given point.
class ObstructionError : public Error {
public:
    ObstructionError(const std::string& what_arg, int order)
        : Error(what_arg), order_(order) {}
    int order() const { return order_; }

private:
    int order_;
};

/// Well-formed input that names something undeclared or out of range.
class SemanticError : public Error {
public:
    using Error::Error;
    SemanticError(const std::string& msg, std::size_t line, std::size_t column)
        : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg) {}
};

class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t offset, std::size_t line, std::size_t column)
        : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
          offset_(offset), line_(line), column_(column), message_(msg) {}
    std::size_t offset() const { return offset_; }
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }
    const std::string& message() const { return message_; }

private:
    std::size_t offset_, line_, column_;
    std::string message_;
};

}  // namespace jetforge
