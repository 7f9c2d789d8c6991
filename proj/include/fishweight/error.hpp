#ifndef FISHWEIGHT_ERROR_HPP
#define FISHWEIGHT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace fishweight {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file or record. `row()` is the 1-based line number in the
/// source file, or 0 when the error is not tied to a row.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t row = 0)
        : Error(row ? "row " + std::to_string(row) + ": " + msg : msg), m_row(row) {}

    std::size_t row() const noexcept { return m_row; }

private:
    std::size_t m_row;
};

/// Violated precondition on an argument (bad dimensions, out-of-range value).
class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& msg) : Error(msg) {}
};

} // namespace fishweight

#endif // FISHWEIGHT_ERROR_HPP
