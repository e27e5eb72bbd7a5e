#pragma once

#include <stdexcept>
#include <string>

namespace fungate {

/// Base for every error raised by the library. The category maps onto the
/// CLI exit codes (usage/config = 1, data = 2, numerical = 3).
class Error : public std::runtime_error {
public:
    enum class Category { Config = 1, Data = 2, Numerical = 3 };

    Error(Category category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    Category category() const noexcept { return category_; }
    int exit_code() const noexcept { return static_cast<int>(category_); }

private:
    Category category_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(Category::Config, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(Category::Data, what) {}
};

/// Malformed input text; carries the 1-based row (line) number.
class ParseError : public DataError {
public:
    ParseError(std::size_t row, const std::string& what)
        : DataError("row " + std::to_string(row) + ": " + what), row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(Category::Numerical, what) {}
};

} // namespace fungate
