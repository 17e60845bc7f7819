#pragma once

#include <stdexcept>
#include <string>

namespace facet {

// Machine-readable failure categories, mapped to CLI exit codes:
// config -> 2, data -> 3, shape/io/runtime -> 4.
enum class ErrorCategory { config, data, shape, io, runtime };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory cat, const std::string& msg)
        : std::runtime_error(msg), cat_(cat) {}

    ErrorCategory category() const noexcept { return cat_; }

    const char* category_name() const noexcept {
        switch (cat_) {
            case ErrorCategory::config: return "CONFIG";
            case ErrorCategory::data: return "DATA";
            case ErrorCategory::shape: return "SHAPE";
            case ErrorCategory::io: return "IO";
            default: return "RUNTIME";
        }
    }

private:
    ErrorCategory cat_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error(ErrorCategory::config, m) {}
};
struct DataError : Error {
    explicit DataError(const std::string& m) : Error(ErrorCategory::data, m) {}
};
struct ShapeError : Error {
    explicit ShapeError(const std::string& m) : Error(ErrorCategory::shape, m) {}
};
struct IoError : Error {
    explicit IoError(const std::string& m) : Error(ErrorCategory::io, m) {}
};

}  // namespace facet
