#pragma once

#include <stdexcept>
#include <string>

namespace fbev {

/// Category of a toolkit failure. The CLI maps these onto process exit codes.
enum class ErrorKind {
    domain,       // precondition on a numeric input violated
    validation,   // malformed config, calibration or input record
    io,           // file missing, unreadable or unwritable
    integrity,    // dangling token reference or inconsistent record set
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class IoError : public Error {
public:
    IoError(const std::string& path, const std::string& what)
        : Error(ErrorKind::io, path + ": " + what), path_(path) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class IntegrityError : public Error {
public:
    IntegrityError(const std::string& token, const std::string& what)
        : Error(ErrorKind::integrity, what + " (token " + token + ")"), token_(token) {}

    const std::string& token() const noexcept { return token_; }

private:
    std::string token_;
};

/// Iterative undistortion failed; carries the last radial residual.
class NoConvergenceError : public DomainError {
public:
    NoConvergenceError(const std::string& what, double residual)
        : DomainError(what + " (residual " + std::to_string(residual) + ")"),
          residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// A source label that the class-mapping table does not know.
class UnmappedLabelError : public ValidationError {
public:
    explicit UnmappedLabelError(const std::string& label)
        : ValidationError("unmapped source label '" + label + "'"), label_(label) {}

    const std::string& label() const noexcept { return label_; }

private:
    std::string label_;
};

}  // namespace fbev
