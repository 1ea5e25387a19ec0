#pragma once

#include <stdexcept>
#include <string>

namespace agec {

// Error taxonomy shared by the library and the CLI. The CLI maps each kind
// to a distinct process exit code.
enum class ErrorKind {
    config,      // bad user-supplied configuration or arguments
    io,          // file system / parse failures
    numeric,     // algorithm failed to converge or produced non-finite values
    degenerate,  // input data cannot support the requested computation
    contract,    // caller violated a documented precondition
    capacity,    // requested problem size exceeds supported limits
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    int exit_code() const noexcept {
        switch (kind_) {
            case ErrorKind::config: return 2;
            case ErrorKind::io: return 3;
            case ErrorKind::numeric: return 4;
            case ErrorKind::degenerate: return 5;
            case ErrorKind::contract: return 6;
            case ErrorKind::capacity: return 2;
        }
        return 1;
    }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ErrorKind::config, w) {}
};

struct IoError : Error {
    explicit IoError(const std::string& w) : Error(ErrorKind::io, w) {}
};

struct NumericError : Error {
    explicit NumericError(const std::string& w) : Error(ErrorKind::numeric, w) {}
};

struct DegenerateDataError : Error {
    explicit DegenerateDataError(const std::string& w) : Error(ErrorKind::degenerate, w) {}
};

struct ContractError : Error {
    explicit ContractError(const std::string& w) : Error(ErrorKind::contract, w) {}
};

struct CapacityError : Error {
    explicit CapacityError(const std::string& w) : Error(ErrorKind::capacity, w) {}
};

// The base model made no errors on the adaptation set. Callers are expected
// to catch this and emit a pass-through corrector.
struct CorrectorNotNeeded : DegenerateDataError {
    CorrectorNotNeeded()
        : DegenerateDataError("base model made no errors on the adaptation set; "
                              "corrector not needed") {}
};

// No error type reached the minimum class size. A detector can still be
// trained; deployment then flags errors without rewriting labels.
struct NoErrorTypes : DegenerateDataError {
    explicit NoErrorTypes(const std::string& w) : DegenerateDataError(w) {}
};

}  // namespace agec
