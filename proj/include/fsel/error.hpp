#pragma once

#include <stdexcept>
#include <string>

namespace fsel {

// Malformed or unusable input data (CLI exit code 2).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Numerical failure inside a solver (CLI exit code 3).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration or command line (CLI exit code 1).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Thrown by the pipeline when a stage fails; carries the stage name.
class StageError : public std::runtime_error {
public:
    enum class Kind { kData, kSolver, kConfig, kOther };

    StageError(std::string stage, Kind kind, const std::string& what);

    const std::string& stage() const noexcept { return stage_; }
    Kind kind() const noexcept { return kind_; }

private:
    std::string stage_;
    Kind kind_;
};

}  // namespace fsel
