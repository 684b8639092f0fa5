#pragma once

#include <stdexcept>
#include <string>

namespace engrank {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or out-of-contract input: CSV cells, config fields, ranking files.
class DataError : public Error {
public:
    using Error::Error;
};

// AHP rejection when CR >= 0.1. Carries the offending ratio.
class ConsistencyError : public Error {
public:
    ConsistencyError(const std::string& msg, double cr) : Error(msg), cr_(cr) {}
    double cr() const noexcept { return cr_; }

private:
    double cr_;
};

}  // namespace engrank
