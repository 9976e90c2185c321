#pragma once

#include <stdexcept>
#include <string>

namespace ednig {

// Precondition / call-contract violations (wrong range tag, shape mismatch, ...).
struct ContractError : std::runtime_error {
    explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dataset layout / pairing problems.
struct DatasetError : std::runtime_error {
    explicit DatasetError(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor archive / checkpoint problems (missing files, checksum, version).
struct ArchiveError : std::runtime_error {
    explicit ArchiveError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values where finite math was required.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ednig
