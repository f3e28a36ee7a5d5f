#pragma once

#include <stdexcept>
#include <string>

namespace sginfer {

// Bad arguments to an operation (index out of range, empty batch, ...).
class usage_error : public std::invalid_argument {
  public:
    explicit usage_error(const std::string& what) : std::invalid_argument(what) {}
};

// Bad configuration (file/flag values violating constraints). Exit code 2.
class config_error : public std::runtime_error {
  public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values, divergence, overflow during a run. Exit code 3.
class numeric_error : public std::runtime_error {
  public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// Singular / indefinite matrices where a solve was required. Exit code 3.
class linalg_error : public std::runtime_error {
  public:
    explicit linalg_error(const std::string& what) : std::runtime_error(what) {}
};

// Too many per-simulation failures in a batch run. Exit code 4.
class partial_failure_error : public std::runtime_error {
  public:
    explicit partial_failure_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sginfer
