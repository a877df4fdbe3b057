#pragma once

#include <stdexcept>

namespace nsfp {

// Library code throws; the CLI maps exception types to process exit codes.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CheckError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 2;
inline constexpr int exit_solver = 3;
inline constexpr int exit_check = 4;

}  // namespace nsfp
