#pragma once

#include <cmath>
#include <optional>
#include <string>

namespace nsfp {

// Physical and run parameters shared by the macroscopic and kinetic solvers.
//   nu       kinematic viscosity
//   eps      centre-of-mass diffusion coefficient (also the stress diffusion)
//   lambda   relaxation time of the dumbbell spring
//   k        elastic stress coefficient in the Kramers expression
//   cutoff_L drag cut-off level (> 1)
//   dt       time step; t_final run horizon
struct ModelParams {
  double nu = 1.0;
  double eps = 0.1;
  double lambda = 1.0;
  double k = 1.0;
  double cutoff_L = 100.0;
  double dt = 1.0 / 256.0;
  double t_final = 0.25;
  int d = 2;
};

// Returns the first violated constraint by name, or nullopt when admissible.
// strict_stress_regime additionally enforces 4 L^2 dt <= 1, the regime in
// which the drag cut-off provably stays transparent to the stress bound.
inline std::optional<std::string> validate_params(const ModelParams& p,
                                                  bool strict_stress_regime = false) {
  if (p.d != 2) return "d must equal 2";
  if (!(p.nu > 0.0)) return "nu must be positive";
  if (!(p.eps >= 0.0)) return "eps must be nonnegative";
  if (!(p.lambda > 0.0)) return "lambda must be positive";
  if (!(p.k > 0.0)) return "k must be positive";
  if (!(p.cutoff_L > 1.0)) return "cutoff_L must exceed 1";
  if (!(p.dt > 0.0)) return "dt must be positive";
  if (!(p.t_final > 0.0)) return "t_final must be positive";
  if (!std::isfinite(p.nu) || !std::isfinite(p.eps) || !std::isfinite(p.lambda) ||
      !std::isfinite(p.k) || !std::isfinite(p.cutoff_L) || !std::isfinite(p.dt) ||
      !std::isfinite(p.t_final))
    return "parameters must be finite";
  if (strict_stress_regime && 4.0 * p.cutoff_L * p.cutoff_L * p.dt > 1.0)
    return "stress-regime coupling violated";
  return std::nullopt;
}

}  // namespace nsfp
