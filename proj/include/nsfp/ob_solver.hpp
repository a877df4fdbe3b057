#pragma once

#include <cmath>
#include <vector>

#include "nsfp/grid.hpp"
#include "nsfp/transport.hpp"

namespace nsfp {

struct ObState {
  StressField sigma;
  DensityField rho;

  static ObState equilibrium(const MacGrid& g) {
    return ObState{StressField::isotropic(g, 1.0), DensityField::constant(g, 1.0)};
  }
};

// Implicit relaxation-plus-stretching update of one cell's conformation stress:
//   (1 + mu) s - dt (kappa s + s kappa^T) = r + mu rho I,   mu = dt / (2 lambda)
// with traceless kappa = [[a, b], [c, -a]]. The 3x3 system in (s11, s12, s22)
// is solved in closed form.
inline void ob_local_step(double r11, double r12, double r22, double rho, double a,
                          double b, double c, double dt, double lambda, double& s11,
                          double& s12, double& s22) {
  const double mu = dt / (2.0 * lambda);
  const double g0 = 1.0 + mu;
  // rows: [g0 - 2dt a, -2dt b, 0], [-dt c, g0, -dt b], [0, -2dt c, g0 + 2dt a]
  const double m11 = g0 - 2.0 * dt * a, m12 = -2.0 * dt * b;
  const double m21 = -dt * c, m23 = -dt * b;
  const double m32 = -2.0 * dt * c, m33 = g0 + 2.0 * dt * a;
  const double b1 = r11 + mu * rho, b2 = r12, b3 = r22 + mu * rho;
  const double det = m11 * (g0 * m33 - m23 * m32) - m12 * (m21 * m33);
  if (std::fabs(det) < 1e-300) throw SolverError("local stress update is singular");
  const double x1 = (b1 * (g0 * m33 - m23 * m32) - m12 * (b2 * m33 - m23 * b3)) / det;
  const double x2 = (m11 * (b2 * m33 - m23 * b3) - b1 * (m21 * m33)) / det;
  const double x3 = (m11 * (g0 * b3 - b2 * m32) - m12 * (m21 * b3) + b1 * (m21 * m32)) / det;
  s11 = x1;
  s12 = x2;
  s22 = x3;
}

// One macroscopic step: the shared transport half step on all four scalar
// fields, then the pointwise implicit relaxation with kappa = grad u.
inline void ob_step(ObState& st, const VelocityField& u, const MacGrid& g, double dt,
                    double lambda, double eps) {
  half_x_step({&st.sigma.s11, &st.sigma.s12, &st.sigma.s22, &st.rho.rho}, u, g, dt, eps);
  Array2 k11, k12, k21, k22;
  velocity_gradient_cells(u, g, k11, k12, k21, k22);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double s11, s12, s22;
      ob_local_step(st.sigma.s11(i, j), st.sigma.s12(i, j), st.sigma.s22(i, j),
                    st.rho.rho(i, j), k11(i, j), k12(i, j), k21(i, j), dt, lambda, s11,
                    s12, s22);
      st.sigma.s11(i, j) = s11;
      st.sigma.s12(i, j) = s12;
      st.sigma.s22(i, j) = s22;
    }
}

// Volume-weighted squared Frobenius norm of the difference of two stress fields.
inline double stress_diff_norm2(const StressField& x, const StressField& y,
                                const MacGrid& g) {
  const double vol = g.cell_area();
  std::vector<double> per_cell(x.s11.v.size(), 0.0);
  for (std::size_t t = 0; t < per_cell.size(); ++t) {
    const double d11 = x.s11.v[t] - y.s11.v[t];
    const double d12 = x.s12.v[t] - y.s12.v[t];
    const double d22 = x.s22.v[t] - y.s22.v[t];
    per_cell[t] = vol * (d11 * d11 + 2.0 * d12 * d12 + d22 * d22);
  }
  return pairwise_sum(per_cell);
}

// Tracks ||sigma_A - sigma_B||^2 against the exponential stability bound
//   ||z^n||^2 <= ||z^0||^2 exp( sum_m dt (4 W_m - 1/lambda) ) * slack,
// W_m the max velocity-gradient magnitude over the step.
struct GronwallMonitor {
  double initial_norm2 = 0.0;
  double exponent = 0.0;
  double slack = 1.1;
  double worst_ratio = 0.0;
  bool ok = true;
  std::vector<double> norms2, bounds2;

  void start(double n2) {
    initial_norm2 = n2;
    norms2.clear();
    bounds2.clear();
    norms2.push_back(n2);
    bounds2.push_back(n2 * slack);
  }

  void record(double n2, double wmax, double dt, double lambda) {
    exponent += dt * (4.0 * wmax - 1.0 / lambda);
    const double bound = initial_norm2 * std::exp(exponent) * slack;
    norms2.push_back(n2);
    bounds2.push_back(bound);
    const double ratio = n2 / (bound > 0.0 ? bound : 1e-300);
    if (ratio > worst_ratio) worst_ratio = ratio;
    if (n2 > bound + 1e-300) ok = false;
  }
};

}  // namespace nsfp
