#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nsfp/grid.hpp"

namespace nsfp {

// Conservative divergence of (v phi) for a cell scalar phi and MAC velocity v.
// Face values of phi are centered averages inside the domain; at a boundary
// face the adjacent cell value is used, so constants are transported exactly
// whenever div v = 0 discretely (and the flux vanishes under no-slip).
inline Array2 advective_divergence(const Array2& phi, const VelocityField& v,
                                   const MacGrid& g) {
  const int nx = g.nx, ny = g.ny;
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  Array2 out(nx, ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double fw = v.u1(i, j) *
                        (i == 0 ? phi(0, j) : 0.5 * (phi(i - 1, j) + phi(i, j)));
      const double fe = v.u1(i + 1, j) *
                        (i == nx - 1 ? phi(nx - 1, j) : 0.5 * (phi(i, j) + phi(i + 1, j)));
      const double fs = v.u2(i, j) *
                        (j == 0 ? phi(i, 0) : 0.5 * (phi(i, j - 1) + phi(i, j)));
      const double fn = v.u2(i, j + 1) *
                        (j == ny - 1 ? phi(i, ny - 1) : 0.5 * (phi(i, j) + phi(i, j + 1)));
      out(i, j) = (fe - fw) * ihx + (fn - fs) * ihy;
    }
  return out;
}

// Explicit advection step phi -> phi - dt div(v phi), with a CFL guard.
inline void advect(Array2& phi, const VelocityField& v, const MacGrid& g, double dt) {
  const double cfl = dt * (max_abs(v.u1) / g.hx() + max_abs(v.u2) / g.hy());
  if (cfl > 1.0) {
    const double admissible = dt / cfl;
    throw ValidationError("advective CFL condition violated; dt must not exceed " +
                          std::to_string(admissible));
  }
  const Array2 dv = advective_divergence(phi, v, g);
  for (std::size_t t = 0; t < phi.v.size(); ++t) phi.v[t] -= dt * dv.v[t];
}

// Negative Neumann Laplacian -div grad with zero-flux walls, as the exact
// composition of face gradients and the conservative divergence. Symmetric
// positive semidefinite; constants span the kernel; cell sums are conserved
// by anything of the form I + c A.
inline Array2 apply_neumann_laplacian(const Array2& phi, const MacGrid& g) {
  const int nx = g.nx, ny = g.ny;
  const double ihx2 = 1.0 / (g.hx() * g.hx()), ihy2 = 1.0 / (g.hy() * g.hy());
  Array2 out(nx, ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double c = phi(i, j);
      double s = 0.0;
      if (i > 0) s += (c - phi(i - 1, j)) * ihx2;
      if (i < nx - 1) s += (c - phi(i + 1, j)) * ihx2;
      if (j > 0) s += (c - phi(i, j - 1)) * ihy2;
      if (j < ny - 1) s += (c - phi(i, j + 1)) * ihy2;
      out(i, j) = s;
    }
  return out;
}

// Smallest nonzero eigenvalue of the discrete Neumann Laplacian (the decay
// rate of the slowest non-constant mode), used by oracle checks.
inline double neumann_lowest_rate(const MacGrid& g) {
  const double ex = (2.0 / (g.hx() * g.hx())) * (1.0 - std::cos(M_PI * g.hx() / g.lx));
  const double ey = (2.0 / (g.hy() * g.hy())) * (1.0 - std::cos(M_PI * g.hy() / g.ly));
  return std::min(ex, ey);
}

// Solves (c0 I + c1 A_N) x = rhs by Jacobi-preconditioned CG. For c0 == 0 the
// operator is singular with constant kernel; the rhs is then projected to mean
// zero and the returned solution has mean zero.
struct HelmholtzNeumann {
  const MacGrid& g;
  double c0, c1;
  double rtol;
  double abs_inf;  // extra infinity-norm stop; <= 0 disables it
  int max_iters = 10000;

  HelmholtzNeumann(const MacGrid& g_, double c0_, double c1_, double rtol_ = 1e-13,
                   double abs_inf_ = 0.0)
      : g(g_), c0(c0_), c1(c1_), rtol(rtol_), abs_inf(abs_inf_) {}

  IterStats solve(const Array2& rhs, Array2& x, const char* what) const {
    const std::size_t n = rhs.v.size();
    std::vector<double> b = rhs.v;
    const bool singular = c0 == 0.0;
    if (singular) {
      const double mean = pairwise_sum(b) / (double)n;
      for (double& t : b) t -= mean;
    }
    const double ihx2 = 1.0 / (g.hx() * g.hx()), ihy2 = 1.0 / (g.hy() * g.hy());
    std::vector<double> diag(n);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        double d = 0.0;
        if (i > 0) d += ihx2;
        if (i < g.nx - 1) d += ihx2;
        if (j > 0) d += ihy2;
        if (j < g.ny - 1) d += ihy2;
        diag[(std::size_t)j * g.nx + i] = c0 + c1 * d;
      }
    if (singular)
      for (double& t : diag) t += 1e-30;  // keep the Jacobi scaling finite
    Array2 tmp(g.nx, g.ny);
    auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
      tmp.v = in;
      const Array2 lap = apply_neumann_laplacian(tmp, g);
      for (std::size_t t = 0; t < n; ++t) out[t] = c0 * in[t] + c1 * lap.v[t];
    };
    std::vector<double> xv = x.v;
    const IterStats st = cg_solve(apply, diag, b, xv, rtol, abs_inf, max_iters, what);
    if (singular) {
      const double mean = pairwise_sum(xv) / (double)n;
      for (double& t : xv) t -= mean;
    }
    x.v = std::move(xv);
    return st;
  }
};

// Implicit diffusion step (I + dt a A_N) phi_new = phi. Conserves the cell sum
// identically (A_N columns sum to zero) and is run tight so repeated steps
// compose linearly to rounding.
inline IterStats diffuse(Array2& phi, const MacGrid& g, double a, double dt,
                         const char* what = "diffusion solve") {
  if (a == 0.0 || dt == 0.0) return IterStats{0, 0.0, 0.0};
  HelmholtzNeumann solver(g, 1.0, dt * a, 1e-13);
  Array2 x = phi;  // warm start at the previous state
  const IterStats st = solver.solve(phi, x, what);
  phi = x;
  return st;
}

// The shared physical-space half step: advect by dt then diffuse by dt, applied
// to every field in the list with the same velocity. Both pieces are affine in
// the field, so applying this map coefficient-wise or moment-wise commutes with
// taking moments; the micro and macro solvers call exactly this function.
inline void half_x_step(const std::vector<Array2*>& fields, const VelocityField& v,
                        const MacGrid& g, double dt, double eps) {
  for (Array2* f : fields) advect(*f, v, g, dt);
  for (Array2* f : fields) diffuse(*f, g, eps, dt, "stress diffusion solve");
}

}  // namespace nsfp
