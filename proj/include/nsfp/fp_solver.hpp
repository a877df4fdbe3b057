#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "nsfp/grid.hpp"
#include "nsfp/hermite.hpp"
#include "nsfp/qspace.hpp"
#include "nsfp/transport.hpp"

namespace nsfp {

// Per-step velocity record, used to drive a kinetic run with exactly the
// velocities a macroscopic run saw (or their window averages when the two
// sides use different time steps).
struct VelocityHistory {
  std::vector<VelocityField> steps;

  void push(const VelocityField& u) { steps.push_back(u); }

  const VelocityField& at(std::size_t n) const {
    if (n >= steps.size()) throw ValidationError("velocity history exhausted");
    return steps[n];
  }

  static VelocityHistory average_of(const VelocityHistory& fine, int stride) {
    if (stride < 1 || fine.steps.empty() || fine.steps.size() % (std::size_t)stride != 0)
      throw ValidationError("velocity history length is not a multiple of the stride");
    VelocityHistory coarse;
    const double inv = 1.0 / (double)stride;
    for (std::size_t s = 0; s < fine.steps.size(); s += (std::size_t)stride) {
      VelocityField acc = fine.steps[s];
      for (int k = 1; k < stride; ++k) {
        const VelocityField& f = fine.steps[s + (std::size_t)k];
        for (std::size_t t = 0; t < acc.u1.v.size(); ++t) acc.u1.v[t] += f.u1.v[t];
        for (std::size_t t = 0; t < acc.u2.v.size(); ++t) acc.u2.v[t] += f.u2.v[t];
      }
      for (double& t : acc.u1.v) t *= inv;
      for (double& t : acc.u2.v) t *= inv;
      coarse.push(acc);
    }
    return coarse;
  }
};

struct SmoothingReport {
  double raw_norm2 = 0.0;       // squared weighted norm of the raw datum
  double clamped_norm2 = 0.0;   // after the cut-off projection
  double smoothed_norm2 = 0.0;  // after the elliptic smoothing
  double gradx_norm2 = 0.0;
  double gradq_norm2 = 0.0;
  double dt = 0.0;
  CutoffReport cutoff;

  // smoothed state obeys ||psi||^2 + dt (|grad_x psi|^2 + |grad_q psi|^2)
  // <= ||clamped datum||^2 <= ||raw datum||^2
  double bound_lhs() const { return smoothed_norm2 + dt * (gradx_norm2 + gradq_norm2); }
  double bound_rhs() const { return clamped_norm2; }
};

// Elliptic mollification of the initial datum: clamp to [0, L], then solve
// (I + dt A_N + dt (n1+n2) I) per mode. One backward heat step in both
// variables; gives the discrete H1 control the first time step needs.
inline SmoothingReport smooth_initial_datum(ConfigDistribution& psi, const HermiteBasis& b,
                                            const MacGrid& g, double dt, double L) {
  SmoothingReport rep;
  rep.dt = dt;
  rep.raw_norm2 = l2M_norm2(psi, g);
  psi = apply_cutoff(psi, L, b, &rep.cutoff);
  rep.clamped_norm2 = l2M_norm2(psi, g);
  const double vol = g.cell_area();
  double gradx2 = 0.0;
  for (int m = 0; m < psi.nmodes; ++m) {
    const double c0 = 1.0 + dt * (double)(b.mode_n1(m) + b.mode_n2(m));
    HelmholtzNeumann solver(g, c0, dt, 1e-13);
    Array2 x = psi.modes[m];
    solver.solve(psi.modes[m], x, "initial datum smoothing solve");
    psi.modes[m] = x;
    const Array2 lap = apply_neumann_laplacian(x, g);
    gradx2 += vol * pairwise_dot(x.v, lap.v);
  }
  rep.gradx_norm2 = std::max(gradx2, 0.0);
  rep.smoothed_norm2 = l2M_norm2(psi, g);
  rep.gradq_norm2 = gradq_norm2(psi, b, g);
  return rep;
}

struct FpStepReport {
  long picard_iterations = 0;  // total over cells
  int picard_max = 0;          // worst cell
  long fast_path_cells = 0;    // cells solved without reprojection
  CutoffReport cutoff;         // clamp activity at the accepted states
  IterStats worst_diffusion;
};

// Caches the per-cell LU factorizations; reused across steps while the
// velocity gradient field is unchanged (a standalone kinetic run drives every
// step with the same velocity).
struct FpWorkspace {
  std::vector<DenseLU> lu;
  std::vector<std::array<double, 4>> kappa;
  bool valid = false;
};

// One kinetic step. The physical-space half is the same advect-then-diffuse
// map the macroscopic solver applies, run coefficient-wise. The configuration
// half treats relaxation and drag implicitly per cell:
//   (I + dt OU/(4 lambda) - dt D(kappa)) c = c_prev + dt D (Pi_L c - c),
// where Pi_L clamps the node values to [0, L] and reprojects. The correction
// term is lagged (Picard); when no node clamps, the correction is exactly zero
// and the single LU solve is accepted as is.
inline FpStepReport fp_step(ConfigDistribution& psi, const VelocityField& u,
                            const HermiteBasis& b, const QOperators& ops,
                            const MacGrid& g, double dt, double lambda, double eps,
                            double L, FpWorkspace* ws = nullptr) {
  require_basis_match(psi, b);
  FpStepReport rep;
  std::vector<Array2*> fields;
  fields.reserve(psi.nmodes);
  for (auto& m : psi.modes) fields.push_back(&m);
  for (Array2* f : fields) advect(*f, u, g, dt);
  std::vector<IterStats> dstats((std::size_t)psi.nmodes);
  parallel_for(psi.nmodes, [&](int lo, int hi) {
    for (int m = lo; m < hi; ++m)
      dstats[(std::size_t)m] = diffuse(*fields[(std::size_t)m], g, eps, dt,
                                       "stress diffusion solve");
  });
  for (const IterStats& st : dstats)
    if (st.iters > rep.worst_diffusion.iters) rep.worst_diffusion = st;

  Array2 k11, k12, k21, k22;
  velocity_gradient_cells(u, g, k11, k12, k21, k22);
  const int nm = psi.nmodes, ncells = psi.nx * psi.ny;

  FpWorkspace local;
  FpWorkspace& w = ws ? *ws : local;
  bool rebuild = !w.valid || (int)w.kappa.size() != ncells;
  if (!rebuild) {
    for (int t = 0; t < ncells; ++t) {
      const int i = t % psi.nx, j = t / psi.nx;
      const std::array<double, 4> kp{k11(i, j), k12(i, j), k21(i, j), k22(i, j)};
      if (kp != w.kappa[t]) {
        rebuild = true;
        break;
      }
    }
  }
  if (rebuild) {
    w.lu.assign((std::size_t)ncells, DenseLU());
    w.kappa.assign((std::size_t)ncells, {});
    parallel_for(ncells, [&](int lo, int hi) {
      std::vector<double> A((std::size_t)nm * nm);
      for (int t = lo; t < hi; ++t) {
        const int i = t % psi.nx, j = t / psi.nx;
        const std::array<double, 4> kp{k11(i, j), k12(i, j), k21(i, j), k22(i, j)};
        w.kappa[(std::size_t)t] = kp;
        for (int m = 0; m < nm; ++m)
          for (int n = 0; n < nm; ++n) {
            const std::size_t idx = (std::size_t)m * nm + n;
            double a = -dt * (kp[0] * ops.G11[idx] + kp[1] * ops.G12[idx] +
                              kp[2] * ops.G21[idx] + kp[3] * ops.G22[idx]);
            if (m == n) a += 1.0 + dt * ops.ou_diag[m] / (4.0 * lambda);
            A[idx] = a;
          }
        w.lu[(std::size_t)t] = DenseLU(A, nm);
      }
    });
    w.valid = true;
  }

  std::vector<int> cell_iters((std::size_t)ncells, 0);
  std::vector<unsigned char> cell_fast((std::size_t)ncells, 0);
  std::vector<long> cell_high((std::size_t)ncells, 0), cell_low((std::size_t)ncells, 0);
  parallel_for(ncells, [&](int lo, int hi) {
    std::vector<double> cprev(nm), c(nm), cnext(nm), rhs(nm), corr(nm), cc(nm);
    std::vector<double> vals(b.nnodes), clamped(b.nnodes), D((std::size_t)nm * nm);
    for (int t = lo; t < hi; ++t) {
      const int i = t % psi.nx, j = t / psi.nx;
      cell_coeffs(psi, i, j, cprev.data());
      const DenseLU& lu = w.lu[(std::size_t)t];
      lu.solve(cprev.data(), c.data());
      coeffs_to_values(b, c.data(), vals.data());
      int nhigh = 0, nlow = 0;
      for (int a = 0; a < b.nnodes; ++a) {
        if (vals[a] > L)
          ++nhigh;
        else if (vals[a] < -cutoff_negativity_tol)
          ++nlow;
      }
      if (nhigh + nlow == 0) {
        cell_fast[(std::size_t)t] = 1;
        cell_iters[(std::size_t)t] = 1;
        set_cell_coeffs(psi, i, j, c.data());
        continue;
      }
      // clamp active: lag the cut-off correction and iterate
      const std::array<double, 4>& kp = w.kappa[(std::size_t)t];
      for (int m = 0; m < nm; ++m)
        for (int n = 0; n < nm; ++n) {
          const std::size_t idx = (std::size_t)m * nm + n;
          D[idx] = kp[0] * ops.G11[idx] + kp[1] * ops.G12[idx] + kp[2] * ops.G21[idx] +
                   kp[3] * ops.G22[idx];
        }
      int it = 0;
      bool converged = false;
      while (it < 50) {
        ++it;
        coeffs_to_values(b, c.data(), vals.data());
        for (int a = 0; a < b.nnodes; ++a) {
          double v = vals[a];
          if (v > L)
            v = L;
          else if (v < -cutoff_negativity_tol)
            v = 0.0;
          clamped[a] = v;
        }
        values_to_coeffs(b, clamped.data(), cc.data());
        for (int m = 0; m < nm; ++m) corr[m] = cc[m] - c[m];
        for (int m = 0; m < nm; ++m)
          rhs[m] = cprev[m] + dt * pairwise_dot(&D[(std::size_t)m * nm], corr.data(),
                                                (std::size_t)nm);
        lu.solve(rhs.data(), cnext.data());
        double diff = 0.0;
        for (int m = 0; m < nm; ++m) diff = std::max(diff, std::fabs(cnext[m] - c[m]));
        c = cnext;
        if (diff < 1e-10) {
          converged = true;
          break;
        }
      }
      if (!converged)
        throw SolverError("drag cut-off iteration failed to converge at cell (" +
                          std::to_string(i) + ", " + std::to_string(j) + ")");
      cell_iters[(std::size_t)t] = it;
      coeffs_to_values(b, c.data(), vals.data());
      for (int a = 0; a < b.nnodes; ++a) {
        if (vals[a] > L)
          ++cell_high[(std::size_t)t];
        else if (vals[a] < -cutoff_negativity_tol)
          ++cell_low[(std::size_t)t];
      }
      set_cell_coeffs(psi, i, j, c.data());
    }
  });
  for (int t = 0; t < ncells; ++t) {
    rep.picard_iterations += cell_iters[(std::size_t)t];
    if (cell_iters[(std::size_t)t] > rep.picard_max) rep.picard_max = cell_iters[(std::size_t)t];
    rep.fast_path_cells += cell_fast[(std::size_t)t];
    rep.cutoff.clamped_high += cell_high[(std::size_t)t];
    rep.cutoff.clamped_low += cell_low[(std::size_t)t];
  }
  return rep;
}

// Fully implicit reference step: transport, relaxation and drag all taken at
// the new time level in one global solve (no cut-off; intended for the exact
// regime on small grids). Used to cross-check the splitting order.
inline void fp_step_monolithic(ConfigDistribution& psi, const VelocityField& u,
                               const HermiteBasis& b, const QOperators& ops,
                               const MacGrid& g, double dt, double lambda, double eps) {
  require_basis_match(psi, b);
  const int nm = psi.nmodes;
  const std::size_t ncells = (std::size_t)psi.nx * psi.ny;
  const std::size_t n = ncells * (std::size_t)nm;
  if (n > 200000) throw ValidationError("monolithic step is limited to small problems");
  const double cfl = dt * (max_abs(u.u1) / g.hx() + max_abs(u.u2) / g.hy());
  if (cfl > 1.0) throw ValidationError("advective CFL condition violated");
  Array2 k11, k12, k21, k22;
  velocity_gradient_cells(u, g, k11, k12, k21, k22);
  std::vector<double> b_rhs(n), x(n);
  for (int m = 0; m < nm; ++m)
    for (std::size_t t = 0; t < ncells; ++t) {
      b_rhs[(std::size_t)m * ncells + t] = psi.modes[m].v[t];
      x[(std::size_t)m * ncells + t] = psi.modes[m].v[t];
    }
  Array2 tmp(psi.nx, psi.ny), lap(psi.nx, psi.ny);
  std::vector<double> cin(nm), cout(nm);
  auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
    // transport part, mode by mode
    for (int m = 0; m < nm; ++m) {
      std::copy(in.begin() + (std::ptrdiff_t)m * (std::ptrdiff_t)ncells,
                in.begin() + (std::ptrdiff_t)(m + 1) * (std::ptrdiff_t)ncells,
                tmp.v.begin());
      const Array2 adv = advective_divergence(tmp, u, g);
      lap = apply_neumann_laplacian(tmp, g);
      for (std::size_t t = 0; t < ncells; ++t)
        out[(std::size_t)m * ncells + t] =
            tmp.v[t] + dt * (adv.v[t] + eps * lap.v[t]);
    }
    // configuration part, cell by cell
    for (std::size_t t = 0; t < ncells; ++t) {
      const int i = (int)(t % (std::size_t)psi.nx), j = (int)(t / (std::size_t)psi.nx);
      for (int m = 0; m < nm; ++m) cin[m] = in[(std::size_t)m * ncells + t];
      for (int m = 0; m < nm; ++m) {
        double s = ops.ou_diag[m] / (4.0 * lambda) * cin[m];
        const std::size_t row = (std::size_t)m * nm;
        double drift = 0.0;
        for (int nmode = 0; nmode < nm; ++nmode) {
          const double gsum = k11(i, j) * ops.G11[row + nmode] +
                              k12(i, j) * ops.G12[row + nmode] +
                              k21(i, j) * ops.G21[row + nmode] +
                              k22(i, j) * ops.G22[row + nmode];
          drift += gsum * cin[nmode];
        }
        cout[m] = dt * (s - drift);
      }
      for (int m = 0; m < nm; ++m) out[(std::size_t)m * ncells + t] += cout[m];
    }
  };
  bicgstab_solve(apply, b_rhs, x, 1e-12, 2000, "monolithic kinetic solve");
  for (int m = 0; m < nm; ++m)
    for (std::size_t t = 0; t < ncells; ++t)
      psi.modes[m].v[t] = x[(std::size_t)m * ncells + t];
}

}  // namespace nsfp
