#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "nsfp/grid.hpp"
#include "nsfp/numerics.hpp"

namespace nsfp {

// One diagnostics row per recorded step. Column set and order are part of the
// output contract; write_csv must not be reordered casually.
struct LedgerRow {
  double time = 0.0;
  double entropy = 0.0;
  double fisher_x = 0.0;
  double fisher_q = 0.0;
  double a2 = 0.0;
  double a4 = 0.0;
  double rho_max_dev = 0.0;
  double kinetic_energy = 0.0;
  double closure_error_max = 0.0;
  double closure_error_l2 = 0.0;
  long cutoff_active_count = 0;
  double psd_min_eigenvalue = 0.0;
  double floored_mass = 0.0;
};

inline const char* ledger_header() {
  return "time,entropy,fisher_x,fisher_q,A_2,A_4,rho_max_dev,kinetic_energy,"
         "closure_error_max,closure_error_l2,cutoff_active_count,"
         "psd_min_eigenvalue,floored_mass";
}

struct DiagnosticsLedger {
  std::vector<LedgerRow> rows;

  void write_csv(const std::string& path) const {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw ValidationError("cannot open ledger file for writing: " + path);
    std::fprintf(f, "%s\n", ledger_header());
    for (const LedgerRow& r : rows)
      std::fprintf(f,
                   "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                   "%ld,%.17g,%.17g\n",
                   r.time, r.entropy, r.fisher_x, r.fisher_q, r.a2, r.a4,
                   r.rho_max_dev, r.kinetic_energy, r.closure_error_max,
                   r.closure_error_l2, r.cutoff_active_count, r.psd_min_eigenvalue,
                   r.floored_mass);
    std::fclose(f);
  }
};

inline double density_max_deviation(const DensityField& rho, double ref = 1.0) {
  double m = 0.0;
  for (double v : rho.rho.v) m = std::max(m, std::fabs(v - ref));
  return m;
}

// Smallest eigenvalue of the 2x2 stress over all cells (positive
// semidefiniteness monitor).
inline double stress_min_eigenvalue(const StressField& s) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < s.s11.v.size(); ++t)
    m = std::min(m, sym2x2_min_eig(s.s11.v[t], s.s12.v[t], s.s22.v[t]));
  return m;
}

// Componentwise max and volume-weighted Frobenius L2 distance of two stress
// fields on the same grid.
inline void stress_difference_norms(const StressField& a, const StressField& b,
                                    const MacGrid& g, double& dmax, double& dl2) {
  const double vol = g.cell_area();
  dmax = 0.0;
  std::vector<double> per_cell(a.s11.v.size(), 0.0);
  for (std::size_t t = 0; t < per_cell.size(); ++t) {
    const double d11 = a.s11.v[t] - b.s11.v[t];
    const double d12 = a.s12.v[t] - b.s12.v[t];
    const double d22 = a.s22.v[t] - b.s22.v[t];
    dmax = std::max({dmax, std::fabs(d11), std::fabs(d12), std::fabs(d22)});
    per_cell[t] = vol * (d11 * d11 + 2.0 * d12 * d12 + d22 * d22);
  }
  dl2 = std::sqrt(pairwise_sum(per_cell));
}

// Step-by-step comparison of the kinetic moments against the macroscopic
// trajectory they should reproduce.
struct ClosureReport {
  std::vector<double> step_max, step_l2;
  double overall_max = 0.0;
  double overall_l2 = 0.0;  // worst per-step L2
  double rho_max_dev = 0.0; // worst |rho_micro - rho_macro| over cells and steps
  bool exact_regime = true; // no clamp activity and matched discretizations
  long cutoff_events = 0;

  void record(const StressField& micro, const StressField& macro,
              const DensityField& rho_micro, const DensityField& rho_macro,
              const MacGrid& g, long cutoff_count) {
    double dmax, dl2;
    stress_difference_norms(micro, macro, g, dmax, dl2);
    step_max.push_back(dmax);
    step_l2.push_back(dl2);
    overall_max = std::max(overall_max, dmax);
    overall_l2 = std::max(overall_l2, dl2);
    for (std::size_t t = 0; t < rho_micro.rho.v.size(); ++t)
      rho_max_dev = std::max(rho_max_dev, std::fabs(rho_micro.rho.v[t] - rho_macro.rho.v[t]));
    cutoff_events += cutoff_count;
    if (cutoff_count > 0) exact_regime = false;
  }
};

// Global free-energy audit in the doubled pairing |u|^2 + 2k entropy: that
// combination plus the accumulated charges nu |grad u|^2, 8 k eps fisher_x,
// (k/lambda) fisher_q must stay below its initial value plus twice the
// forcing work, up to ten percent slack. The charge keeps only half of the
// viscous and configuration relaxation actually available, so the margin
// absorbs the splitting error. With no forcing the total itself must be
// stepwise nonincreasing.
struct EnergyRow {
  double time = 0.0;
  double kinetic = 0.0;
  double entropy = 0.0;
  double total = 0.0;       // kinetic + k * entropy
  double grad_norm2 = 0.0;  // |grad u|^2 at end of step
  double fisher_x = 0.0;
  double fisher_q = 0.0;
  double work_increment = 0.0;  // dt <f, u> over the step
};

struct EnergyReport {
  bool inequality_ok = true;
  bool monotone_ok = true;
  double worst_excess = 0.0;       // max of lhs - rhs over steps, floored at 0
  double worst_increase = 0.0;     // max stepwise increase of the total, floored at 0
};

inline EnergyReport energy_estimate_check(const std::vector<EnergyRow>& rows, double nu,
                                          double k, double eps, double lambda, double dt,
                                          bool forced) {
  EnergyReport rep;
  if (rows.empty()) return rep;
  const double e0 = 2.0 * rows[0].total;
  double dissipation = 0.0, work = 0.0;
  for (std::size_t n = 1; n < rows.size(); ++n) {
    const EnergyRow& r = rows[n];
    dissipation += dt * (nu * r.grad_norm2 + 8.0 * k * eps * r.fisher_x +
                         (k / lambda) * r.fisher_q);
    work += 2.0 * r.work_increment;
    const double slack = 0.1 * (e0 + std::fabs(work)) + 1e-12;
    const double excess = (2.0 * r.total + dissipation) - (e0 + work + slack);
    rep.worst_excess = std::max(rep.worst_excess, excess);
    if (excess > 0.0) rep.inequality_ok = false;
    if (!forced) {
      const double inc = r.total - rows[n - 1].total;
      rep.worst_increase = std::max(rep.worst_increase, inc);
      if (inc > 1e-12) rep.monotone_ok = false;
    }
  }
  return rep;
}

// One row of the resolution sweep over cut-off / time-step pairs.
struct SweepRow {
  double cutoff_L = 0.0;
  double dt = 0.0;
  double closure_max = 0.0;
  double entropy_sup = 0.0;
  double fisher_q_sup = 0.0;
  double a2_sup = 0.0;
  double a4_sup = 0.0;
  double rho_dev = 0.0;
  long cutoff_events = 0;
};

inline void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw ValidationError("cannot open sweep file for writing: " + path);
  std::fprintf(f, "cutoff_L,dt,closure_max,entropy_sup,fisher_q_sup,A_2_sup,A_4_sup,"
                  "rho_dev,cutoff_events\n");
  for (const SweepRow& r : rows)
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%ld\n", r.cutoff_L,
                 r.dt, r.closure_max, r.entropy_sup, r.fisher_q_sup, r.a2_sup, r.a4_sup,
                 r.rho_dev, r.cutoff_events);
  std::fclose(f);
}

}  // namespace nsfp
