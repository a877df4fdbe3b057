#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "nsfp/diagnostics.hpp"
#include "nsfp/fp_solver.hpp"
#include "nsfp/ob_solver.hpp"
#include "nsfp/scenario.hpp"
#include "nsfp/snapshot.hpp"

namespace nsfp {

struct RunOptions {
  bool strict_stress_regime = false;
  bool write_outputs = false;
};

struct RunOutput {
  DiagnosticsLedger ledger;
  std::vector<EnergyRow> energy;
  VelocityHistory history;  // velocity that drove each step
  VelocityField u;
  ObState ob;
  ConfigDistribution psi;
  SmoothingReport smoothing;
  ClosureReport closure;
  long cutoff_total = 0;
};

inline int step_count(const ModelParams& p) {
  const double raw = p.t_final / p.dt;
  const long n = std::lround(raw);
  if (n < 1 || std::fabs(raw - (double)n) > 1e-8 * std::max(1.0, raw))
    throw ValidationError("t_final must be a positive integer multiple of dt");
  return (int)n;
}

inline BodyForce load_forcing(const Scenario& sc) {
  BodyForce f = make_forcing(sc.forcing);
  if (f.type == BodyForce::Type::file)
    read_forcing_file(forcing_file_path(sc.forcing), f);
  return f;
}

namespace detail {

inline LedgerRow micro_ledger_row(double time, const ConfigDistribution& psi,
                                  const HermiteBasis& b, const MacGrid& g,
                                  const VelocityField& u, long cutoff_count) {
  LedgerRow r;
  r.time = time;
  const EntropyFisher ef = entropy_fisher(psi, b, g);
  r.entropy = ef.entropy;
  r.fisher_x = ef.fisher_x;
  r.fisher_q = ef.fisher_q;
  r.floored_mass = ef.floored_mass;
  r.a2 = moment_r(psi, b, g, 2);
  r.a4 = (b.nq + 4 <= 2 * b.count - 1) ? moment_r(psi, b, g, 4) : 0.0;
  StressField s;
  DensityField rho;
  kramers_stress(psi, b, s, rho);
  r.rho_max_dev = density_max_deviation(rho);
  r.kinetic_energy = kinetic_energy(u, g);
  r.cutoff_active_count = cutoff_count;
  r.psd_min_eigenvalue = stress_min_eigenvalue(s);
  return r;
}

inline LedgerRow macro_ledger_row(double time, const ObState& ob, const MacGrid& g,
                                  const VelocityField& u) {
  LedgerRow r;
  r.time = time;
  const double vol = g.cell_area();
  std::vector<double> tr(ob.sigma.s11.v.size());
  for (std::size_t t = 0; t < tr.size(); ++t)
    tr[t] = vol * (ob.sigma.s11.v[t] + ob.sigma.s22.v[t]);
  r.a2 = pairwise_sum(tr);
  r.rho_max_dev = density_max_deviation(ob.rho);
  r.kinetic_energy = kinetic_energy(u, g);
  r.psd_min_eigenvalue = stress_min_eigenvalue(ob.sigma);
  return r;
}

inline std::string snapshot_name(const std::string& dir, std::uint64_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshot_%06llu.nsfp", (unsigned long long)step);
  return dir + "/" + buf;
}

inline void ensure_output_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory: " + dir);
}

}  // namespace detail

// Prescribed-velocity macroscopic run (Navier-Stokes coupled to the stress
// through the elastic force, stress evolved by the closed model).
inline RunOutput run_macro(const Scenario& sc, const RunOptions& opts) {
  validate_scenario(sc, opts.strict_stress_regime);
  const MacGrid& g = sc.grid;
  const ModelParams& p = sc.params;
  const int nsteps = step_count(p);
  const HermiteBasis basis = build_basis(sc.nq, sc.quad_count);
  const ConfigDistribution psi0 = make_initial_psihat(sc.psihat, g, basis);
  RunOutput out;
  make_initial_ob(sc.sigma_init, psi0, basis, g, out.ob.sigma, out.ob.rho);
  out.u = make_initial_velocity(sc.velocity, g);
  BodyForce bf = load_forcing(sc);
  Array2 f1, f2;
  bf.eval(g, f1, f2);
  out.ledger.rows.push_back(detail::macro_ledger_row(0.0, out.ob, g, out.u));
  Array2 t11, t12, t22;
  for (int n = 1; n <= nsteps; ++n) {
    extra_stress(out.ob.sigma, out.ob.rho, p.k, t11, t12, t22);
    ns_step(out.u, f1, f2, t11, t12, t22, g, p.nu, p.dt);
    ob_step(out.ob, out.u, g, p.dt, p.lambda, p.eps);
    out.history.push(out.u);
    out.ledger.rows.push_back(detail::macro_ledger_row(n * p.dt, out.ob, g, out.u));
    if (opts.write_outputs && sc.snapshot_stride > 0 && n % sc.snapshot_stride == 0) {
      detail::ensure_output_dir(sc.output_dir);
      write_snapshot_macro(detail::snapshot_name(sc.output_dir, (std::uint64_t)n), g,
                           out.u, out.ob.sigma, out.ob.rho, n * p.dt, (std::uint64_t)n,
                           sc.nq);
    }
  }
  if (opts.write_outputs) {
    detail::ensure_output_dir(sc.output_dir);
    out.ledger.write_csv(sc.output_dir + "/ledger.csv");
    write_snapshot_macro(sc.output_dir + "/final.nsfp", g, out.u, out.ob.sigma, out.ob.rho,
                         nsteps * p.dt, (std::uint64_t)nsteps, sc.nq);
  }
  return out;
}

// Kinetic run with the velocity held at its initial profile (no momentum
// feedback); isolates the configuration dynamics.
inline RunOutput run_micro(const Scenario& sc, const RunOptions& opts) {
  validate_scenario(sc, opts.strict_stress_regime);
  const MacGrid& g = sc.grid;
  const ModelParams& p = sc.params;
  const int nsteps = step_count(p);
  const HermiteBasis basis = build_basis(sc.nq, sc.quad_count);
  const QOperators ops = build_qoperators(basis);
  RunOutput out;
  out.psi = make_initial_psihat(sc.psihat, g, basis);
  out.smoothing = smooth_initial_datum(out.psi, basis, g, p.dt, p.cutoff_L);
  out.u = make_initial_velocity(sc.velocity, g);
  const long smoothing_clamps =
      out.smoothing.cutoff.clamped_high + out.smoothing.cutoff.clamped_low;
  out.ledger.rows.push_back(
      detail::micro_ledger_row(0.0, out.psi, basis, g, out.u, smoothing_clamps));
  FpWorkspace ws;
  for (int n = 1; n <= nsteps; ++n) {
    const FpStepReport rep =
        fp_step(out.psi, out.u, basis, ops, g, p.dt, p.lambda, p.eps, p.cutoff_L, &ws);
    const long clamps = rep.cutoff.clamped_high + rep.cutoff.clamped_low;
    out.cutoff_total += clamps;
    out.history.push(out.u);
    out.ledger.rows.push_back(
        detail::micro_ledger_row(n * p.dt, out.psi, basis, g, out.u, clamps));
    if (opts.write_outputs && sc.snapshot_stride > 0 && n % sc.snapshot_stride == 0) {
      detail::ensure_output_dir(sc.output_dir);
      write_snapshot_micro(detail::snapshot_name(sc.output_dir, (std::uint64_t)n), g,
                           out.psi, n * p.dt, (std::uint64_t)n);
    }
  }
  if (opts.write_outputs) {
    detail::ensure_output_dir(sc.output_dir);
    out.ledger.write_csv(sc.output_dir + "/ledger.csv");
    write_snapshot_micro(sc.output_dir + "/final.nsfp", g, out.psi, nsteps * p.dt,
                         (std::uint64_t)nsteps);
  }
  return out;
}

// Fully coupled run: Navier-Stokes forced by the Kramers stress of the kinetic
// state, kinetic state transported and sheared by the new velocity.
inline RunOutput run_coupled(const Scenario& sc, const RunOptions& opts) {
  validate_scenario(sc, opts.strict_stress_regime);
  const MacGrid& g = sc.grid;
  const ModelParams& p = sc.params;
  const int nsteps = step_count(p);
  const HermiteBasis basis = build_basis(sc.nq, sc.quad_count);
  const QOperators ops = build_qoperators(basis);
  RunOutput out;
  out.psi = make_initial_psihat(sc.psihat, g, basis);
  out.smoothing = smooth_initial_datum(out.psi, basis, g, p.dt, p.cutoff_L);
  out.u = make_initial_velocity(sc.velocity, g);
  BodyForce bf = load_forcing(sc);
  Array2 f1, f2;
  bf.eval(g, f1, f2);
  const long smoothing_clamps =
      out.smoothing.cutoff.clamped_high + out.smoothing.cutoff.clamped_low;
  {
    const LedgerRow r0 =
        detail::micro_ledger_row(0.0, out.psi, basis, g, out.u, smoothing_clamps);
    out.ledger.rows.push_back(r0);
    EnergyRow e0;
    e0.time = 0.0;
    e0.kinetic = r0.kinetic_energy;
    e0.entropy = r0.entropy;
    e0.total = e0.kinetic + p.k * e0.entropy;
    e0.grad_norm2 = grad_norm2(out.u, g);
    e0.fisher_x = r0.fisher_x;
    e0.fisher_q = r0.fisher_q;
    out.energy.push_back(e0);
  }
  FpWorkspace ws;
  StressField sig;
  DensityField rho;
  Array2 t11, t12, t22;
  for (int n = 1; n <= nsteps; ++n) {
    kramers_stress(out.psi, basis, sig, rho);
    extra_stress(sig, rho, p.k, t11, t12, t22);
    ns_step(out.u, f1, f2, t11, t12, t22, g, p.nu, p.dt);
    const FpStepReport rep =
        fp_step(out.psi, out.u, basis, ops, g, p.dt, p.lambda, p.eps, p.cutoff_L, &ws);
    const long clamps = rep.cutoff.clamped_high + rep.cutoff.clamped_low;
    out.cutoff_total += clamps;
    out.history.push(out.u);
    const LedgerRow r =
        detail::micro_ledger_row(n * p.dt, out.psi, basis, g, out.u, clamps);
    out.ledger.rows.push_back(r);
    EnergyRow e;
    e.time = n * p.dt;
    e.kinetic = r.kinetic_energy;
    e.entropy = r.entropy;
    e.total = e.kinetic + p.k * e.entropy;
    e.grad_norm2 = grad_norm2(out.u, g);
    e.fisher_x = r.fisher_x;
    e.fisher_q = r.fisher_q;
    e.work_increment = p.dt * force_inner_product(f1, f2, out.u, g);
    out.energy.push_back(e);
    if (opts.write_outputs && sc.snapshot_stride > 0 && n % sc.snapshot_stride == 0) {
      detail::ensure_output_dir(sc.output_dir);
      write_snapshot_coupled(detail::snapshot_name(sc.output_dir, (std::uint64_t)n), g,
                             out.u, out.psi, n * p.dt, (std::uint64_t)n);
    }
  }
  if (opts.write_outputs) {
    detail::ensure_output_dir(sc.output_dir);
    out.ledger.write_csv(sc.output_dir + "/ledger.csv");
    write_snapshot_coupled(sc.output_dir + "/final.nsfp", g, out.u, out.psi,
                           nsteps * p.dt, (std::uint64_t)nsteps);
  }
  return out;
}

// Closure verification. A macroscopic pass (Navier-Stokes + closed stress
// model) records its velocities; a kinetic pass is then driven by exactly
// those velocities and its second moments are compared step by step against
// the macroscopic stress. With ob_dt_halving = h > 0 the macroscopic side runs
// at dt / 2^h and the kinetic side sees window-averaged velocities, which
// turns the identity into a first-order-in-dt comparison.
inline RunOutput run_closure_verify(const Scenario& sc, const RunOptions& opts) {
  validate_scenario(sc, opts.strict_stress_regime);
  const MacGrid& g = sc.grid;
  const ModelParams& p = sc.params;
  const int nsteps = step_count(p);
  const int stride = 1 << sc.ob_dt_halving;
  const double dtm = p.dt / (double)stride;
  const HermiteBasis basis = build_basis(sc.nq, sc.quad_count);
  const QOperators ops = build_qoperators(basis);
  RunOutput out;
  out.psi = make_initial_psihat(sc.psihat, g, basis);
  out.smoothing = smooth_initial_datum(out.psi, basis, g, p.dt, p.cutoff_L);
  StressField sig0;
  DensityField rho0;
  kramers_stress(out.psi, basis, sig0, rho0);

  // macroscopic pass
  const VelocityField u0 = make_initial_velocity(sc.velocity, g);
  out.u = u0;
  BodyForce bf = load_forcing(sc);
  Array2 f1, f2;
  bf.eval(g, f1, f2);
  out.ob = ObState{sig0, rho0};
  VelocityHistory fine;
  std::vector<StressField> macro_sigma;
  std::vector<DensityField> macro_rho;
  macro_sigma.reserve((std::size_t)nsteps);
  macro_rho.reserve((std::size_t)nsteps);
  Array2 t11, t12, t22;
  for (int n = 1; n <= nsteps * stride; ++n) {
    extra_stress(out.ob.sigma, out.ob.rho, p.k, t11, t12, t22);
    ns_step(out.u, f1, f2, t11, t12, t22, g, p.nu, dtm);
    ob_step(out.ob, out.u, g, dtm, p.lambda, p.eps);
    fine.push(out.u);
    if (n % stride == 0) {
      macro_sigma.push_back(out.ob.sigma);
      macro_rho.push_back(out.ob.rho);
    }
  }

  // kinetic pass, driven by the recorded velocities
  out.history = stride == 1 ? std::move(fine) : VelocityHistory::average_of(fine, stride);
  if (stride != 1) out.closure.exact_regime = false;
  const long smoothing_clamps =
      out.smoothing.cutoff.clamped_high + out.smoothing.cutoff.clamped_low;
  if (smoothing_clamps > 0) out.closure.exact_regime = false;
  out.ledger.rows.push_back(
      detail::micro_ledger_row(0.0, out.psi, basis, g, u0, smoothing_clamps));
  FpWorkspace ws;
  StressField sm;
  DensityField rm;
  for (int n = 1; n <= nsteps; ++n) {
    const FpStepReport rep = fp_step(out.psi, out.history.at((std::size_t)n - 1), basis,
                                     ops, g, p.dt, p.lambda, p.eps, p.cutoff_L, &ws);
    const long clamps = rep.cutoff.clamped_high + rep.cutoff.clamped_low;
    out.cutoff_total += clamps;
    kramers_stress(out.psi, basis, sm, rm);
    out.closure.record(sm, macro_sigma[(std::size_t)n - 1], rm,
                       macro_rho[(std::size_t)n - 1], g, clamps);
    LedgerRow r = detail::micro_ledger_row(n * p.dt, out.psi, basis, g,
                                           out.history.at((std::size_t)n - 1), clamps);
    r.closure_error_max = out.closure.step_max.back();
    r.closure_error_l2 = out.closure.step_l2.back();
    out.ledger.rows.push_back(r);
  }
  if (opts.write_outputs) {
    detail::ensure_output_dir(sc.output_dir);
    out.ledger.write_csv(sc.output_dir + "/ledger.csv");
    write_snapshot_micro(sc.output_dir + "/final.nsfp", g, out.psi, nsteps * p.dt,
                         (std::uint64_t)nsteps);
    write_snapshot_macro(sc.output_dir + "/macro_final.nsfp", g, out.u, out.ob.sigma,
                         out.ob.rho, nsteps * p.dt, (std::uint64_t)(nsteps * stride),
                         sc.nq);
  }
  return out;
}

// Resolution sweep over (cutoff_L, dt) pairs; each pair must satisfy the
// stress-regime coupling 4 L^2 dt <= 1 and runs a full closure verification.
inline std::vector<SweepRow> run_sweep(const Scenario& sc, const RunOptions& opts) {
  validate_scenario(sc, opts.strict_stress_regime);
  const auto pairs = parse_sweep_pairs(sc.sweep_pairs);
  std::vector<SweepRow> rows;
  for (const auto& [L, dtp] : pairs) {
    if (4.0 * L * L * dtp > 1.0 + 1e-12)
      throw ValidationError("sweep pair violates the stress-regime coupling 4 L^2 dt <= 1");
    Scenario run = sc;
    run.params.cutoff_L = L;
    run.params.dt = dtp;
    run.mode = "closure-verify";
    run.ob_dt_halving = 0;
    RunOptions sub = opts;
    sub.write_outputs = false;
    const RunOutput r = run_closure_verify(run, sub);
    SweepRow row;
    row.cutoff_L = L;
    row.dt = dtp;
    row.closure_max = r.closure.overall_max;
    for (const LedgerRow& lr : r.ledger.rows) {
      row.entropy_sup = std::max(row.entropy_sup, lr.entropy);
      row.fisher_q_sup = std::max(row.fisher_q_sup, lr.fisher_q);
      row.a2_sup = std::max(row.a2_sup, lr.a2);
      row.a4_sup = std::max(row.a4_sup, lr.a4);
      row.rho_dev = std::max(row.rho_dev, lr.rho_max_dev);
    }
    row.cutoff_events = r.closure.cutoff_events +
                        r.smoothing.cutoff.clamped_high + r.smoothing.cutoff.clamped_low;
    rows.push_back(row);
  }
  if (opts.write_outputs) {
    detail::ensure_output_dir(sc.output_dir);
    write_sweep_csv(rows, sc.output_dir + "/sweep.csv");
  }
  return rows;
}

// Evolves two stress states under the same prescribed velocity and monitors
// the squared distance against the exponential stability bound.
inline GronwallMonitor ob_contraction_run(const std::string& velocity_spec,
                                          const MacGrid& g, ObState a, ObState b,
                                          double dt, int nsteps, double lambda,
                                          double eps) {
  const VelocityField u = make_initial_velocity(velocity_spec, g);
  const double wmax = velocity_gradient_max(u, g);
  GronwallMonitor mon;
  mon.start(stress_diff_norm2(a.sigma, b.sigma, g));
  for (int n = 1; n <= nsteps; ++n) {
    ob_step(a, u, g, dt, lambda, eps);
    ob_step(b, u, g, dt, lambda, eps);
    mon.record(stress_diff_norm2(a.sigma, b.sigma, g), wmax, dt, lambda);
  }
  return mon;
}

// Human-readable summary of a binary artifact; throws CheckError when the file
// is malformed.
inline std::string describe_file(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw CheckError("cannot open file: " + path);
  char magic[4] = {0, 0, 0, 0};
  const std::size_t got = std::fread(magic, 1, 4, f);
  std::fclose(f);
  if (got != 4) throw CheckError("file too short: " + path);
  std::ostringstream os;
  if (std::memcmp(magic, "NSFP", 4) == 0) {
    const Snapshot s = read_snapshot(path);
    static const char* names[3] = {"macro", "micro", "coupled"};
    os << "snapshot ok: mode=" << names[s.mode] << " nx=" << s.nx << " ny=" << s.ny
       << " nq=" << s.nq << " time=" << s.time << " step=" << s.step;
    if (s.mode == 0 || s.mode == 2) {
      double umax = 0.0;
      for (double v : s.u1) umax = std::max(umax, std::fabs(v));
      for (double v : s.u2) umax = std::max(umax, std::fabs(v));
      os << " max|u|=" << umax;
    }
    if (s.mode == 0) {
      double mineig = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < s.s11.size(); ++t)
        mineig = std::min(mineig, sym2x2_min_eig(s.s11[t], s.s12[t], s.s22[t]));
      os << " min_eig(sigma)=" << mineig;
    }
    if (!s.modes.empty()) {
      double c0min = s.modes[0][0], c0max = s.modes[0][0];
      for (double v : s.modes[0]) {
        c0min = std::min(c0min, v);
        c0max = std::max(c0max, v);
      }
      os << " rho_range=[" << c0min << ", " << c0max << "]";
    }
    return os.str();
  }
  if (std::memcmp(magic, "NSFF", 4) == 0) {
    BodyForce bf;
    try {
      read_forcing_file(path, bf);
    } catch (const ValidationError& e) {
      throw CheckError(e.what());
    }
    double fmax = 0.0;
    for (double v : bf.file_f1) fmax = std::max(fmax, std::fabs(v));
    for (double v : bf.file_f2) fmax = std::max(fmax, std::fabs(v));
    os << "forcing ok: nx=" << bf.fnx << " ny=" << bf.fny << " max|f|=" << fmax;
    return os.str();
  }
  throw CheckError("unrecognized file format: " + path);
}

}  // namespace nsfp
