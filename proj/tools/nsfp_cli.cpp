// Command-line front end: run a scenario in one of the five modes, or inspect
// a binary artifact. Exit codes: 0 ok, 2 invalid input, 3 solver failure,
// 4 failed check.

#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "nsfp/drivers.hpp"

namespace {

struct CommonArgs {
  std::string scenario_path;
  std::string output_dir;
  int threads = 1;
  bool strict = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--scenario", args.scenario_path, "scenario file")->required();
  cmd->add_option("--output", args.output_dir, "output directory (overrides scenario)");
  cmd->add_option("--threads", args.threads, "worker threads")->check(CLI::Range(1, 256));
  cmd->add_flag("--strict-stress-regime", args.strict,
                "require the coupling 4 L^2 dt <= 1");
}

nsfp::Scenario load(const CommonArgs& args, const std::string& expected_mode) {
  nsfp::Scenario sc = nsfp::parse_scenario_file(args.scenario_path);
  if (!sc.mode.empty() && sc.mode != expected_mode)
    throw nsfp::ValidationError("scenario declares mode '" + sc.mode +
                                "' but the subcommand expects '" + expected_mode + "'");
  if (!args.output_dir.empty()) sc.output_dir = args.output_dir;
  nsfp::set_thread_count(args.threads);
  return sc;
}

void print_ledger_tail(const nsfp::RunOutput& out) {
  if (out.ledger.rows.empty()) return;
  const nsfp::LedgerRow& r = out.ledger.rows.back();
  std::printf("final: time=%.6g entropy=%.6g A_2=%.6g rho_max_dev=%.3g "
              "kinetic=%.6g cutoff_events=%ld min_eig=%.3g\n",
              r.time, r.entropy, r.a2, r.rho_max_dev, r.kinetic_energy,
              out.cutoff_total, r.psd_min_eigenvalue);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-dimensional dumbbell kinetic solver and its moment closure"};
  app.require_subcommand(1);

  CommonArgs macro_args, micro_args, coupled_args, verify_args, sweep_args;
  std::string check_path;

  CLI::App* macro_cmd = app.add_subcommand("macro-run", "velocity + closed stress model");
  add_common(macro_cmd, macro_args);
  CLI::App* micro_cmd = app.add_subcommand("micro-run", "kinetic solve, frozen velocity");
  add_common(micro_cmd, micro_args);
  CLI::App* coupled_cmd = app.add_subcommand("coupled-run", "velocity + kinetic stress");
  add_common(coupled_cmd, coupled_args);
  CLI::App* verify_cmd =
      app.add_subcommand("closure-verify", "compare kinetic moments with the closed model");
  add_common(verify_cmd, verify_args);
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "cut-off / time-step resolution sweep");
  add_common(sweep_cmd, sweep_args);
  CLI::App* check_cmd = app.add_subcommand("check", "validate a snapshot or forcing file");
  check_cmd->add_option("file", check_path, "file to inspect")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : nsfp::exit_validation;
  }

  nsfp::RunOptions opts;
  opts.write_outputs = true;
  try {
    if (macro_cmd->parsed()) {
      opts.strict_stress_regime = macro_args.strict;
      const nsfp::RunOutput out = nsfp::run_macro(load(macro_args, "macro"), opts);
      print_ledger_tail(out);
    } else if (micro_cmd->parsed()) {
      opts.strict_stress_regime = micro_args.strict;
      const nsfp::RunOutput out = nsfp::run_micro(load(micro_args, "micro"), opts);
      print_ledger_tail(out);
    } else if (coupled_cmd->parsed()) {
      opts.strict_stress_regime = coupled_args.strict;
      const nsfp::RunOutput out = nsfp::run_coupled(load(coupled_args, "coupled"), opts);
      print_ledger_tail(out);
    } else if (verify_cmd->parsed()) {
      opts.strict_stress_regime = verify_args.strict;
      const nsfp::RunOutput out =
          nsfp::run_closure_verify(load(verify_args, "closure-verify"), opts);
      std::printf("closure: max=%.3e l2=%.3e exact_regime=%s\n", out.closure.overall_max,
                  out.closure.overall_l2, out.closure.exact_regime ? "yes" : "no");
      print_ledger_tail(out);
    } else if (sweep_cmd->parsed()) {
      opts.strict_stress_regime = sweep_args.strict;
      const auto rows = nsfp::run_sweep(load(sweep_args, "sweep"), opts);
      for (const nsfp::SweepRow& r : rows)
        std::printf("L=%-6g dt=%-12g closure_max=%.3e entropy_sup=%.6g A_2_sup=%.6g "
                    "A_4_sup=%.6g rho_dev=%.3g cutoff_events=%ld\n",
                    r.cutoff_L, r.dt, r.closure_max, r.entropy_sup, r.a2_sup, r.a4_sup,
                    r.rho_dev, r.cutoff_events);
    } else if (check_cmd->parsed()) {
      std::printf("%s\n", nsfp::describe_file(check_path).c_str());
    }
  } catch (const nsfp::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return nsfp::exit_validation;
  } catch (const nsfp::SolverError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return nsfp::exit_solver;
  } catch (const nsfp::CheckError& e) {
    std::fprintf(stderr, "check failed: %s\n", e.what());
    return nsfp::exit_check;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return nsfp::exit_solver;
  }
  return nsfp::exit_ok;
}
