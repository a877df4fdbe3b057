#pragma once

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nsfp/grid.hpp"
#include "nsfp/hermite.hpp"
#include "nsfp/ns_solver.hpp"
#include "nsfp/params.hpp"
#include "nsfp/qspace.hpp"

namespace nsfp {

// Declarative run description. Sections: [params], [grid], [basis], [initial],
// [forcing], [run]; '#' starts a comment; unknown keys are errors with line
// numbers so typos do not silently fall back to defaults.
struct Scenario {
  ModelParams params;
  MacGrid grid;
  int nq = 4;
  int quad_count = 0;  // 0 picks nq + 2
  std::string velocity = "rest";        // rest | shear:<rate> | vortex:<amp>
  std::string psihat = "equilibrium";   // equilibrium | perturbed:<amp>
  std::string sigma_init = "kramers";   // kramers | identity
  std::string forcing = "none";         // none | constant:<fx>,<fy> | shear:<amp> | vortex:<amp> | file:<path>
  std::string mode;                     // macro | micro | coupled | closure-verify | sweep (optional)
  std::string output_dir = "out";
  int snapshot_stride = 0;              // 0 writes only the final snapshot
  int ob_dt_halving = 0;                // closure-verify: macro side runs at dt / 2^h
  std::string sweep_pairs = "4:0.015625,8:0.00390625,16:0.0009765625";
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace((unsigned char)s[a])) ++a;
  while (b > a && std::isspace((unsigned char)s[b - 1])) --b;
  return s.substr(a, b - a);
}

inline double parse_double(const std::string& v, const std::string& key, int line) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ValidationError("scenario line " + std::to_string(line) + ": value for '" +
                          key + "' is not a number");
  }
}

inline int parse_int(const std::string& v, const std::string& key, int line) {
  try {
    std::size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ValidationError("scenario line " + std::to_string(line) + ": value for '" +
                          key + "' is not an integer");
  }
}

}  // namespace detail

inline Scenario parse_scenario_text(const std::string& text) {
  Scenario sc;
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string s = detail::trim(raw);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ValidationError("scenario line " + std::to_string(line) +
                              ": malformed section header");
      section = s.substr(1, s.size() - 2);
      if (section != "params" && section != "grid" && section != "basis" &&
          section != "initial" && section != "forcing" && section != "run")
        throw ValidationError("scenario line " + std::to_string(line) +
                              ": unknown section [" + section + "]");
      continue;
    }
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ValidationError("scenario line " + std::to_string(line) +
                            ": expected key = value");
    if (section.empty())
      throw ValidationError("scenario line " + std::to_string(line) +
                            ": key outside any section");
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string val = detail::trim(s.substr(eq + 1));
    auto unknown = [&]() {
      throw ValidationError("scenario line " + std::to_string(line) + ": unknown key '" +
                            key + "' in section [" + section + "]");
    };
    if (section == "params") {
      if (key == "nu")
        sc.params.nu = detail::parse_double(val, key, line);
      else if (key == "eps")
        sc.params.eps = detail::parse_double(val, key, line);
      else if (key == "lambda")
        sc.params.lambda = detail::parse_double(val, key, line);
      else if (key == "k")
        sc.params.k = detail::parse_double(val, key, line);
      else if (key == "cutoff_L")
        sc.params.cutoff_L = detail::parse_double(val, key, line);
      else if (key == "dt")
        sc.params.dt = detail::parse_double(val, key, line);
      else if (key == "t_final")
        sc.params.t_final = detail::parse_double(val, key, line);
      else if (key == "d")
        sc.params.d = detail::parse_int(val, key, line);
      else
        unknown();
    } else if (section == "grid") {
      if (key == "nx")
        sc.grid.nx = detail::parse_int(val, key, line);
      else if (key == "ny")
        sc.grid.ny = detail::parse_int(val, key, line);
      else if (key == "lx")
        sc.grid.lx = detail::parse_double(val, key, line);
      else if (key == "ly")
        sc.grid.ly = detail::parse_double(val, key, line);
      else
        unknown();
    } else if (section == "basis") {
      if (key == "nq")
        sc.nq = detail::parse_int(val, key, line);
      else if (key == "quad_count")
        sc.quad_count = detail::parse_int(val, key, line);
      else
        unknown();
    } else if (section == "initial") {
      if (key == "velocity")
        sc.velocity = val;
      else if (key == "psihat")
        sc.psihat = val;
      else if (key == "sigma")
        sc.sigma_init = val;
      else
        unknown();
    } else if (section == "forcing") {
      if (key == "type")
        sc.forcing = val;
      else
        unknown();
    } else {  // run
      if (key == "mode")
        sc.mode = val;
      else if (key == "output_dir")
        sc.output_dir = val;
      else if (key == "snapshot_stride")
        sc.snapshot_stride = detail::parse_int(val, key, line);
      else if (key == "ob_dt_halving")
        sc.ob_dt_halving = detail::parse_int(val, key, line);
      else if (key == "sweep_pairs")
        sc.sweep_pairs = val;
      else
        unknown();
    }
  }
  return sc;
}

inline Scenario parse_scenario_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_scenario_text(buf.str());
}

inline void validate_scenario(const Scenario& sc, bool strict_stress_regime = false) {
  if (auto e = validate_params(sc.params, strict_stress_regime)) throw ValidationError(*e);
  if (auto e = validate_grid(sc.grid)) throw ValidationError(*e);
  if (sc.nq < 2) throw ValidationError("nq must be at least 2");
  if (sc.quad_count != 0 && sc.quad_count < sc.nq + 2)
    throw ValidationError("quad_count must be at least nq + 2");
  if (!sc.mode.empty() && sc.mode != "macro" && sc.mode != "micro" &&
      sc.mode != "coupled" && sc.mode != "closure-verify" && sc.mode != "sweep")
    throw ValidationError("unknown run mode: " + sc.mode);
  if (sc.snapshot_stride < 0) throw ValidationError("snapshot_stride must be nonnegative");
  if (sc.ob_dt_halving < 0 || sc.ob_dt_halving > 12)
    throw ValidationError("ob_dt_halving must lie in [0, 12]");
}

namespace detail {

// "name" or "name:a" or "name:a,b" -> name plus numeric arguments
inline std::string split_spec(const std::string& spec, std::vector<double>& args,
                              std::string* tail = nullptr) {
  args.clear();
  const std::size_t colon = spec.find(':');
  if (colon == std::string::npos) return spec;
  const std::string name = spec.substr(0, colon);
  const std::string rest = spec.substr(colon + 1);
  if (tail) {
    *tail = rest;
    return name;
  }
  std::istringstream in(rest);
  std::string piece;
  while (std::getline(in, piece, ',')) {
    try {
      args.push_back(std::stod(piece));
    } catch (const std::exception&) {
      throw ValidationError("malformed numeric argument in '" + spec + "'");
    }
  }
  return name;
}

}  // namespace detail

// Discretely divergence-free initial velocities. The vortex comes from a
// corner stream function, so its MAC divergence vanishes identically and the
// walls are no-slip; the shear profile is divergence-free but slips at the
// walls (useful for homogeneous-flow checks).
inline VelocityField make_initial_velocity(const std::string& spec, const MacGrid& g) {
  std::vector<double> args;
  const std::string name = detail::split_spec(spec, args);
  VelocityField u = VelocityField::zero(g);
  if (name == "rest") {
    if (!args.empty()) throw ValidationError("velocity 'rest' takes no arguments");
    return u;
  }
  if (name == "shear") {
    if (args.size() != 1) throw ValidationError("velocity 'shear' needs one rate");
    const double rate = args[0];
    for (int j = 0; j < g.ny; ++j) {
      const double v = rate * (g.yc(j) - 0.5 * g.ly);
      for (int i = 0; i <= g.nx; ++i) u.u1(i, j) = v;
    }
    return u;
  }
  if (name == "vortex") {
    if (args.size() != 1) throw ValidationError("velocity 'vortex' needs one amplitude");
    const double amp = args[0];
    Array2 stream(g.nx + 1, g.ny + 1);
    for (int j = 0; j <= g.ny; ++j)
      for (int i = 0; i <= g.nx; ++i) {
        // sin(pi) is only zero to round-off; pin the wall ring so the normal
        // wall velocities vanish exactly, not just to 1e-16
        const double sx = (i == 0 || i == g.nx) ? 0.0 : std::sin(M_PI * g.xf(i) / g.lx);
        const double sy = (j == 0 || j == g.ny) ? 0.0 : std::sin(M_PI * g.yf(j) / g.ly);
        stream(i, j) = amp * sx * sx * sy * sy;
      }
    const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i <= g.nx; ++i)
        u.u1(i, j) = (stream(i, j + 1) - stream(i, j)) * ihy;
    for (int j = 0; j <= g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        u.u2(i, j) = -(stream(i + 1, j) - stream(i, j)) * ihx;
    return u;
  }
  throw ValidationError("unknown velocity profile: " + spec);
}

// Configuration datum in product form,
//   psihat = (1 + s(x) (q1^2 - 1)) (1 + r(x) (q2^2 - 1)),
// with s, r in [0, amp]. Positive for amp < 1, unit mass exactly (the lowest
// mode is untouched), anisotropic with x-dependent normal stresses.
inline ConfigDistribution make_initial_psihat(const std::string& spec, const MacGrid& g,
                                              const HermiteBasis& b) {
  std::vector<double> args;
  const std::string name = detail::split_spec(spec, args);
  ConfigDistribution psi = ConfigDistribution::equilibrium(g, b);
  if (name == "equilibrium") {
    if (!args.empty()) throw ValidationError("psihat 'equilibrium' takes no arguments");
    return psi;
  }
  if (name == "perturbed") {
    if (args.size() != 1) throw ValidationError("psihat 'perturbed' needs one amplitude");
    const double amp = args[0];
    if (!(amp >= 0.0) || !(amp < 1.0))
      throw ValidationError("perturbation amplitude must lie in [0, 1)");
    const double r2 = std::sqrt(2.0);
    const int m20 = b.mode_index(2, 0), m02 = b.mode_index(0, 2), m22 = b.mode_index(2, 2);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double sx = std::sin(2.0 * M_PI * g.xc(i) / g.lx) *
                          std::sin(2.0 * M_PI * g.yc(j) / g.ly);
        const double cx = std::cos(2.0 * M_PI * g.xc(i) / g.lx) *
                          std::sin(2.0 * M_PI * g.yc(j) / g.ly);
        const double s = amp * (0.5 + 0.5 * sx);
        const double r = amp * (0.5 + 0.5 * cx);
        psi.modes[m20](i, j) = r2 * s;  // (q1^2 - 1) = sqrt(2) h2(q1)
        psi.modes[m02](i, j) = r2 * r;
        psi.modes[m22](i, j) = 2.0 * s * r;
      }
    return psi;
  }
  throw ValidationError("unknown psihat profile: " + spec);
}

inline BodyForce make_forcing(const std::string& spec) {
  std::vector<double> args;
  std::string tail;
  const std::size_t colon = spec.find(':');
  const std::string name = colon == std::string::npos ? spec : spec.substr(0, colon);
  BodyForce f;
  if (name == "none") {
    f.type = BodyForce::Type::none;
    return f;
  }
  if (name == "constant") {
    detail::split_spec(spec, args);
    if (args.size() != 2) throw ValidationError("forcing 'constant' needs fx,fy");
    f.type = BodyForce::Type::constant;
    f.fx = args[0];
    f.fy = args[1];
    return f;
  }
  if (name == "shear" || name == "vortex") {
    detail::split_spec(spec, args);
    if (args.size() != 1) throw ValidationError("forcing '" + name + "' needs one amplitude");
    f.type = name == "shear" ? BodyForce::Type::shear : BodyForce::Type::vortex;
    f.amp = args[0];
    return f;
  }
  if (name == "file") {
    if (colon == std::string::npos || colon + 1 >= spec.size())
      throw ValidationError("forcing 'file' needs a path");
    f.type = BodyForce::Type::file;
    // payload loaded later by the driver (needs the grid for validation)
    f.fnx = -1;
    f.file_f1.clear();
    f.file_f2.clear();
    return f;
  }
  throw ValidationError("unknown forcing type: " + spec);
}

inline std::string forcing_file_path(const std::string& spec) {
  const std::size_t colon = spec.find(':');
  return colon == std::string::npos ? std::string() : spec.substr(colon + 1);
}

// Macroscopic initial stress consistent with a configuration datum: either the
// exact second moments of that datum, or the identity.
inline void make_initial_ob(const std::string& spec, const ConfigDistribution& psi,
                            const HermiteBasis& b, const MacGrid& g, StressField& sigma,
                            DensityField& rho) {
  if (spec == "identity") {
    sigma = StressField::isotropic(g, 1.0);
    rho = DensityField::constant(g, 1.0);
    return;
  }
  if (spec == "kramers") {
    kramers_stress(psi, b, sigma, rho);
    return;
  }
  throw ValidationError("unknown sigma profile: " + spec);
}

// (cutoff_L, dt) pairs of the resolution sweep, "L1:dt1,L2:dt2,...".
inline std::vector<std::pair<double, double>> parse_sweep_pairs(const std::string& spec) {
  std::vector<std::pair<double, double>> out;
  std::istringstream in(spec);
  std::string piece;
  while (std::getline(in, piece, ',')) {
    const std::size_t colon = piece.find(':');
    if (colon == std::string::npos)
      throw ValidationError("sweep pair '" + piece + "' must be L:dt");
    try {
      out.emplace_back(std::stod(piece.substr(0, colon)), std::stod(piece.substr(colon + 1)));
    } catch (const std::exception&) {
      throw ValidationError("malformed sweep pair '" + piece + "'");
    }
  }
  if (out.empty()) throw ValidationError("sweep_pairs is empty");
  return out;
}

}  // namespace nsfp
