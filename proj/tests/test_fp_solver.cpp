#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "nsfp/fp_solver.hpp"
#include "nsfp/grid.hpp"
#include "nsfp/ob_solver.hpp"
#include "nsfp/qspace.hpp"

using namespace nsfp;

namespace {

MacGrid unit_grid(int n) {
  MacGrid g;
  g.nx = n;
  g.ny = n;
  g.lx = 1.0;
  g.ly = 1.0;
  return g;
}

VelocityField plane_shear(const MacGrid& g, double rate) {
  VelocityField u = VelocityField::zero(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) u.u1(i, j) = rate * (g.yc(j) - 0.5 * g.ly);
  return u;
}

// Discretely divergence-free velocity from a vertex stream function that
// vanishes on the walls, so no mass is advected through the boundary.
VelocityField stream_velocity(const MacGrid& g, double amp) {
  auto s = [&](int i, int j) {
    const double sx = std::sin(M_PI * (g.hx() * i) / g.lx);
    const double sy = std::sin(M_PI * (g.hy() * j) / g.ly);
    return amp * sx * sx * sy * sy;
  };
  VelocityField v = VelocityField::zero(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) v.u1(i, j) = (s(i, j + 1) - s(i, j)) / g.hy();
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) v.u2(i, j) = -(s(i + 1, j) - s(i, j)) / g.hx();
  return v;
}

// u1 = a y, u2 = a x: divergence-free with both off-diagonal gradient entries.
VelocityField symmetric_stretch(const MacGrid& g, double a) {
  VelocityField u = VelocityField::zero(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) u.u1(i, j) = a * g.yc(j);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) u.u2(i, j) = a * g.xc(i);
  return u;
}

ConfigDistribution perturbed_state(const MacGrid& g, const HermiteBasis& b, double amp) {
  ConfigDistribution psi = ConfigDistribution::equilibrium(g, b);
  const int m20 = b.mode_index(2, 0), m02 = b.mode_index(0, 2);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      psi.modes[(std::size_t)m20](i, j) = amp * std::sin(2.0 * M_PI * g.xc(i));
      psi.modes[(std::size_t)m02](i, j) = amp * std::cos(2.0 * M_PI * g.yc(j));
    }
  return psi;
}

}  // namespace

TEST_CASE("equilibrium at rest is a bitwise fixed point of the kinetic step", "[fp]") {
  const MacGrid g = unit_grid(8);
  const HermiteBasis b = build_basis(4, 6);
  const QOperators ops = build_qoperators(b);
  ConfigDistribution psi = ConfigDistribution::equilibrium(g, b);
  const VelocityField u = VelocityField::zero(g);

  FpWorkspace ws;
  for (int n = 0; n < 5; ++n) {
    const FpStepReport rep = fp_step(psi, u, b, ops, g, 1.0 / 256.0, 1.0, 0.1, 100.0, &ws);
    CHECK(rep.fast_path_cells == (long)g.cells());
    CHECK(rep.picard_max == 1);
    CHECK_FALSE(rep.cutoff.active());
    CHECK(rep.worst_diffusion.iters == 0);
  }
  for (std::size_t m = 0; m < psi.modes.size(); ++m)
    for (double t : psi.modes[m].v) CHECK(t == (m == 0 ? 1.0 : 0.0));
}

TEST_CASE("one kinetic step reproduces the closed-form moment update", "[fp]") {
  const MacGrid g = unit_grid(8);
  const HermiteBasis b = build_basis(4, 6);
  const QOperators ops = build_qoperators(b);
  const double dt = 1.0 / 128.0, lambda = 0.7, eps = 0.1, L = 100.0;

  // both off-diagonal gradient entries nonzero, so all stretching terms of the
  // moment system are exercised
  const VelocityField u = symmetric_stretch(g, 0.4);

  ConfigDistribution psi = ConfigDistribution::equilibrium(g, b);
  psi.modes[(std::size_t)b.mode_index(2, 0)].fill(0.12);
  psi.modes[(std::size_t)b.mode_index(1, 1)].fill(-0.05);

  StressField s0;
  DensityField r0;
  kramers_stress(psi, b, s0, r0);

  fp_step(psi, u, b, ops, g, dt, lambda, eps, L);

  StressField s1;
  DensityField r1;
  kramers_stress(psi, b, s1, r1);

  Array2 k11, k12, k21, k22;
  velocity_gradient_cells(u, g, k11, k12, k21, k22);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double e11, e12, e22;
      ob_local_step(s0.s11(i, j), s0.s12(i, j), s0.s22(i, j), r0.rho(i, j), k11(i, j),
                    k12(i, j), k21(i, j), dt, lambda, e11, e12, e22);
      CHECK(s1.s11(i, j) == Catch::Approx(e11).margin(1e-12));
      CHECK(s1.s12(i, j) == Catch::Approx(e12).margin(1e-12));
      CHECK(s1.s22(i, j) == Catch::Approx(e22).margin(1e-12));
      CHECK(r1.rho(i, j) == Catch::Approx(r0.rho(i, j)).margin(1e-13));
    }
}

TEST_CASE("kinetic moments follow the macroscopic update over many steps", "[fp]") {
  const MacGrid g = unit_grid(8);
  const HermiteBasis b = build_basis(4, 6);
  const QOperators ops = build_qoperators(b);
  const double dt = 1.0 / 128.0, lambda = 1.0, eps = 0.0, L = 100.0;
  const VelocityField u = plane_shear(g, 0.5);

  ConfigDistribution psi = ConfigDistribution::equilibrium(g, b);
  ObState ob = ObState::equilibrium(g);

  FpWorkspace ws;
  for (int n = 0; n < 32; ++n) {
    fp_step(psi, u, b, ops, g, dt, lambda, eps, L, &ws);
    ob_step(ob, u, g, dt, lambda, eps);
  }
  StressField s;
  DensityField rho;
  kramers_stress(psi, b, s, rho);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      CHECK(s.s11(i, j) == Catch::Approx(ob.sigma.s11(i, j)).margin(1e-11));
      CHECK(s.s12(i, j) == Catch::Approx(ob.sigma.s12(i, j)).margin(1e-11));
      CHECK(s.s22(i, j) == Catch::Approx(ob.sigma.s22(i, j)).margin(1e-11));
      CHECK(rho.rho(i, j) == Catch::Approx(ob.rho.rho(i, j)).margin(1e-12));
    }
}

TEST_CASE("the kinetic steady state under shear carries the analytic moments", "[fp]") {
  const MacGrid g = unit_grid(8);
  const HermiteBasis b = build_basis(4, 6);
  const QOperators ops = build_qoperators(b);
  // modest Weissenberg number, so node values stay positive and below the
  // ceiling and the discrete steady state is the plain Galerkin one
  const double gdot = 0.4, lambda = 0.25, dt = 1.0 / 64.0;
  const VelocityField u = plane_shear(g, gdot);
  const double w = lambda * gdot;
  const double e11 = 1.0 + 8.0 * w * w, e12 = 2.0 * w, e22 = 1.0;

  ConfigDistribution psi = ConfigDistribution::equilibrium(g, b);
  FpWorkspace ws;
  long cutoff_events = 0;
  for (int n = 0; n < 1536; ++n) {
    const FpStepReport rep = fp_step(psi, u, b, ops, g, dt, lambda, 0.1, 100.0, &ws);
    cutoff_events += rep.cutoff.clamped_high + rep.cutoff.clamped_low;
  }
  CHECK(cutoff_events == 0);

  StressField s;
  DensityField rho;
  kramers_stress(psi, b, s, rho);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      CHECK(s.s11(i, j) == Catch::Approx(e11).margin(1e-6));
      CHECK(s.s12(i, j) == Catch::Approx(e12).margin(1e-6));
      CHECK(s.s22(i, j) == Catch::Approx(e22).margin(1e-6));
      CHECK(rho.rho(i, j) == Catch::Approx(1.0).margin(1e-9));
    }

  // second and fourth radial moments of the limit Gaussian; the moment
  // hierarchy of a linear drift closes, so truncation does not pollute them
  const double a2 = moment_r(psi, b, g, 2);
  const double a4 = moment_r(psi, b, g, 4);
  const double a4_exact = 3.0 * e11 * e11 + 3.0 * e22 * e22 + 2.0 * e11 * e22 + 4.0 * e12 * e12;
  CHECK(a2 == Catch::Approx(e11 + e22).margin(1e-6));
  CHECK(a4 == Catch::Approx(a4_exact).margin(1e-5));
}

TEST_CASE("free relaxation dissipates entropy monotonically", "[fp]") {
  const MacGrid g = unit_grid(8);
  const HermiteBasis b = build_basis(4, 6);
  const QOperators ops = build_qoperators(b);
  ConfigDistribution psi = perturbed_state(g, b, 0.05);
  const VelocityField u = VelocityField::zero(g);

  FpWorkspace ws;
  double prev = entropy_fisher(psi, b, g).entropy;
  CHECK(prev > 0.0);
  for (int n = 0; n < 20; ++n) {
    fp_step(psi, u, b, ops, g, 1.0 / 128.0, 1.0, 0.1, 100.0, &ws);
    const double e = entropy_fisher(psi, b, g).entropy;
    CHECK(e < prev);
    prev = e;
  }
}

TEST_CASE("mass is conserved through transport, relaxation and drag", "[fp]") {
  const MacGrid g = unit_grid(8);
  const HermiteBasis b = build_basis(4, 6);
  const QOperators ops = build_qoperators(b);
  ConfigDistribution psi = perturbed_state(g, b, 0.05);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      psi.modes[0](i, j) = 1.0 + 0.1 * std::sin(2.0 * M_PI * g.xc(i)) *
                                     std::sin(2.0 * M_PI * g.yc(j));

  auto total_mass = [&]() {
    std::vector<double> terms(psi.modes[0].v.size());
    for (std::size_t t = 0; t < terms.size(); ++t)
      terms[t] = g.cell_area() * psi.modes[0].v[t];
    return pairwise_sum(terms);
  };

  const VelocityField u = stream_velocity(g, 0.3);
  const double before = total_mass();
  FpWorkspace ws;
  for (int n = 0; n < 50; ++n) fp_step(psi, u, b, ops, g, 1.0 / 256.0, 1.0, 0.1, 100.0, &ws);
  CHECK(total_mass() == Catch::Approx(before).margin(1e-11));
}

TEST_CASE("a generous ceiling is bitwise transparent to the kinetic step", "[fp]") {
  const MacGrid g = unit_grid(8);
  const HermiteBasis b = build_basis(4, 6);
  const QOperators ops = build_qoperators(b);
  const VelocityField u = plane_shear(g, 0.3);

  ConfigDistribution lo = perturbed_state(g, b, 0.05);
  ConfigDistribution hi = lo;
  FpWorkspace wlo, whi;
  for (int n = 0; n < 10; ++n) {
    fp_step(lo, u, b, ops, g, 1.0 / 256.0, 1.0, 0.1, 10.0, &wlo);
    fp_step(hi, u, b, ops, g, 1.0 / 256.0, 1.0, 0.1, 100.0, &whi);
  }
  for (std::size_t m = 0; m < lo.modes.size(); ++m)
    for (std::size_t t = 0; t < lo.modes[m].v.size(); ++t)
      CHECK(lo.modes[m].v[t] == hi.modes[m].v[t]);
}

TEST_CASE("a tight ceiling activates the lagged cut-off iteration", "[fp]") {
  const MacGrid g = unit_grid(4);
  const HermiteBasis b = build_basis(4, 6);
  const QOperators ops = build_qoperators(b);
  const VelocityField u = plane_shear(g, 0.4);

  ConfigDistribution psi = ConfigDistribution::equilibrium(g, b);
  psi.modes[0].fill(1.8);  // node values 1.8, above the ceiling
  const FpStepReport rep = fp_step(psi, u, b, ops, g, 1.0 / 128.0, 1.0, 0.1, 1.5);
  CHECK(rep.fast_path_cells < (long)g.cells());
  CHECK(rep.picard_max > 1);
  CHECK(rep.picard_iterations > (long)g.cells());
}

TEST_CASE("the split step agrees with the monolithic solve to second order", "[fp]") {
  const MacGrid g = unit_grid(4);
  const HermiteBasis b = build_basis(4, 6);
  const QOperators ops = build_qoperators(b);
  const VelocityField u = symmetric_stretch(g, 0.2);
  const ConfigDistribution start = perturbed_state(g, b, 0.05);

  auto one_step_gap = [&](double dt) {
    ConfigDistribution split = start;
    ConfigDistribution mono = start;
    fp_step(split, u, b, ops, g, dt, 1.0, 0.1, 100.0);
    fp_step_monolithic(mono, u, b, ops, g, dt, 1.0, 0.1);
    double gap = 0.0;
    for (std::size_t m = 0; m < split.modes.size(); ++m)
      for (std::size_t t = 0; t < split.modes[m].v.size(); ++t)
        gap = std::max(gap, std::fabs(split.modes[m].v[t] - mono.modes[m].v[t]));
    return gap;
  };

  const double g1 = one_step_gap(1.0 / 64.0);
  const double g2 = one_step_gap(1.0 / 128.0);
  CHECK(g1 > 0.0);
  const double ratio = g1 / g2;
  CHECK(ratio > 3.0);
  CHECK(ratio < 5.0);
}

TEST_CASE("initial datum smoothing damps each mode by its elliptic factor", "[fp]") {
  const MacGrid g = unit_grid(8);
  const HermiteBasis b = build_basis(4, 6);
  const double dt = 1.0 / 256.0;

  ConfigDistribution psi = ConfigDistribution::equilibrium(g, b);
  psi.modes[(std::size_t)b.mode_index(2, 0)].fill(0.2);
  const SmoothingReport rep = smooth_initial_datum(psi, b, g, dt, 100.0);

  // spatially uniform data: A_N drops out and each mode divides by 1 + dt (n1 + n2)
  for (double t : psi.modes[0].v) CHECK(t == Catch::Approx(1.0).margin(1e-13));
  for (double t : psi.modes[(std::size_t)b.mode_index(2, 0)].v)
    CHECK(t == Catch::Approx(0.2 / (1.0 + 2.0 * dt)).margin(1e-13));
  CHECK_FALSE(rep.cutoff.active());
  CHECK(rep.bound_lhs() <= rep.bound_rhs() + 1e-12);
}

TEST_CASE("smoothing a rough oversized datum keeps the energy inequality", "[fp]") {
  const MacGrid g = unit_grid(8);
  const HermiteBasis b = build_basis(4, 6);
  const double dt = 1.0 / 256.0;

  ConfigDistribution psi = ConfigDistribution::zero(g, b);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      psi.modes[0](i, j) = (i + j) % 2 == 0 ? 14.0 : 2.0;
      psi.modes[(std::size_t)b.mode_index(2, 0)](i, j) = ((i * 3 + j) % 3 - 1.0) * 1.5;
    }

  const SmoothingReport rep = smooth_initial_datum(psi, b, g, dt, 10.0);
  CHECK(rep.cutoff.active());  // the checkerboard exceeds the ceiling at the peaks
  CHECK(rep.clamped_norm2 <= rep.raw_norm2 + 1e-10);
  CHECK(rep.bound_lhs() <= rep.bound_rhs() + 1e-10);
  CHECK(rep.gradx_norm2 > 0.0);
  CHECK(rep.gradq_norm2 > 0.0);
}

TEST_CASE("velocity histories replay and window-average correctly", "[fp]") {
  const MacGrid g = unit_grid(4);
  VelocityHistory h;
  for (int n = 0; n < 4; ++n) {
    VelocityField u = VelocityField::zero(g);
    u.u1.fill((double)n + 1.0);
    h.push(u);
  }
  CHECK(h.at(2).u1(0, 0) == 3.0);
  CHECK_THROWS_AS(h.at(4), ValidationError);

  const VelocityHistory avg = VelocityHistory::average_of(h, 2);
  REQUIRE(avg.steps.size() == 2);
  CHECK(avg.at(0).u1(1, 1) == 1.5);
  CHECK(avg.at(1).u1(1, 1) == 3.5);
  CHECK_THROWS_AS(VelocityHistory::average_of(h, 3), ValidationError);
}
