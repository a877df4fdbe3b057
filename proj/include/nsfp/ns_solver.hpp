#pragma once

#include <cmath>
#include <vector>

#include "nsfp/grid.hpp"
#include "nsfp/transport.hpp"

namespace nsfp {

// Steady body force sampled on the staggered faces.
struct BodyForce {
  enum class Type { none, constant, shear, vortex, file } type = Type::none;
  double fx = 0.0, fy = 0.0;  // constant
  double amp = 0.0;           // shear / vortex amplitude
  int fnx = 0, fny = 0;       // file payload grid
  std::vector<double> file_f1, file_f2;

  void eval(const MacGrid& g, Array2& f1, Array2& f2) const {
    f1 = Array2(g.nx + 1, g.ny, 0.0);
    f2 = Array2(g.nx, g.ny + 1, 0.0);
    switch (type) {
      case Type::none:
        break;
      case Type::constant:
        f1.fill(fx);
        f2.fill(fy);
        break;
      case Type::shear:
        for (int j = 0; j < g.ny; ++j) {
          const double s = amp * std::sin(2.0 * M_PI * g.yc(j) / g.ly);
          for (int i = 0; i <= g.nx; ++i) f1(i, j) = s;
        }
        break;
      case Type::vortex:
        for (int j = 0; j < g.ny; ++j)
          for (int i = 0; i <= g.nx; ++i)
            f1(i, j) = amp * std::sin(2.0 * M_PI * g.xf(i) / g.lx) *
                       std::cos(2.0 * M_PI * g.yc(j) / g.ly);
        for (int j = 0; j <= g.ny; ++j)
          for (int i = 0; i < g.nx; ++i)
            f2(i, j) = -amp * std::cos(2.0 * M_PI * g.xc(i) / g.lx) *
                       std::sin(2.0 * M_PI * g.yf(j) / g.ly);
        break;
      case Type::file:
        if (fnx != g.nx || fny != g.ny)
          throw ValidationError("forcing file grid does not match scenario grid");
        f1.v = file_f1;
        f2.v = file_f2;
        break;
    }
  }
};

// Divergence of the cell-centered symmetric tensor tau on interior velocity
// faces (boundary faces stay pinned by no-slip). The off-diagonal component is
// averaged to corners, one-sided at walls.
inline void stress_divergence(const Array2& t11, const Array2& t12, const Array2& t22,
                              const MacGrid& g, Array2& f1, Array2& f2) {
  const int nx = g.nx, ny = g.ny;
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  f1 = Array2(nx + 1, ny, 0.0);
  f2 = Array2(nx, ny + 1, 0.0);
  auto corner12 = [&](int i, int j) {
    // corner (xf(i), yf(j)) for 1 <= i <= nx-1, 0 <= j <= ny
    double s = 0.0;
    int c = 0;
    if (j > 0) {
      s += t12(i - 1, j - 1) + t12(i, j - 1);
      c += 2;
    }
    if (j < ny) {
      s += t12(i - 1, j) + t12(i, j);
      c += 2;
    }
    return s / (double)c;
  };
  for (int j = 0; j < ny; ++j)
    for (int i = 1; i < nx; ++i)
      f1(i, j) = (t11(i, j) - t11(i - 1, j)) * ihx +
                 (corner12(i, j + 1) - corner12(i, j)) * ihy;
  auto corner21 = [&](int i, int j) {
    // corner (xf(i), yf(j)) for 0 <= i <= nx, 1 <= j <= ny-1
    double s = 0.0;
    int c = 0;
    if (i > 0) {
      s += t12(i - 1, j - 1) + t12(i - 1, j);
      c += 2;
    }
    if (i < nx) {
      s += t12(i, j - 1) + t12(i, j);
      c += 2;
    }
    return s / (double)c;
  };
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      f2(i, j) = (t22(i, j) - t22(i, j - 1)) * ihy +
                 (corner21(i + 1, j) - corner21(i, j)) * ihx;
}

// Conservative momentum advection div(u u) on interior faces. Corner fluxes at
// the walls vanish identically because the wall velocity is zero.
inline void momentum_advection(const VelocityField& u, const MacGrid& g, Array2& a1,
                               Array2& a2) {
  const int nx = g.nx, ny = g.ny;
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  a1 = Array2(nx + 1, ny, 0.0);
  a2 = Array2(nx, ny + 1, 0.0);
  auto fxx = [&](int i, int j) {  // u1^2 at cell center (i,j)
    const double c = 0.5 * (u.u1(i, j) + u.u1(i + 1, j));
    return c * c;
  };
  auto fxy = [&](int i, int j) {  // u1 u2 at corner (xf(i), yf(j)), interior i
    if (j == 0 || j == ny) return 0.0;
    const double a = 0.5 * (u.u1(i, j - 1) + u.u1(i, j));
    const double b = 0.5 * (u.u2(i - 1, j) + u.u2(i, j));
    return a * b;
  };
  for (int j = 0; j < ny; ++j)
    for (int i = 1; i < nx; ++i)
      a1(i, j) = (fxx(i, j) - fxx(i - 1, j)) * ihx + (fxy(i, j + 1) - fxy(i, j)) * ihy;
  auto fyy = [&](int i, int j) {  // u2^2 at cell center
    const double c = 0.5 * (u.u2(i, j) + u.u2(i, j + 1));
    return c * c;
  };
  auto fyx = [&](int i, int j) {  // u1 u2 at corner (xf(i), yf(j)), interior j
    if (i == 0 || i == nx) return 0.0;
    const double a = 0.5 * (u.u1(i, j - 1) + u.u1(i, j));
    const double b = 0.5 * (u.u2(i - 1, j) + u.u2(i, j));
    return a * b;
  };
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      a2(i, j) = (fyy(i, j) - fyy(i, j - 1)) * ihy + (fyx(i + 1, j) - fyx(i, j)) * ihx;
}

namespace detail {

// Implicit viscous solve (I + dt nu A_D) for one velocity component on its
// interior faces. Dirichlet in the face-normal direction; mirrored ghosts in
// the tangential direction give the (3u - u_nbr)/h^2 near-wall stencil.
inline IterStats viscous_component(Array2& comp, const MacGrid& g, double nu, double dt,
                                   bool is_u1, const char* what) {
  const int nx = g.nx, ny = g.ny;
  const double ihx2 = 1.0 / (g.hx() * g.hx()), ihy2 = 1.0 / (g.hy() * g.hy());
  const int mi = is_u1 ? nx - 1 : nx;  // interior extent in i
  const int mj = is_u1 ? ny : ny - 1;  // interior extent in j
  const std::size_t n = (std::size_t)mi * mj;
  auto at = [&](const std::vector<double>& v, int ii, int jj) -> double {
    return v[(std::size_t)jj * mi + ii];
  };
  auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
    for (int jj = 0; jj < mj; ++jj)
      for (int ii = 0; ii < mi; ++ii) {
        const double c = at(in, ii, jj);
        double ax, ay;
        if (is_u1) {
          // i-direction Dirichlet (walls carry real zero faces)
          ax = 2.0 * c;
          if (ii > 0) ax -= at(in, ii - 1, jj);
          if (ii < mi - 1) ax -= at(in, ii + 1, jj);
          ax *= ihx2;
          // j-direction mirrored ghost
          if (jj == 0 || jj == mj - 1) {
            ay = 3.0 * c;
            ay -= (jj == 0) ? at(in, ii, 1) : at(in, ii, mj - 2);
            if (mj == 1) ay = 6.0 * c;  // both walls adjacent
          } else {
            ay = 2.0 * c - at(in, ii, jj - 1) - at(in, ii, jj + 1);
          }
          ay *= ihy2;
        } else {
          ay = 2.0 * c;
          if (jj > 0) ay -= at(in, ii, jj - 1);
          if (jj < mj - 1) ay -= at(in, ii, jj + 1);
          ay *= ihy2;
          if (ii == 0 || ii == mi - 1) {
            ax = 3.0 * c;
            ax -= (ii == 0) ? at(in, 1, jj) : at(in, mi - 2, jj);
            if (mi == 1) ax = 6.0 * c;
          } else {
            ax = 2.0 * c - at(in, ii - 1, jj) - at(in, ii + 1, jj);
          }
          ax *= ihx2;
        }
        out[(std::size_t)jj * mi + ii] = c + dt * nu * (ax + ay);
      }
  };
  std::vector<double> diag(n);
  for (int jj = 0; jj < mj; ++jj)
    for (int ii = 0; ii < mi; ++ii) {
      double dx, dy;
      if (is_u1) {
        dx = 2.0 * ihx2;
        dy = (jj == 0 || jj == mj - 1) ? 3.0 * ihy2 : 2.0 * ihy2;
        if (mj == 1) dy = 6.0 * ihy2;
      } else {
        dy = 2.0 * ihy2;
        dx = (ii == 0 || ii == mi - 1) ? 3.0 * ihx2 : 2.0 * ihx2;
        if (mi == 1) dx = 6.0 * ihx2;
      }
      diag[(std::size_t)jj * mi + ii] = 1.0 + dt * nu * (dx + dy);
    }
  std::vector<double> b(n), x(n);
  const int i0 = is_u1 ? 1 : 0, j0 = is_u1 ? 0 : 1;
  for (int jj = 0; jj < mj; ++jj)
    for (int ii = 0; ii < mi; ++ii) {
      b[(std::size_t)jj * mi + ii] = comp(ii + i0, jj + j0);
      x[(std::size_t)jj * mi + ii] = comp(ii + i0, jj + j0);
    }
  const IterStats st = cg_solve(apply, diag, b, x, 1e-13, 0.0, 20000, what);
  for (int jj = 0; jj < mj; ++jj)
    for (int ii = 0; ii < mi; ++ii) comp(ii + i0, jj + j0) = x[(std::size_t)jj * mi + ii];
  return st;
}

}  // namespace detail

struct NsStepReport {
  IterStats viscous1, viscous2, pressure;
  double max_divergence = 0.0;
};

// One momentum step: explicit advection plus body and elastic forces, implicit
// viscosity, then a pressure projection. The projection residual is driven to
// div_tol / dt in the infinity norm so the post-step divergence stays below
// div_tol regardless of dt.
inline NsStepReport ns_step(VelocityField& u, const Array2& f1, const Array2& f2,
                            const Array2& t11, const Array2& t12, const Array2& t22,
                            const MacGrid& g, double nu, double dt,
                            double div_tol = 1e-11) {
  NsStepReport rep;
  Array2 a1, a2, s1, s2;
  momentum_advection(u, g, a1, a2);
  stress_divergence(t11, t12, t22, g, s1, s2);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i)
      u.u1(i, j) += dt * (-a1(i, j) + f1(i, j) + s1(i, j));
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      u.u2(i, j) += dt * (-a2(i, j) + f2(i, j) + s2(i, j));
  rep.viscous1 = detail::viscous_component(u.u1, g, nu, dt, true, "viscous solve (u1)");
  rep.viscous2 = detail::viscous_component(u.u2, g, nu, dt, false, "viscous solve (u2)");
  // Solve A ph = -div/dt with A = -div grad, so that u - dt grad ph has
  // divergence -dt * (residual of this solve).
  const Array2 div = mac_divergence(u, g);
  Array2 rhs(g.nx, g.ny);
  for (std::size_t t = 0; t < rhs.v.size(); ++t) rhs.v[t] = -div.v[t] / dt;
  HelmholtzNeumann poisson(g, 0.0, 1.0, 1e-13, 0.1 * div_tol / dt);
  Array2 ph = u.p;  // warm start from the previous pressure
  rep.pressure = poisson.solve(rhs, ph, "pressure projection");
  u.p = ph;
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) u.u1(i, j) -= dt * (ph(i, j) - ph(i - 1, j)) * ihx;
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) u.u2(i, j) -= dt * (ph(i, j) - ph(i, j - 1)) * ihy;
  rep.max_divergence = max_abs(mac_divergence(u, g));
  return rep;
}

// <f, u> with the same face volumes as the kinetic energy (halved at walls).
inline double force_inner_product(const Array2& f1, const Array2& f2,
                                  const VelocityField& u, const MacGrid& g) {
  const double vol = g.cell_area();
  std::vector<double> terms;
  terms.reserve(f1.v.size() + f2.v.size());
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) {
      const double w = (i == 0 || i == g.nx) ? 0.5 : 1.0;
      terms.push_back(w * vol * f1(i, j) * u.u1(i, j));
    }
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double w = (j == 0 || j == g.ny) ? 0.5 : 1.0;
      terms.push_back(w * vol * f2(i, j) * u.u2(i, j));
    }
  return pairwise_sum(terms);
}

}  // namespace nsfp
