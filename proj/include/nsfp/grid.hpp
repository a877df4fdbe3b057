#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nsfp/numerics.hpp"

namespace nsfp {

// Uniform staggered (MAC) grid on [0,lx] x [0,ly]:
//   u1 on x-faces, (nx+1) x ny        u2 on y-faces, nx x (ny+1)
//   scalars (p, stress, configuration coefficients) at cell centres, nx x ny
struct MacGrid {
  int nx = 32, ny = 32;
  double lx = 1.0, ly = 1.0;

  double hx() const { return lx / nx; }
  double hy() const { return ly / ny; }
  double xc(int i) const { return (i + 0.5) * hx(); }
  double yc(int j) const { return (j + 0.5) * hy(); }
  double xf(int i) const { return i * hx(); }
  double yf(int j) const { return j * hy(); }
  double cell_area() const { return hx() * hy(); }
  int cells() const { return nx * ny; }
};

inline std::optional<std::string> validate_grid(const MacGrid& g) {
  if (g.nx < 4) return "nx must be at least 4";
  if (g.ny < 4) return "ny must be at least 4";
  if (!(g.lx > 0.0)) return "lx must be positive";
  if (!(g.ly > 0.0)) return "ly must be positive";
  return std::nullopt;
}

// Dense 2-D array, row-major in i (cell-major row order).
struct Array2 {
  int nx = 0, ny = 0;
  std::vector<double> v;

  Array2() = default;
  Array2(int nx_, int ny_, double init = 0.0) : nx(nx_), ny(ny_), v((std::size_t)nx_ * ny_, init) {}

  double& operator()(int i, int j) { return v[(std::size_t)j * nx + i]; }
  double operator()(int i, int j) const { return v[(std::size_t)j * nx + i]; }
  std::size_t size() const { return v.size(); }
  void fill(double s) { std::fill(v.begin(), v.end(), s); }
  double* data() { return v.data(); }
  const double* data() const { return v.data(); }
};

inline double max_abs(const Array2& a) { return max_abs(a.v.data(), a.v.size()); }

struct VelocityField {
  Array2 u1;  // (nx+1) x ny
  Array2 u2;  // nx x (ny+1)
  Array2 p;   // nx x ny, last projection pressure

  static VelocityField zero(const MacGrid& g) {
    VelocityField v;
    v.u1 = Array2(g.nx + 1, g.ny);
    v.u2 = Array2(g.nx, g.ny + 1);
    v.p = Array2(g.nx, g.ny);
    return v;
  }
};

struct DensityField {
  Array2 rho;

  static DensityField constant(const MacGrid& g, double value) {
    DensityField d;
    d.rho = Array2(g.nx, g.ny, value);
    return d;
  }
};

// Symmetric 2x2 field; s21 == s12 by construction.
struct StressField {
  Array2 s11, s12, s22;

  static StressField isotropic(const MacGrid& g, double value) {
    StressField s;
    s.s11 = Array2(g.nx, g.ny, value);
    s.s12 = Array2(g.nx, g.ny, 0.0);
    s.s22 = Array2(g.nx, g.ny, value);
    return s;
  }
};

// div u at cell centres: (u1_{i+1,j}-u1_{i,j})/hx + (u2_{i,j+1}-u2_{i,j})/hy.
inline Array2 mac_divergence(const VelocityField& u, const MacGrid& g) {
  Array2 d(g.nx, g.ny);
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      d(i, j) = (u.u1(i + 1, j) - u.u1(i, j)) * ihx + (u.u2(i, j + 1) - u.u2(i, j)) * ihy;
  return d;
}

// 1/2 sum |u|^2 over face control volumes; boundary-normal faces carry half a
// cell so the volumes tile the domain exactly (u == 1 gives area/2).
inline double kinetic_energy(const VelocityField& u, const MacGrid& g) {
  const double vol = g.cell_area();
  std::vector<double> acc;
  acc.reserve(u.u1.size() + u.u2.size());
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) {
      const double w = (i == 0 || i == g.nx) ? 0.5 * vol : vol;
      const double val = u.u1(i, j);
      acc.push_back(0.5 * w * val * val);
    }
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double w = (j == 0 || j == g.ny) ? 0.5 * vol : vol;
      const double val = u.u2(i, j);
      acc.push_back(0.5 * w * val * val);
    }
  return pairwise_sum(acc);
}

// Velocity gradient at cell centres from MAC differences; centered stencils
// inside, one-sided at walls, and the discrete trace removed so that the
// returned kappa is exactly traceless.
inline void velocity_gradient_cells(const VelocityField& u, const MacGrid& g, Array2& k11,
                                    Array2& k12, Array2& k21, Array2& k22) {
  const int nx = g.nx, ny = g.ny;
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  k11 = Array2(nx, ny);
  k12 = Array2(nx, ny);
  k21 = Array2(nx, ny);
  k22 = Array2(nx, ny);
  Array2 u1c(nx, ny), u2c(nx, ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      u1c(i, j) = 0.5 * (u.u1(i, j) + u.u1(i + 1, j));
      u2c(i, j) = 0.5 * (u.u2(i, j) + u.u2(i, j + 1));
      k11(i, j) = (u.u1(i + 1, j) - u.u1(i, j)) * ihx;
      k22(i, j) = (u.u2(i, j + 1) - u.u2(i, j)) * ihy;
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (j == 0)
        k12(i, j) = (u1c(i, 1) - u1c(i, 0)) * ihy;
      else if (j == ny - 1)
        k12(i, j) = (u1c(i, ny - 1) - u1c(i, ny - 2)) * ihy;
      else
        k12(i, j) = 0.5 * (u1c(i, j + 1) - u1c(i, j - 1)) * ihy;
      if (i == 0)
        k21(i, j) = (u2c(1, j) - u2c(0, j)) * ihx;
      else if (i == nx - 1)
        k21(i, j) = (u2c(nx - 1, j) - u2c(nx - 2, j)) * ihx;
      else
        k21(i, j) = 0.5 * (u2c(i + 1, j) - u2c(i - 1, j)) * ihx;
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double half_tr = 0.5 * (k11(i, j) + k22(i, j));
      k11(i, j) -= half_tr;
      k22(i, j) -= half_tr;
    }
}

// Max |grad u| entry over cells; the W^{1,inf} surrogate the difference
// monitor uses.
inline double velocity_gradient_max(const VelocityField& u, const MacGrid& g) {
  Array2 k11, k12, k21, k22;
  velocity_gradient_cells(u, g, k11, k12, k21, k22);
  double m = 0.0;
  m = std::max(m, max_abs(k11));
  m = std::max(m, max_abs(k12));
  m = std::max(m, max_abs(k21));
  m = std::max(m, max_abs(k22));
  return m;
}

// Discrete H^1_0 seminorm of a MAC velocity with no-slip ghosts (tangential
// wall derivative from the mirrored ghost value).
inline double grad_norm2(const VelocityField& u, const MacGrid& g) {
  const int nx = g.nx, ny = g.ny;
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  const double vol = g.cell_area();
  std::vector<double> acc;
  acc.reserve((std::size_t)4 * nx * ny);
  // normal derivatives at cells
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double d1 = (u.u1(i + 1, j) - u.u1(i, j)) * ihx;
      const double d2 = (u.u2(i, j + 1) - u.u2(i, j)) * ihy;
      acc.push_back(vol * (d1 * d1 + d2 * d2));
    }
  // du1/dy at horizontal edges between vertically adjacent u1 faces
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      double d;
      if (j == 0)
        d = 2.0 * u.u1(i, 0) * ihy;  // ghost = -u across the wall
      else if (j == ny)
        d = -2.0 * u.u1(i, ny - 1) * ihy;
      else
        d = (u.u1(i, j) - u.u1(i, j - 1)) * ihy;
      const double w = ((i == 0 || i == nx) ? 0.5 : 1.0) * ((j == 0 || j == ny) ? 0.5 : 1.0);
      acc.push_back(vol * w * d * d);
    }
  // du2/dx at vertical edges
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      double d;
      if (i == 0)
        d = 2.0 * u.u2(0, j) * ihx;
      else if (i == nx)
        d = -2.0 * u.u2(nx - 1, j) * ihx;
      else
        d = (u.u2(i, j) - u.u2(i - 1, j)) * ihx;
      const double w = ((i == 0 || i == nx) ? 0.5 : 1.0) * ((j == 0 || j == ny) ? 0.5 : 1.0);
      acc.push_back(vol * w * d * d);
    }
  return pairwise_sum(acc);
}

}  // namespace nsfp
