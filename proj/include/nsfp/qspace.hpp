#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "nsfp/grid.hpp"
#include "nsfp/hermite.hpp"

namespace nsfp {

// Maxwellian-normalized configuration density psi_hat = psi / M as Hermite
// coefficients per cell. Each mode is its own contiguous cell field so the
// physical-space transport sweeps run on flat arrays.
struct ConfigDistribution {
  int nx = 0, ny = 0, nq = 0, nmodes = 0;
  std::vector<Array2> modes;

  static ConfigDistribution zero(const MacGrid& g, const HermiteBasis& b) {
    ConfigDistribution d;
    d.nx = g.nx;
    d.ny = g.ny;
    d.nq = b.nq;
    d.nmodes = b.nmodes;
    d.modes.assign(b.nmodes, Array2(g.nx, g.ny, 0.0));
    return d;
  }

  // psi_hat == 1: the Maxwellian itself.
  static ConfigDistribution equilibrium(const MacGrid& g, const HermiteBasis& b) {
    ConfigDistribution d = zero(g, b);
    d.modes[0].fill(1.0);
    return d;
  }
};

inline void require_basis_match(const ConfigDistribution& psi, const HermiteBasis& b) {
  if (psi.nq != b.nq || psi.nmodes != b.nmodes)
    throw ValidationError("basis mismatch between distribution and Hermite basis");
}

inline void cell_coeffs(const ConfigDistribution& psi, int i, int j, double* c) {
  for (int m = 0; m < psi.nmodes; ++m) c[m] = psi.modes[m](i, j);
}

inline void set_cell_coeffs(ConfigDistribution& psi, int i, int j, const double* c) {
  for (int m = 0; m < psi.nmodes; ++m) psi.modes[m](i, j) = c[m];
}

// vals = V c (collocation values at the quadrature nodes).
inline void coeffs_to_values(const HermiteBasis& b, const double* c, double* vals) {
  for (int a = 0; a < b.nnodes; ++a) {
    const double* row = &b.V[(std::size_t)a * b.nmodes];
    vals[a] = pairwise_dot(row, c, (std::size_t)b.nmodes);
  }
}

// c = P vals (discrete least-squares projection; P V = I).
inline void values_to_coeffs(const HermiteBasis& b, const double* vals, double* c) {
  for (int m = 0; m < b.nmodes; ++m) {
    const double* row = &b.P[(std::size_t)m * b.nnodes];
    c[m] = pairwise_dot(row, vals, (std::size_t)b.nnodes);
  }
}

// Galerkin matrices of the configuration operators.
//   ou_diag[m] = n1 + n2                  (Maxwellian-weighted Laplacian)
//   Gab[m,n]   = int M h_n q_b d_a h_m dq (weak drag, assembled by quadrature)
struct QOperators {
  int nmodes = 0;
  std::vector<double> ou_diag;
  std::vector<double> G11, G12, G21, G22;
};

inline QOperators build_qoperators(const HermiteBasis& b) {
  QOperators ops;
  ops.nmodes = b.nmodes;
  ops.ou_diag.assign(b.nmodes, 0.0);
  for (int m = 0; m < b.nmodes; ++m)
    ops.ou_diag[m] = (double)(b.mode_n1(m) + b.mode_n2(m));
  const int nm = b.nmodes, nn = b.nnodes, count = b.count;
  ops.G11.assign((std::size_t)nm * nm, 0.0);
  ops.G12.assign((std::size_t)nm * nm, 0.0);
  ops.G21.assign((std::size_t)nm * nm, 0.0);
  ops.G22.assign((std::size_t)nm * nm, 0.0);
  std::vector<double> d1m(nn), d2m(nn);
  for (int m = 0; m < nm; ++m) {
    const int m1 = b.mode_n1(m), m2 = b.mode_n2(m);
    for (int k1 = 0; k1 < count; ++k1)
      for (int k2 = 0; k2 < count; ++k2) {
        const int a = k1 * count + k2;
        d1m[a] = b.dh1d[(std::size_t)m1 * count + k1] * b.h1d[(std::size_t)m2 * count + k2];
        d2m[a] = b.h1d[(std::size_t)m1 * count + k1] * b.dh1d[(std::size_t)m2 * count + k2];
      }
    for (int n = 0; n < nm; ++n) {
      double g11 = 0.0, g12 = 0.0, g21 = 0.0, g22 = 0.0;
      for (int a = 0; a < nn; ++a) {
        const double hv = b.w2d[a] * b.V[(std::size_t)a * nm + n];
        g11 += hv * b.qn1[a] * d1m[a];
        g12 += hv * b.qn2[a] * d1m[a];
        g21 += hv * b.qn1[a] * d2m[a];
        g22 += hv * b.qn2[a] * d2m[a];
      }
      ops.G11[(std::size_t)m * nm + n] = g11;
      ops.G12[(std::size_t)m * nm + n] = g12;
      ops.G21[(std::size_t)m * nm + n] = g21;
      ops.G22[(std::size_t)m * nm + n] = g22;
    }
  }
  return ops;
}

// D(kappa) = k11 G11 + k12 G12 + k21 G21 + k22 G22, row m = test mode.
inline void drift_matrix(const QOperators& ops, double k11, double k12, double k21,
                         double k22, std::vector<double>& D) {
  const std::size_t n2 = (std::size_t)ops.nmodes * ops.nmodes;
  D.assign(n2, 0.0);
  for (std::size_t t = 0; t < n2; ++t)
    D[t] = k11 * ops.G11[t] + k12 * ops.G12[t] + k21 * ops.G21[t] + k22 * ops.G22[t];
}

// Time-derivative action of the configuration Laplacian: mode m is an
// eigenvector with eigenvalue -(n1+n2)/(4 lambda).
inline ConfigDistribution ou_apply(const ConfigDistribution& psi, double lambda,
                                   const HermiteBasis& b) {
  require_basis_match(psi, b);
  if (!(lambda > 0.0)) throw ValidationError("lambda must be positive");
  ConfigDistribution out = psi;
  for (int m = 0; m < psi.nmodes; ++m) {
    const double s = -(double)(b.mode_n1(m) + b.mode_n2(m)) / (4.0 * lambda);
    for (double& t : out.modes[m].v) t *= s;
  }
  return out;
}

// Weak drag action per cell with a spatially constant kappa; kappa must be
// traceless (the incompressible constraint the identity relies on).
inline ConfigDistribution drift_apply(const ConfigDistribution& psi,
                                      const std::array<double, 4>& kappa,
                                      const HermiteBasis& b, const QOperators& ops) {
  require_basis_match(psi, b);
  if (std::fabs(kappa[0] + kappa[3]) > 1e-12)
    throw ValidationError("kappa must be traceless");
  std::vector<double> D;
  drift_matrix(ops, kappa[0], kappa[1], kappa[2], kappa[3], D);
  ConfigDistribution out = ConfigDistribution::zero(MacGrid{psi.nx, psi.ny, 1.0, 1.0}, b);
  std::vector<double> c(psi.nmodes), y(psi.nmodes);
  for (int j = 0; j < psi.ny; ++j)
    for (int i = 0; i < psi.nx; ++i) {
      cell_coeffs(psi, i, j, c.data());
      for (int m = 0; m < psi.nmodes; ++m)
        y[m] = pairwise_dot(&D[(std::size_t)m * psi.nmodes], c.data(), (std::size_t)psi.nmodes);
      set_cell_coeffs(out, i, j, y.data());
    }
  return out;
}

// Second moments of M psi_hat from coefficients; exact because q_i q_j lies in
// the basis span:
//   sigma11 = c00 + sqrt(2) c20, sigma12 = c11, sigma22 = c00 + sqrt(2) c02,
//   rho = c00.
inline void kramers_stress(const ConfigDistribution& psi, const HermiteBasis& b,
                           StressField& sigma, DensityField& rho) {
  require_basis_match(psi, b);
  const double r2 = std::sqrt(2.0);
  const int m20 = b.mode_index(2, 0), m02 = b.mode_index(0, 2), m11 = b.mode_index(1, 1);
  const int nx = psi.nx, ny = psi.ny;
  sigma.s11 = Array2(nx, ny);
  sigma.s12 = Array2(nx, ny);
  sigma.s22 = Array2(nx, ny);
  rho.rho = Array2(nx, ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double c00 = psi.modes[0](i, j);
      sigma.s11(i, j) = c00 + r2 * psi.modes[m20](i, j);
      sigma.s22(i, j) = c00 + r2 * psi.modes[m02](i, j);
      sigma.s12(i, j) = psi.modes[m11](i, j);
      rho.rho(i, j) = c00;
    }
}

// Kramers extra stress tau = k (sigma - rho I).
inline void extra_stress(const StressField& sigma, const DensityField& rho, double k,
                         Array2& t11, Array2& t12, Array2& t22) {
  const int nx = sigma.s11.nx, ny = sigma.s11.ny;
  t11 = Array2(nx, ny);
  t12 = Array2(nx, ny);
  t22 = Array2(nx, ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      t11(i, j) = k * (sigma.s11(i, j) - rho.rho(i, j));
      t12(i, j) = k * sigma.s12(i, j);
      t22(i, j) = k * (sigma.s22(i, j) - rho.rho(i, j));
    }
}

// Node-value clamp realizing the drag cut-off min(s, L), plus a safety floor:
// values below -negativity_tol are set to 0 (round-off negatives pass through
// so an inactive clamp is the exact identity).
inline constexpr double cutoff_negativity_tol = 1e-12;

struct CutoffReport {
  long clamped_high = 0;
  long clamped_low = 0;
  bool active() const { return clamped_high + clamped_low > 0; }
};

inline ConfigDistribution apply_cutoff(const ConfigDistribution& psi, double L,
                                       const HermiteBasis& b, CutoffReport* rep = nullptr) {
  require_basis_match(psi, b);
  if (!(L > 1.0)) throw ValidationError("cutoff_L must exceed 1");
  ConfigDistribution out = psi;
  std::vector<double> c(psi.nmodes), vals(b.nnodes);
  CutoffReport local;
  for (int j = 0; j < psi.ny; ++j)
    for (int i = 0; i < psi.nx; ++i) {
      cell_coeffs(psi, i, j, c.data());
      coeffs_to_values(b, c.data(), vals.data());
      int high = 0, low = 0;
      for (int a = 0; a < b.nnodes; ++a) {
        if (vals[a] > L) {
          vals[a] = L;
          ++high;
        } else if (vals[a] < -cutoff_negativity_tol) {
          vals[a] = 0.0;
          ++low;
        }
      }
      if (high + low == 0) continue;  // exact identity when the clamp is idle
      local.clamped_high += high;
      local.clamped_low += low;
      values_to_coeffs(b, vals.data(), c.data());
      set_cell_coeffs(out, i, j, c.data());
    }
  if (rep) *rep = local;
  return out;
}

// r-th radial moment of M psi_hat over the whole domain. Requires the
// quadrature to integrate |q|^r against the truncated basis exactly.
inline double moment_r(const ConfigDistribution& psi, const HermiteBasis& b,
                       const MacGrid& g, int r) {
  require_basis_match(psi, b);
  if (r < 0 || r % 2 != 0) throw ValidationError("moment order must be even and nonnegative");
  if (b.nq + r > 2 * b.count - 1)
    throw ValidationError("quadrature exactness insufficient for requested moment");
  std::vector<double> mu(psi.nmodes, 0.0);
  for (int m = 0; m < psi.nmodes; ++m) {
    double s = 0.0;
    for (int a = 0; a < b.nnodes; ++a) {
      const double q2 = b.qn1[a] * b.qn1[a] + b.qn2[a] * b.qn2[a];
      s += b.w2d[a] * std::pow(q2, r / 2) * b.V[(std::size_t)a * b.nmodes + m];
    }
    mu[m] = s;
  }
  const double vol = g.cell_area();
  std::vector<double> per_cell((std::size_t)psi.nx * psi.ny, 0.0);
  std::vector<double> c(psi.nmodes);
  for (int j = 0; j < psi.ny; ++j)
    for (int i = 0; i < psi.nx; ++i) {
      cell_coeffs(psi, i, j, c.data());
      per_cell[(std::size_t)j * psi.nx + i] = vol * pairwise_dot(mu, c);
    }
  return pairwise_sum(per_cell);
}

// Relative entropy density F(s) = s (log s - 1) + 1, F(0) = 1.
inline double entropy_F(double s) {
  if (s == 0.0) return 1.0;
  return s * (std::log(s) - 1.0) + 1.0;
}

inline double beta_cutoff(double s, double L) { return std::min(s, L); }
inline double beta_cutoff_delta(double s, double L, double delta) {
  return std::max(beta_cutoff(s, L), delta);
}

// Convex regularizations of F used by the scheme's energy arguments: quadratic
// continuation above L, and (when delta is given) also below delta. Exactly
// the piecewise definitions; second derivative is 1/max(min(s,L),delta).
inline double regularized_entropy(double s, double L, std::optional<double> delta = {}) {
  if (!(L > 1.0)) throw ValidationError("cutoff_L must exceed 1");
  if (delta) {
    const double d = *delta;
    if (!(d > 0.0) || !(d < 1.0)) throw ValidationError("delta must lie in (0,1)");
    if (s <= d) return (s * s - d * d) / (2.0 * d) + s * (std::log(d) - 1.0) + 1.0;
    if (s >= L) return (s * s - L * L) / (2.0 * L) + s * (std::log(L) - 1.0) + 1.0;
    return entropy_F(s);
  }
  if (s <= 0.0) return 1.0;  // F(0); the un-deltaed variant is used on s >= 0 only
  if (s >= L) return (s * s - L * L) / (2.0 * L) + s * (std::log(L) - 1.0) + 1.0;
  return entropy_F(s);
}

inline constexpr double entropy_floor = 1e-14;

struct EntropyFisher {
  double entropy = 0.0;
  double fisher_x = 0.0;
  double fisher_q = 0.0;
  double floored_mass = 0.0;
  long floored_nodes = 0;
};

// Entropy int int M F(psi_hat), configuration Fisher information of
// sqrt(psi_hat) (collocation derivatives), and physical-space Fisher
// information (centered cell differences, one-sided at walls). Node values
// below the floor are floored, and the mass so added is reported.
inline EntropyFisher entropy_fisher(const ConfigDistribution& psi, const HermiteBasis& b,
                                    const MacGrid& g) {
  require_basis_match(psi, b);
  const int nx = psi.nx, ny = psi.ny, nn = b.nnodes, count = b.count;
  const double vol = g.cell_area();
  EntropyFisher out;
  std::vector<double> c(psi.nmodes), vals(nn), s(nn), ds1(nn), ds2(nn);
  std::vector<double> ent_cell((std::size_t)nx * ny, 0.0), fq_cell((std::size_t)nx * ny, 0.0);
  std::vector<double> sqrt_field((std::size_t)nn * nx * ny, 0.0);
  double floored = 0.0;
  long nfloored = 0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      cell_coeffs(psi, i, j, c.data());
      coeffs_to_values(b, c.data(), vals.data());
      double e = 0.0;
      for (int a = 0; a < nn; ++a) {
        double v = vals[a];
        if (v < entropy_floor) {
          floored += vol * b.w2d[a] * (entropy_floor - v);
          ++nfloored;
          v = entropy_floor;
        }
        e += b.w2d[a] * entropy_F(v);
        s[a] = std::sqrt(v);
      }
      ent_cell[(std::size_t)j * nx + i] = vol * e;
      // collocation q-derivatives of sqrt(psi_hat)
      for (int k1 = 0; k1 < count; ++k1)
        for (int k2 = 0; k2 < count; ++k2) {
          const int a = k1 * count + k2;
          double d1 = 0.0, d2 = 0.0;
          for (int l = 0; l < count; ++l) {
            d1 += b.D1[(std::size_t)k1 * count + l] * s[l * count + k2];
            d2 += b.D1[(std::size_t)k2 * count + l] * s[k1 * count + l];
          }
          ds1[a] = d1;
          ds2[a] = d2;
        }
      double fq = 0.0;
      for (int a = 0; a < nn; ++a) fq += b.w2d[a] * (ds1[a] * ds1[a] + ds2[a] * ds2[a]);
      fq_cell[(std::size_t)j * nx + i] = vol * fq;
      for (int a = 0; a < nn; ++a)
        sqrt_field[(std::size_t)a * nx * ny + (std::size_t)j * nx + i] = s[a];
    }
  out.entropy = pairwise_sum(ent_cell);
  out.fisher_q = pairwise_sum(fq_cell);
  out.floored_mass = floored;
  out.floored_nodes = nfloored;
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  std::vector<double> fx_node(nn, 0.0);
  for (int a = 0; a < nn; ++a) {
    const double* f = &sqrt_field[(std::size_t)a * nx * ny];
    double acc = 0.0;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const double fc = f[(std::size_t)j * nx + i];
        double dx, dy;
        if (i == 0)
          dx = (f[(std::size_t)j * nx + 1] - fc) * ihx;
        else if (i == nx - 1)
          dx = (fc - f[(std::size_t)j * nx + nx - 2]) * ihx;
        else
          dx = 0.5 * (f[(std::size_t)j * nx + i + 1] - f[(std::size_t)j * nx + i - 1]) * ihx;
        if (j == 0)
          dy = (f[(std::size_t)nx + i] - fc) * ihy;
        else if (j == ny - 1)
          dy = (fc - f[(std::size_t)(ny - 2) * nx + i]) * ihy;
        else
          dy = 0.5 * (f[(std::size_t)(j + 1) * nx + i] - f[(std::size_t)(j - 1) * nx + i]) * ihy;
        acc += dx * dx + dy * dy;
      }
    fx_node[a] = vol * b.w2d[a] * acc;
  }
  out.fisher_x = pairwise_sum(fx_node);
  return out;
}

// Entropy bound on the second moment: int int M (|q|^2/2) psi_hat is
// controlled by 2 [ entropy + |Omega| * int M exp(|q|^2/4) dq ], and the last
// integral equals 2 exactly in two dimensions.
struct MomentBound {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};

inline MomentBound entropy_moment_bound(const ConfigDistribution& psi, const HermiteBasis& b,
                                        const MacGrid& g) {
  MomentBound mb;
  mb.lhs = 0.5 * moment_r(psi, b, g, 2);
  const EntropyFisher ef = entropy_fisher(psi, b, g);
  mb.rhs = 2.0 * (ef.entropy + g.lx * g.ly * 2.0);
  mb.ratio = mb.rhs > 0.0 ? mb.lhs / mb.rhs : 0.0;
  return mb;
}

// Weighted L2 norm squared of the coefficient representation.
inline double l2M_norm2(const ConfigDistribution& psi, const MacGrid& g) {
  const double vol = g.cell_area();
  std::vector<double> per_cell((std::size_t)psi.nx * psi.ny, 0.0);
  for (int j = 0; j < psi.ny; ++j)
    for (int i = 0; i < psi.nx; ++i) {
      double s = 0.0;
      for (int m = 0; m < psi.nmodes; ++m) {
        const double c = psi.modes[m](i, j);
        s += c * c;
      }
      per_cell[(std::size_t)j * psi.nx + i] = vol * s;
    }
  return pairwise_sum(per_cell);
}

// Configuration gradient seminorm: the operator is diagonal, so this is just
// sum (n1+n2) c^2.
inline double gradq_norm2(const ConfigDistribution& psi, const HermiteBasis& b,
                          const MacGrid& g) {
  require_basis_match(psi, b);
  const double vol = g.cell_area();
  std::vector<double> per_cell((std::size_t)psi.nx * psi.ny, 0.0);
  for (int j = 0; j < psi.ny; ++j)
    for (int i = 0; i < psi.nx; ++i) {
      double s = 0.0;
      for (int m = 0; m < psi.nmodes; ++m) {
        const double c = psi.modes[m](i, j);
        s += (b.mode_n1(m) + b.mode_n2(m)) * c * c;
      }
      per_cell[(std::size_t)j * psi.nx + i] = vol * s;
    }
  return pairwise_sum(per_cell);
}

}  // namespace nsfp
