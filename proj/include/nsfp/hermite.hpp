#pragma once

#include <cmath>
#include <vector>

#include "nsfp/errors.hpp"
#include "nsfp/numerics.hpp"

namespace nsfp {

// Hookean dumbbell closure data: linear spring, Gaussian equilibrium weight
//   M(q) = exp(-|q|^2/2) / (2 pi)   (d = 2),
// and the elementary identity M * grad_q(1/M) = q that moves the drag between
// its divergence and weak forms.
struct SpringModel {
  static double potential(double s) { return s; }          // U(s) = s
  static double potential_deriv(double) { return 1.0; }    // U'(s) = 1
  static void force(double q1, double q2, double& f1, double& f2) {
    f1 = q1;  // F(q) = U'(|q|^2/2) q
    f2 = q2;
  }
  static constexpr double normalization = 6.283185307179586476925286766559;  // 2 pi
  static double maxwellian(double q1, double q2) {
    return std::exp(-0.5 * (q1 * q1 + q2 * q2)) / normalization;
  }
};

// Orthonormal probabilists' Hermite values h_0..h_n at x.
inline void hermite_values(int nmax, double x, double* out) {
  out[0] = 1.0;
  if (nmax == 0) return;
  out[1] = x;
  for (int n = 1; n < nmax; ++n)
    out[n + 1] = (x * out[n] - std::sqrt((double)n) * out[n - 1]) / std::sqrt((double)n + 1.0);
}

// Gauss quadrature for the weight exp(-x^2/2)/sqrt(2 pi): sum w_i f(x_i)
// reproduces Gaussian moments exactly up to degree 2*count - 1.
struct GaussHermite1D {
  std::vector<double> x, w;

  explicit GaussHermite1D(int count) {
    if (count < 1) throw ValidationError("quadrature count must be positive");
    x.assign(count, 0.0);
    w.assign(count, 0.0);
    std::vector<double> prev{};  // zeros of the previous degree
    std::vector<double> cur{0.0};
    std::vector<double> h((std::size_t)count + 1);
    for (int k = 2; k <= count; ++k) {
      prev = cur;
      cur.assign(k, 0.0);
      const double bound = std::sqrt(4.0 * k + 2.0);
      for (int r = 0; r < k; ++r) {
        double lo = (r == 0) ? -bound : prev[r - 1];
        double hi = (r == k - 1) ? bound : prev[r];
        auto eval = [&](double t) {
          hermite_values(k, t, h.data());
          return h[k];
        };
        double flo = eval(lo);
        for (int it = 0; it < 80 && hi - lo > 1e-14 * (1.0 + std::fabs(lo)); ++it) {
          const double mid = 0.5 * (lo + hi);
          const double fm = eval(mid);
          if ((flo < 0.0) == (fm < 0.0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        double z = 0.5 * (lo + hi);
        for (int it = 0; it < 8; ++it) {  // Newton polish: h_k' = sqrt(k) h_{k-1}
          hermite_values(k, z, h.data());
          const double d = std::sqrt((double)k) * h[k - 1];
          if (d == 0.0) break;
          const double dz = h[k] / d;
          z -= dz;
          if (std::fabs(dz) < 1e-16 * (1.0 + std::fabs(z))) break;
        }
        cur[r] = z;
      }
    }
    for (int i = 0; i < count; ++i) x[i] = cur[i];
    // enforce exact symmetry about 0
    for (int i = 0; i < count / 2; ++i) {
      const double a = 0.5 * (std::fabs(x[i]) + std::fabs(x[count - 1 - i]));
      x[i] = -a;
      x[count - 1 - i] = a;
    }
    if (count % 2 == 1) x[count / 2] = 0.0;
    for (int i = 0; i < count; ++i) {
      hermite_values(count > 1 ? count - 1 : 0, x[i], h.data());
      const double hk1 = (count > 1) ? h[count - 1] : 1.0;
      w[i] = 1.0 / (count * hk1 * hk1);
    }
    for (int i = 0; i < count / 2; ++i) {
      const double a = 0.5 * (w[i] + w[count - 1 - i]);
      w[i] = a;
      w[count - 1 - i] = a;
    }
  }
};

// Tensor Hermite basis under the Maxwellian weight, full tensor truncation
// n1, n2 <= nq. Mode index m = n1*(nq+1) + n2. Carries the collocation tables
// used everywhere else:
//   V  (nnodes x nmodes)  basis values at quadrature nodes
//   P  (nmodes x nnodes)  quadrature projection, P V = I
//   D1 (count x count)    Lagrange differentiation matrix on the 1-D nodes
struct HermiteBasis {
  int nq = 0;
  int count = 0;
  int nmodes = 0;
  int nnodes = 0;
  std::vector<double> x1d, w1d;
  std::vector<double> h1d, dh1d;  // (nq+1) x count: values/derivatives of orthonormal modes
  std::vector<double> w2d;        // tensor weights, node a = k1*count + k2
  std::vector<double> qn1, qn2;   // node coordinates
  std::vector<double> V, P;
  std::vector<double> D1;

  int mode_index(int n1, int n2) const { return n1 * (nq + 1) + n2; }
  int mode_n1(int m) const { return m / (nq + 1); }
  int mode_n2(int m) const { return m % (nq + 1); }
};

inline HermiteBasis build_basis(int nq, int count = 0) {
  if (nq < 2) throw ValidationError("nq must be at least 2");
  if (count == 0) count = nq + 2;
  if (count < nq + 2) throw ValidationError("quad_count must be at least nq+2");
  HermiteBasis b;
  b.nq = nq;
  b.count = count;
  b.nmodes = (nq + 1) * (nq + 1);
  b.nnodes = count * count;
  GaussHermite1D q(count);
  b.x1d = q.x;
  b.w1d = q.w;
  b.h1d.assign((std::size_t)(nq + 1) * count, 0.0);
  b.dh1d.assign((std::size_t)(nq + 1) * count, 0.0);
  std::vector<double> h((std::size_t)nq + 1);
  for (int k = 0; k < count; ++k) {
    hermite_values(nq, b.x1d[k], h.data());
    for (int n = 0; n <= nq; ++n) {
      b.h1d[(std::size_t)n * count + k] = h[n];
      b.dh1d[(std::size_t)n * count + k] =
          (n == 0) ? 0.0 : std::sqrt((double)n) * h[n - 1];
    }
  }
  b.w2d.assign(b.nnodes, 0.0);
  b.qn1.assign(b.nnodes, 0.0);
  b.qn2.assign(b.nnodes, 0.0);
  for (int k1 = 0; k1 < count; ++k1)
    for (int k2 = 0; k2 < count; ++k2) {
      const int a = k1 * count + k2;
      b.w2d[a] = b.w1d[k1] * b.w1d[k2];
      b.qn1[a] = b.x1d[k1];
      b.qn2[a] = b.x1d[k2];
    }
  b.V.assign((std::size_t)b.nnodes * b.nmodes, 0.0);
  b.P.assign((std::size_t)b.nmodes * b.nnodes, 0.0);
  for (int k1 = 0; k1 < count; ++k1)
    for (int k2 = 0; k2 < count; ++k2) {
      const int a = k1 * count + k2;
      for (int m = 0; m < b.nmodes; ++m) {
        const int n1 = b.mode_n1(m), n2 = b.mode_n2(m);
        const double val =
            b.h1d[(std::size_t)n1 * count + k1] * b.h1d[(std::size_t)n2 * count + k2];
        b.V[(std::size_t)a * b.nmodes + m] = val;
        b.P[(std::size_t)m * b.nnodes + a] = b.w2d[a] * val;
      }
    }
  // barycentric Lagrange differentiation on the 1-D nodes
  std::vector<double> lam(count, 1.0);
  for (int k = 0; k < count; ++k)
    for (int l = 0; l < count; ++l)
      if (l != k) lam[k] /= (b.x1d[k] - b.x1d[l]);
  b.D1.assign((std::size_t)count * count, 0.0);
  for (int k = 0; k < count; ++k) {
    double diag = 0.0;
    for (int l = 0; l < count; ++l)
      if (l != k) {
        const double d = (lam[l] / lam[k]) / (b.x1d[k] - b.x1d[l]);
        b.D1[(std::size_t)k * count + l] = d;
        diag -= d;
      }
    b.D1[(std::size_t)k * count + k] = diag;
  }
  return b;
}

}  // namespace nsfp
