#pragma once

#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "nsfp/errors.hpp"

namespace nsfp {

// Fixed-order pairwise reductions. Every sum that feeds a ledger, a norm, or a
// solver stopping test goes through these so that reruns (and any --threads
// setting) reproduce results bit for bit.
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

inline double pairwise_sum(const std::vector<double>& x) {
  return pairwise_sum(x.data(), x.size());
}

inline double pairwise_dot(const double* a, const double* b, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_dot(a, b, h) + pairwise_dot(a + h, b + h, n - h);
}

inline double pairwise_dot(const std::vector<double>& a, const std::vector<double>& b) {
  return pairwise_dot(a.data(), b.data(), a.size());
}

inline double max_abs(const double* x, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(x[i]));
  return m;
}

// Dense LU with partial pivoting for the small per-cell configuration systems
// (dimension (nq+1)^2, at most a few dozen).
class DenseLU {
 public:
  DenseLU() = default;

  // a is row-major n x n; factors in place.
  DenseLU(std::vector<double> a, int n) : n_(n), a_(std::move(a)), piv_(n) {
    for (int k = 0; k < n_; ++k) {
      int p = k;
      double best = std::fabs(a_[k * n_ + k]);
      for (int i = k + 1; i < n_; ++i) {
        const double v = std::fabs(a_[i * n_ + k]);
        if (v > best) {
          best = v;
          p = i;
        }
      }
      if (best == 0.0) throw SolverError("singular linear system in dense LU factorization");
      piv_[k] = p;
      if (p != k)
        for (int j = 0; j < n_; ++j) std::swap(a_[k * n_ + j], a_[p * n_ + j]);
      const double d = a_[k * n_ + k];
      for (int i = k + 1; i < n_; ++i) {
        const double m = a_[i * n_ + k] / d;
        a_[i * n_ + k] = m;
        for (int j = k + 1; j < n_; ++j) a_[i * n_ + j] -= m * a_[k * n_ + j];
      }
    }
  }

  void solve(const double* b, double* x) const {
    for (int i = 0; i < n_; ++i) x[i] = b[i];
    for (int k = 0; k < n_; ++k) {
      if (piv_[k] != k) std::swap(x[k], x[piv_[k]]);
      for (int i = k + 1; i < n_; ++i) x[i] -= a_[i * n_ + k] * x[k];
    }
    for (int i = n_ - 1; i >= 0; --i) {
      for (int j = i + 1; j < n_; ++j) x[i] -= a_[i * n_ + j] * x[j];
      x[i] /= a_[i * n_ + i];
    }
  }

  std::vector<double> solve(const std::vector<double>& b) const {
    std::vector<double> x(b.size());
    solve(b.data(), x.data());
    return x;
  }

 private:
  int n_ = 0;
  std::vector<double> a_;
  std::vector<int> piv_;
};

struct IterStats {
  int iters = 0;
  double rel_residual = 0.0;
  double inf_residual = 0.0;
};

// Jacobi-preconditioned CG. The incoming x is the initial guess, so a caller
// whose guess already solves the system gets it back bitwise with zero
// iterations; a zero right-hand side resets x to the exact zero solution.
// Stops when either the 2-norm relative residual drops below rtol or the
// max-norm residual drops below abs_inf (whichever first); throws after
// max_iters. Serial on purpose: the dot products define the run's
// reproducibility.
template <class Apply>
IterStats cg_solve(const Apply& apply, const std::vector<double>& diag,
                   const std::vector<double>& b, std::vector<double>& x, double rtol,
                   double abs_inf, int max_iters, const char* what) {
  const std::size_t n = b.size();
  std::vector<double> r(n), z(n), p(n), ap(n);
  if (x.size() != n) x.assign(n, 0.0);
  const double bnorm = std::sqrt(pairwise_dot(b, b));
  IterStats st;
  if (bnorm == 0.0) {
    x.assign(n, 0.0);
    return st;
  }
  apply(x, ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
  st.inf_residual = max_abs(r.data(), n);
  st.rel_residual = std::sqrt(pairwise_dot(r, r)) / bnorm;
  if (st.rel_residual <= rtol || st.inf_residual <= abs_inf || st.inf_residual == 0.0) {
    return st;
  }
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
  p = z;
  double rz = pairwise_dot(r, z);
  for (int it = 1; it <= max_iters; ++it) {
    apply(p, ap);
    const double pap = pairwise_dot(p, ap);
    if (pap <= 0.0) throw SolverError(std::string(what) + ": CG breakdown (operator not SPD)");
    const double alpha = rz / pap;
    for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
    for (std::size_t i = 0; i < n; ++i) r[i] -= alpha * ap[i];
    const double rinf = max_abs(r.data(), n);
    const double r2 = std::sqrt(pairwise_dot(r, r));
    st.iters = it;
    st.rel_residual = r2 / bnorm;
    st.inf_residual = rinf;
    if (st.rel_residual <= rtol || rinf <= abs_inf) return st;
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
    const double rz_new = pairwise_dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw SolverError(std::string(what) + ": CG did not converge within " +
                    std::to_string(max_iters) + " iterations");
}

// Plain BiCGStab for the nonsymmetric monolithic step (small grids only).
template <class Apply>
IterStats bicgstab_solve(const Apply& apply, const std::vector<double>& b,
                         std::vector<double>& x, double rtol, int max_iters,
                         const char* what) {
  const std::size_t n = b.size();
  std::vector<double> r(n), r0(n), p(n), v(n), s(n), t(n);
  x.assign(n, 0.0);
  r = b;
  r0 = r;
  const double bnorm = std::sqrt(pairwise_dot(b, b));
  IterStats st;
  if (bnorm == 0.0) return st;
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  p.assign(n, 0.0);
  v.assign(n, 0.0);
  for (int it = 1; it <= max_iters; ++it) {
    const double rho_new = pairwise_dot(r0, r);
    if (rho_new == 0.0) throw SolverError(std::string(what) + ": BiCGStab breakdown");
    const double beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    apply(p, v);
    alpha = rho / pairwise_dot(r0, v);
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    apply(s, t);
    const double tt = pairwise_dot(t, t);
    omega = tt > 0.0 ? pairwise_dot(t, s) / tt : 0.0;
    for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i] + omega * s[i];
    for (std::size_t i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
    const double rel = std::sqrt(pairwise_dot(r, r)) / bnorm;
    st.iters = it;
    st.rel_residual = rel;
    if (rel <= rtol) return st;
    if (omega == 0.0) throw SolverError(std::string(what) + ": BiCGStab stagnated");
  }
  throw SolverError(std::string(what) + ": BiCGStab did not converge within " +
                    std::to_string(max_iters) + " iterations");
}

// Smallest eigenvalue of a symmetric 2x2 matrix.
inline double sym2x2_min_eig(double a11, double a12, double a22) {
  const double mean = 0.5 * (a11 + a22);
  const double diff = 0.5 * (a11 - a22);
  return mean - std::sqrt(diff * diff + a12 * a12);
}

namespace detail {
inline int& thread_count() {
  static int n = 1;
  return n;
}
}  // namespace detail

inline void set_thread_count(int n) { detail::thread_count() = n < 1 ? 1 : n; }
inline int thread_count() { return detail::thread_count(); }

// Block partition of [0, n). Workers write disjoint outputs, so the result is
// independent of the thread count; reductions stay serial elsewhere. The first
// worker exception is rethrown on the calling thread.
inline void parallel_for(int n, const std::function<void(int, int)>& body) {
  const int nt = std::min(detail::thread_count(), n);
  if (nt <= 1 || n <= 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nt);
  const int chunk = (n + nt - 1) / nt;
  std::vector<std::exception_ptr> errors(nt);
  for (int t = 0; t < nt; ++t) {
    const int lo = t * chunk;
    const int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, &errors, t, lo, hi]() {
      try {
        body(lo, hi);
      } catch (...) {
        errors[(std::size_t)t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace nsfp
