#pragma once

#include <cmath>
#include <vector>

#include "homog/common.hpp"

namespace homog {

struct SolveStats {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = true;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

}  // namespace detail

// Preconditioned conjugate gradients on an SPD operator given as a callable
// apply(in, out). `inv_diag` is an optional Jacobi preconditioner. Stops at
// ||b - A x|| <= tol * ||b||. x is the initial guess and the result.
template <class Apply>
inline SolveStats cg_solve(const Apply& apply, const std::vector<double>& b,
                           std::vector<double>& x, double tol, int max_iter,
                           const std::vector<double>* inv_diag = nullptr) {
  const std::size_t n = b.size();
  std::vector<double> r(n), z(n), p(n), ap(n);

  double bnorm = detail::norm2(b);
  if (bnorm == 0.0) {
    x.assign(n, 0.0);
    return {0, 0.0, true};
  }

  apply(x, ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];

  auto precond = [&](const std::vector<double>& in, std::vector<double>& out) {
    if (inv_diag)
      for (std::size_t i = 0; i < n; ++i) out[i] = (*inv_diag)[i] * in[i];
    else
      out = in;
  };

  precond(r, z);
  p = z;
  double rz = detail::dot(r, z);

  SolveStats st;
  for (st.iterations = 0; st.iterations < max_iter; ++st.iterations) {
    st.rel_residual = detail::norm2(r) / bnorm;
    if (st.rel_residual <= tol) return st;

    apply(p, ap);
    double pap = detail::dot(p, ap);
    if (!(pap > 0.0)) break;  // lost positivity: bail out as non-converged
    double alpha = rz / pap;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    precond(r, z);
    double rz_new = detail::dot(r, z);
    double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  st.rel_residual = detail::norm2(r) / bnorm;
  st.converged = st.rel_residual <= tol;
  return st;
}

// BiCGStab for the mildly nonsymmetric stencils the full-tensor path can
// produce. Same stopping rule as cg_solve.
template <class Apply>
inline SolveStats bicgstab_solve(const Apply& apply, const std::vector<double>& b,
                                 std::vector<double>& x, double tol, int max_iter,
                                 const std::vector<double>* inv_diag = nullptr) {
  const std::size_t n = b.size();
  std::vector<double> r(n), r0(n), p(n), v(n), s(n), t(n), ph(n), sh(n);

  double bnorm = detail::norm2(b);
  if (bnorm == 0.0) {
    x.assign(n, 0.0);
    return {0, 0.0, true};
  }

  apply(x, v);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - v[i];
  r0 = r;
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  std::fill(p.begin(), p.end(), 0.0);
  std::fill(v.begin(), v.end(), 0.0);

  auto precond = [&](const std::vector<double>& in, std::vector<double>& out) {
    if (inv_diag)
      for (std::size_t i = 0; i < n; ++i) out[i] = (*inv_diag)[i] * in[i];
    else
      out = in;
  };

  SolveStats st;
  for (st.iterations = 0; st.iterations < max_iter; ++st.iterations) {
    st.rel_residual = detail::norm2(r) / bnorm;
    if (st.rel_residual <= tol) return st;

    double rho_new = detail::dot(r0, r);
    if (rho_new == 0.0) break;
    double beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    precond(p, ph);
    apply(ph, v);
    double r0v = detail::dot(r0, v);
    if (r0v == 0.0) break;
    alpha = rho / r0v;
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    precond(s, sh);
    apply(sh, t);
    double tt = detail::dot(t, t);
    omega = tt > 0.0 ? detail::dot(t, s) / tt : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * ph[i] + omega * sh[i];
      r[i] = s[i] - omega * t[i];
    }
    if (omega == 0.0) break;
  }
  st.rel_residual = detail::norm2(r) / bnorm;
  st.converged = st.rel_residual <= tol;
  return st;
}

// Thomas algorithm; diagonally dominant tridiagonal systems only (which the
// 1D Dirichlet stencils are). lower[0] and upper[n-1] are ignored.
inline std::vector<double> tridiag_solve(std::vector<double> lower,
                                         std::vector<double> diag,
                                         std::vector<double> upper,
                                         std::vector<double> rhs) {
  const std::size_t n = diag.size();
  if (lower.size() != n || upper.size() != n || rhs.size() != n)
    throw ConsistencyError("tridiag_solve: band lengths disagree");
  for (std::size_t i = 1; i < n; ++i) {
    double w = lower[i] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
    if (!(std::abs(diag[i]) > 0.0))
      throw NumericalError("tridiag_solve: zero pivot at row " + std::to_string(i));
  }
  std::vector<double> x(n);
  x[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;)
    x[i] = (rhs[i] - upper[i] * x[i + 1]) / diag[i];
  return x;
}

}  // namespace homog
