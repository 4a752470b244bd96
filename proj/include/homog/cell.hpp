#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "homog/extension.hpp"
#include "homog/krylov.hpp"

namespace homog {

// Uniform n^d grid over the periodic unit cell, unknowns at cell centers.
template <int D>
struct UnitCellMesh {
  int n = 128;

  void validate() const {
    if (n < 2) throw ParamError("unit cell mesh: n must be at least 2");
  }
  std::size_t cell_count() const {
    std::size_t t = 1;
    for (int k = 0; k < D; ++k) t *= static_cast<std::size_t>(n);
    return t;
  }
};

enum class TensorMethod { y_form, w_form, harmonic_1d };

template <int D>
struct AveragedTensor {
  Mat<D> A{};
  Vec<D> x{};
  TensorMethod method = TensorMethod::y_form;
  double residual = 0.0;
};

namespace detail {

inline double harmonic_pair(double p, double q) {
  return (p > 0.0 && q > 0.0) ? 2.0 * p * q / (p + q) : 0.0;
}

// Flux-form finite volumes on the periodic cell. The symmetric coefficient
// is split into nonnegative two-point conductances: axis edges carry
// a_kk - sum|a_km|, diagonal edges (d = 2) carry the positive and negative
// parts of the off-diagonal entry. Face values are harmonic means of the
// adjacent cell values, which keeps the scheme exact for layered media and
// robust across jumps.
template <int D>
struct CellOperator {
  static_assert(D == 1 || D == 2, "validated for d in {1, 2}");

  int n = 0;
  double h = 0.0;
  std::size_t total = 0;
  bool cross = false;
  std::array<std::vector<double>, D> axis;  // face conductance, edge i -> i+e_k
  std::vector<double> diag_p, diag_m;       // edges (1,1) and (1,-1), d = 2

  std::size_t idx2(int i, int j) const {
    return static_cast<std::size_t>(j) * n + i;
  }

  void build(const std::vector<Mat<D>>& c, int n_, double beta_scale) {
    n = n_;
    h = 1.0 / n;
    total = c.size();

    const double slack = 1e-12 * (beta_scale + 1.0);
    std::vector<double> kap[D];
    std::vector<double> kp, km;
    for (int k = 0; k < D; ++k) kap[k].resize(total);
    if constexpr (D == 2) {
      kp.resize(total);
      km.resize(total);
    }
    for (std::size_t i = 0; i < total; ++i) {
      const Mat<D>& a = c[i];
      if (a.asym_norm() > slack)
        throw UnsupportedError("cell solver: coefficient sample not symmetric");
      if (!(a.min_diag() > 0.0))
        throw EllipticityError("cell solver: non-elliptic coefficient sample");
      if constexpr (D == 1) {
        kap[0][i] = a(0, 0);
      } else {
        double b = a(0, 1);
        for (int k = 0; k < 2; ++k) {
          double v = a(k, k) - std::abs(b);
          if (v < -slack)
            throw UnsupportedError(
                "cell solver: off-diagonal entry breaks diagonal dominance");
          kap[k][i] = std::max(v, 0.0);
        }
        kp[i] = std::max(b, 0.0);
        km[i] = std::max(-b, 0.0);
        if (b != 0.0) cross = true;
      }
    }

    // Harmonic face values, one per edge anchored at its base cell.
    if constexpr (D == 1) {
      axis[0].resize(total);
      for (int i = 0; i < n; ++i)
        axis[0][i] = harmonic_pair(kap[0][i], kap[0][(i + 1) % n]);
    } else {
      for (int k = 0; k < 2; ++k) axis[k].resize(total);
      if (cross) {
        diag_p.resize(total);
        diag_m.resize(total);
      }
      for (int j = 0; j < n; ++j) {
        int jn = (j + 1) % n, jm = (j + n - 1) % n;
        for (int i = 0; i < n; ++i) {
          int in = (i + 1) % n;
          std::size_t id = idx2(i, j);
          axis[0][id] = harmonic_pair(kap[0][id], kap[0][idx2(in, j)]);
          axis[1][id] = harmonic_pair(kap[1][id], kap[1][idx2(i, jn)]);
          if (cross) {
            diag_p[id] = harmonic_pair(kp[id], kp[idx2(in, jn)]);
            diag_m[id] = harmonic_pair(km[id], km[idx2(in, jm)]);
          }
        }
      }
    }
  }

  // out = A u with the constant null vector; scaling drops the common
  // h^(d-2) factor.
  void apply(const std::vector<double>& u, std::vector<double>& out) const {
    std::fill(out.begin(), out.end(), 0.0);
    if constexpr (D == 1) {
      for (int i = 0; i < n; ++i) {
        int in = (i + 1) % n;
        double f = axis[0][i] * (u[i] - u[in]);
        out[i] += f;
        out[in] -= f;
      }
    } else {
      for (int j = 0; j < n; ++j) {
        int jn = (j + 1) % n, jm = (j + n - 1) % n;
        for (int i = 0; i < n; ++i) {
          int in = (i + 1) % n;
          std::size_t id = idx2(i, j);
          double f = axis[0][id] * (u[id] - u[idx2(in, j)]);
          out[id] += f;
          out[idx2(in, j)] -= f;
          f = axis[1][id] * (u[id] - u[idx2(i, jn)]);
          out[id] += f;
          out[idx2(i, jn)] -= f;
          if (cross) {
            f = diag_p[id] * (u[id] - u[idx2(in, jn)]);
            out[id] += f;
            out[idx2(in, jn)] -= f;
            f = diag_m[id] * (u[id] - u[idx2(in, jm)]);
            out[id] += f;
            out[idx2(in, jm)] -= f;
          }
        }
      }
    }
  }

  // Load vector of the j-th corrector problem: minus the operator applied to
  // the affine function y_j, expressed through per-edge differences h * o_j.
  std::vector<double> rhs(int dir) const {
    std::vector<double> b(total, 0.0);
    auto add = [&](std::size_t from, std::size_t to, double kappa, double oj) {
      double f = kappa * h * oj;
      b[from] += f;
      b[to] -= f;
    };
    if constexpr (D == 1) {
      for (int i = 0; i < n; ++i) add(i, (i + 1) % n, axis[0][i], 1.0);
    } else {
      for (int j = 0; j < n; ++j) {
        int jn = (j + 1) % n, jm = (j + n - 1) % n;
        for (int i = 0; i < n; ++i) {
          int in = (i + 1) % n;
          std::size_t id = idx2(i, j);
          add(id, idx2(in, j), axis[0][id], dir == 0 ? 1.0 : 0.0);
          add(id, idx2(i, jn), axis[1][id], dir == 1 ? 1.0 : 0.0);
          if (cross) {
            add(id, idx2(in, jn), diag_p[id], 1.0);  // offset (1, 1)
            add(id, idx2(in, jm), diag_m[id], dir == 0 ? 1.0 : -1.0);  // (1,-1)
          }
        }
      }
    }
    return b;
  }

  std::vector<double> inverse_diagonal() const {
    std::vector<double> d(total, 0.0);
    auto acc = [&](std::size_t a, std::size_t b, double kappa) {
      d[a] += kappa;
      d[b] += kappa;
    };
    if constexpr (D == 1) {
      for (int i = 0; i < n; ++i) acc(i, (i + 1) % n, axis[0][i]);
    } else {
      for (int j = 0; j < n; ++j) {
        int jn = (j + 1) % n, jm = (j + n - 1) % n;
        for (int i = 0; i < n; ++i) {
          int in = (i + 1) % n;
          std::size_t id = idx2(i, j);
          acc(id, idx2(in, j), axis[0][id]);
          acc(id, idx2(i, jn), axis[1][id]);
          if (cross) {
            acc(id, idx2(in, jn), diag_p[id]);
            acc(id, idx2(in, jm), diag_m[id]);
          }
        }
      }
    }
    for (double& v : d) v = v > 0.0 ? 1.0 / v : 1.0;
    return d;
  }

  // Averaged tensor in energy form: A_ij = sum over edges of
  // h^d kappa (dw_i/h + o_i)(dw_j/h + o_j). Symmetric by construction and
  // equal to the flux average up to the solver residual.
  Mat<D> tensor(const std::array<std::vector<double>, D>& w) const {
    Mat<D> A{};
    double vol = 1.0;
    for (int k = 0; k < D; ++k) vol *= h;
    auto accumulate = [&](std::size_t from, std::size_t to, double kappa,
                          const Vec<D>& o) {
      Vec<D> g;
      for (int k = 0; k < D; ++k) g[k] = (w[k][to] - w[k][from]) / h + o[k];
      for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) A(i, j) += vol * kappa * g[i] * g[j];
    };
    if constexpr (D == 1) {
      for (int i = 0; i < n; ++i)
        accumulate(i, (i + 1) % n, axis[0][i], Vec<1>{1.0});
    } else {
      for (int j = 0; j < n; ++j) {
        int jn = (j + 1) % n, jm = (j + n - 1) % n;
        for (int i = 0; i < n; ++i) {
          int in = (i + 1) % n;
          std::size_t id = idx2(i, j);
          accumulate(id, idx2(in, j), axis[0][id], Vec<2>{1.0, 0.0});
          accumulate(id, idx2(i, jn), axis[1][id], Vec<2>{0.0, 1.0});
          if (cross) {
            accumulate(id, idx2(in, jn), diag_p[id], Vec<2>{1.0, 1.0});
            accumulate(id, idx2(in, jm), diag_m[id], Vec<2>{1.0, -1.0});
          }
        }
      }
    }
    return A;
  }

  double bilinear(const std::vector<double>& u, const std::vector<double>& v) const {
    double s = 0.0;
    const double scale = (D == 1) ? 1.0 / h : 1.0;  // h^(d-2)
    auto accumulate = [&](std::size_t from, std::size_t to, double kappa) {
      s += scale * kappa * (u[to] - u[from]) * (v[to] - v[from]);
    };
    if constexpr (D == 1) {
      for (int i = 0; i < n; ++i) accumulate(i, (i + 1) % n, axis[0][i]);
    } else {
      for (int j = 0; j < n; ++j) {
        int jn = (j + 1) % n, jm = (j + n - 1) % n;
        for (int i = 0; i < n; ++i) {
          int in = (i + 1) % n;
          std::size_t id = idx2(i, j);
          accumulate(id, idx2(in, j), axis[0][id]);
          accumulate(id, idx2(i, jn), axis[1][id]);
          if (cross) {
            accumulate(id, idx2(in, jn), diag_p[id]);
            accumulate(id, idx2(in, jm), diag_m[id]);
          }
        }
      }
    }
    return s;
  }

  double load(int dir, const std::vector<double>& v) const {
    double s = 0.0;
    double scale = (D == 1) ? 1.0 / h : 1.0;
    auto accumulate = [&](std::size_t from, std::size_t to, double kappa, double oj) {
      s -= scale * kappa * h * oj * (v[to] - v[from]);
    };
    if constexpr (D == 1) {
      for (int i = 0; i < n; ++i) accumulate(i, (i + 1) % n, axis[0][i], 1.0);
    } else {
      for (int j = 0; j < n; ++j) {
        int jn = (j + 1) % n, jm = (j + n - 1) % n;
        for (int i = 0; i < n; ++i) {
          int in = (i + 1) % n;
          std::size_t id = idx2(i, j);
          accumulate(id, idx2(in, j), axis[0][id], dir == 0 ? 1.0 : 0.0);
          accumulate(id, idx2(i, jn), axis[1][id], dir == 1 ? 1.0 : 0.0);
          if (cross) {
            accumulate(id, idx2(in, jn), diag_p[id], 1.0);
            accumulate(id, idx2(in, jm), diag_m[id], dir == 0 ? 1.0 : -1.0);
          }
        }
      }
    }
    return s;
  }
};

}  // namespace detail

// Correctors of one cell problem. Sample i of the periodic grid sits at
// y = anchor + (i + 1/2) / n (mod 1) per axis; anchoring at the window keeps
// the sampled content identical to the window problem and lets the tensor
// vary continuously as the window slides.
template <int D>
struct CellSolution {
  UnitCellMesh<D> mesh;
  Vec<D> point_x{};
  Vec<D> anchor{};
  std::array<std::vector<double>, D> w;  // cell-centered, zero mean
  std::array<std::vector<std::array<double, D>>, D> grad_w;  // central differences
  std::vector<Mat<D>> coeff;  // sampled a(x, y_i)
  double residual = 0.0;
  int iterations = 0;

  double w_eval(int j, const Vec<D>& y) const {
    const int n = mesh.n;
    std::array<int, D> base;
    std::array<double, D> theta;
    for (int k = 0; k < D; ++k) {
      double s = frac(y[k] - anchor[k]) * n - 0.5;
      double fl = std::floor(s);
      theta[k] = s - fl;
      int i0 = static_cast<int>(fl);
      base[k] = ((i0 % n) + n) % n;
    }
    double acc = 0.0;
    for (int corner = 0; corner < (1 << D); ++corner) {
      double weight = 1.0;
      std::size_t idx = 0;
      for (int k = D - 1; k >= 0; --k) {
        int up = (corner >> k) & 1;
        weight *= up ? theta[k] : 1.0 - theta[k];
        int ik = base[k] + up;
        if (ik >= n) ik -= n;
        idx = idx * n + ik;
      }
      acc += weight * w[j][idx];
    }
    return acc;
  }
};

namespace detail {

template <int D>
inline CellSolution<D> solve_periodic_samples(std::vector<Mat<D>> samples,
                                              const UnitCellMesh<D>& mesh,
                                              const Vec<D>& x, const Vec<D>& anchor,
                                              double tol, double beta_scale) {
  CellOperator<D> op;
  op.build(samples, mesh.n, beta_scale);

  CellSolution<D> sol;
  sol.mesh = mesh;
  sol.point_x = x;
  sol.anchor = anchor;
  sol.coeff = std::move(samples);

  const std::size_t total = op.total;
  const int cap = 50 * static_cast<int>(total);
  std::vector<double> inv_diag = op.inverse_diagonal();
  inv_diag[0] = 1.0;  // pinned unknown

  for (int j = 0; j < D; ++j) {
    std::vector<double> b = op.rhs(j);
    std::vector<double> w(total, 0.0);

    double bn = 0.0;
    for (double v : b) bn += v * v;
    if (bn > 0.0) {
      // Pin unknown 0 to zero; the reduced operator is positive definite and
      // the solution differs from the zero-mean one by a constant only.
      b[0] = 0.0;
      auto apply_pinned = [&op](const std::vector<double>& u, std::vector<double>& out) {
        std::vector<double> tmp = u;
        double u0 = tmp[0];
        tmp[0] = 0.0;
        op.apply(tmp, out);
        out[0] = u0;
      };
      SolveStats st = cg_solve(apply_pinned, b, w, tol, cap, &inv_diag);
      if (!st.converged)
        throw NumericalError("cell problem, direction " + std::to_string(j) +
                             ": CG stopped after " + std::to_string(st.iterations) +
                             " iterations at relative residual " +
                             format_double(st.rel_residual));
      sol.residual = std::max(sol.residual, st.rel_residual);
      sol.iterations += st.iterations;
      double mean = 0.0;
      for (double v : w) mean += v;
      mean /= static_cast<double>(total);
      for (double& v : w) v -= mean;
    }
    sol.w[j] = std::move(w);
  }

  // Cellwise gradients by periodic central differences.
  const int n = mesh.n;
  for (int j = 0; j < D; ++j) {
    sol.grad_w[j].resize(total);
    if constexpr (D == 1) {
      for (int i = 0; i < n; ++i) {
        int in = (i + 1) % n, im = (i + n - 1) % n;
        sol.grad_w[j][i][0] = 0.5 * (sol.w[j][in] - sol.w[j][im]) / op.h;
      }
    } else {
      for (int jj = 0; jj < n; ++jj)
        for (int i = 0; i < n; ++i) {
          std::size_t id = op.idx2(i, jj);
          int in = (i + 1) % n, im = (i + n - 1) % n;
          int jn = (jj + 1) % n, jm = (jj + n - 1) % n;
          sol.grad_w[j][id][0] = 0.5 * (sol.w[j][op.idx2(in, jj)] - sol.w[j][op.idx2(im, jj)]) / op.h;
          sol.grad_w[j][id][1] = 0.5 * (sol.w[j][op.idx2(i, jn)] - sol.w[j][op.idx2(i, jm)]) / op.h;
        }
    }
  }
  return sol;
}

// Window-anchored midpoint samples of the unit-cell coefficient a(x, .).
template <int D>
inline std::vector<Mat<D>> window_samples(const MicroCoefficient<D>& field,
                                          const Vec<D>& w_lo, double eps_bar, int n) {
  std::size_t total = 1;
  for (int k = 0; k < D; ++k) total *= static_cast<std::size_t>(n);
  std::vector<Mat<D>> c(total);
  std::array<int, D> i{};
  for (std::size_t flat = 0; flat < total; ++flat) {
    Vec<D> z;
    for (int k = 0; k < D; ++k) z[k] = w_lo[k] + (i[k] + 0.5) * eps_bar / n;
    c[flat] = field.eval_clamped(z);
    int k = 0;
    while (k < D && ++i[k] == n) i[k++] = 0;
  }
  return c;
}

}  // namespace detail

// Solves the d corrector problems of a(x, .) on the unit cell.
template <int D>
inline CellSolution<D> solve_cell(const TwoScaleCoefficient<D>& ext, const Vec<D>& x,
                                  const UnitCellMesh<D>& mesh, double tol = 1e-10) {
  mesh.validate();
  check_inside_closed(ext.omega(), x, "solve_cell");

  Vec<D> w_lo = window_anchor(ext, x);
  Vec<D> anchor;
  for (int k = 0; k < D; ++k) anchor[k] = frac(w_lo[k] / ext.eps_bar);

  std::vector<Mat<D>> samples;
  if (ext.kind == ExtKind::trivial) {
    Mat<D> a = ext.field.eval_clamped(x);
    samples.assign(mesh.cell_count(), a);
  } else {
    samples = detail::window_samples(ext.field, w_lo, ext.eps_bar, mesh.n);
  }
  return detail::solve_periodic_samples(std::move(samples), mesh, x, anchor, tol,
                                        ext.field.beta);
}

// Averaged tensor from an existing cell solution.
template <int D>
inline AveragedTensor<D> averaged_tensor(const CellSolution<D>& sol,
                                         const TwoScaleCoefficient<D>& ext,
                                         const Vec<D>& x) {
  if (sol.point_x != x)
    throw ConsistencyError("averaged_tensor: solution was computed at " +
                           format_point(sol.point_x) + ", not at " + format_point(x));
  if (sol.coeff.size() != sol.mesh.cell_count())
    throw ConsistencyError("averaged_tensor: sample count does not match the mesh");
  for (int j = 0; j < D; ++j)
    if (sol.w[j].size() != sol.coeff.size())
      throw ConsistencyError("averaged_tensor: corrector length does not match the mesh");

  detail::CellOperator<D> op;
  op.build(sol.coeff, sol.mesh.n, ext.field.beta);
  AveragedTensor<D> t;
  t.A = op.tensor(sol.w);
  t.x = x;
  t.method = TensorMethod::y_form;
  t.residual = sol.residual;
  return t;
}

// Window route: same discrete problem assembled directly from a_M on the
// window box (side eps_bar), no extension object involved. With matching
// meshes this produces the identical system as solve_cell at the window
// center, up to the affine change of variables.
template <int D>
inline AveragedTensor<D> averaged_tensor_from_window(const MicroCoefficient<D>& field,
                                                     const Box<D>& window,
                                                     const UnitCellMesh<D>& mesh,
                                                     double tol = 1e-10) {
  mesh.validate();
  window.validate("window");
  const double eps_bar = window.side(0);
  for (int k = 1; k < D; ++k)
    if (std::abs(window.side(k) - eps_bar) > 1e-12 * eps_bar)
      throw ParamError("averaged_tensor_from_window: window must be a cube");
  if (!field.omega_tilde.contains_box(window, 1e-12 * eps_bar))
    throw DomainError("averaged_tensor_from_window: window leaves omega_tilde");

  Vec<D> anchor;
  for (int k = 0; k < D; ++k) anchor[k] = frac(window.lower[k] / eps_bar);
  auto samples = detail::window_samples(field, window.lower, eps_bar, mesh.n);
  CellSolution<D> sol = detail::solve_periodic_samples(
      std::move(samples), mesh, window.center(), anchor, tol, field.beta);

  detail::CellOperator<D> op;
  op.build(sol.coeff, mesh.n, field.beta);
  AveragedTensor<D> t;
  t.A = op.tensor(sol.w);
  t.x = window.center();
  t.method = TensorMethod::w_form;
  t.residual = sol.residual;
  return t;
}

template <int D>
inline AveragedTensor<D> averaged_tensor_from_window(const MicroCoefficient<D>& field,
                                                     const Vec<D>& x, double eps_bar,
                                                     const UnitCellMesh<D>& mesh,
                                                     double tol = 1e-10) {
  return averaged_tensor_from_window(field, cube_at(x, eps_bar), mesh, tol);
}

// Discrete bilinear form and load functionals of a cell problem, for energy
// identity checks: B(w_j, v) = L_j(v) for all v at the discrete solution.
template <int D>
struct CellForms {
  std::shared_ptr<detail::CellOperator<D>> op;

  double B(const std::vector<double>& u, const std::vector<double>& v) const {
    return op->bilinear(u, v);
  }
  double L(int j, const std::vector<double>& v) const { return op->load(j, v); }
};

template <int D>
inline CellForms<D> cell_forms(const CellSolution<D>& sol, double beta_scale = 1.0) {
  auto op = std::make_shared<detail::CellOperator<D>>();
  op->build(sol.coeff, sol.mesh.n, beta_scale);
  return CellForms<D>{std::move(op)};
}

// ---------------------------------------------------------------------------
// 1D closed form: the averaged coefficient is the harmonic mean of the
// profile and the corrector slope is A/a - 1.
// ---------------------------------------------------------------------------

struct Harmonic1d {
  AveragedTensor<1> tensor;
  std::vector<double> w_prime;  // at the quadrature midpoints, zero mean
};

inline Harmonic1d solve_cell_1d(const std::function<double(double)>& profile,
                                int quad_n) {
  if (quad_n < 1) throw ParamError("solve_cell_1d: quad_n must be positive");
  std::vector<double> a(quad_n);
  double inv_sum = 0.0;
  for (int i = 0; i < quad_n; ++i) {
    double t = (i + 0.5) / quad_n;
    a[i] = profile(t);
    if (!(a[i] > 0.0))
      throw EllipticityError("solve_cell_1d: profile not positive at t = " +
                             format_double(t));
    inv_sum += 1.0 / a[i];
  }
  double A = quad_n / inv_sum;

  Harmonic1d r;
  r.tensor.A = Mat<1>::iso(A);
  r.tensor.method = TensorMethod::harmonic_1d;
  r.w_prime.resize(quad_n);
  for (int i = 0; i < quad_n; ++i) r.w_prime[i] = A / a[i] - 1.0;
  return r;
}

// ---------------------------------------------------------------------------
// Window bounds: harmonic (lower) and arithmetic (upper) means of an
// isotropic field over a window, midpoint quadrature.
// ---------------------------------------------------------------------------

template <int D>
inline std::pair<Mat<D>, Mat<D>> voigt_reuss(const MicroCoefficient<D>& field,
                                             const Box<D>& window, int quad_n) {
  if (quad_n < 1) throw ParamError("voigt_reuss: quad_n must be positive");
  window.validate("voigt_reuss window");
  if (!field.omega_tilde.contains_box(window, 1e-12 * window.max_side()))
    throw DomainError("voigt_reuss: window leaves omega_tilde");

  std::size_t total = 1;
  for (int k = 0; k < D; ++k) total *= static_cast<std::size_t>(quad_n);
  double sum = 0.0, inv_sum = 0.0;
  std::array<int, D> i{};
  for (std::size_t flat = 0; flat < total; ++flat) {
    Vec<D> z;
    for (int k = 0; k < D; ++k)
      z[k] = window.lower[k] + (i[k] + 0.5) * window.side(k) / quad_n;
    Mat<D> a = field.eval_clamped(z);
    if (!a.isotropic(1e-12 * (std::abs(a(0, 0)) + 1.0)))
      throw UnsupportedError("voigt_reuss: anisotropic sample at " + format_point(z));
    double v = a(0, 0);
    if (!(v > 0.0))
      throw EllipticityError("voigt_reuss: non-elliptic sample at " + format_point(z));
    sum += v;
    inv_sum += 1.0 / v;
    int k = 0;
    while (k < D && ++i[k] == quad_n) i[k++] = 0;
  }
  double arith = sum / total;
  double harm = total / inv_sum;
  return {Mat<D>::iso(harm), Mat<D>::iso(arith)};
}

}  // namespace homog
