#pragma once

#include <functional>
#include <string>
#include <vector>

#include "homog/upscale.hpp"

namespace homog {

// Tensor-product node mesh over a box: n[k] cells, n[k] + 1 nodes per axis.
template <int D>
struct Mesh {
  Box<D> box{};
  std::array<int, D> n{};

  void validate() const {
    box.validate("mesh box");
    for (int k = 0; k < D; ++k)
      if (n[k] < 2) throw ParamError("mesh: need at least 2 cells per axis");
  }
  int nodes(int k) const { return n[k] + 1; }
  std::size_t node_count() const {
    std::size_t t = 1;
    for (int k = 0; k < D; ++k) t *= static_cast<std::size_t>(n[k] + 1);
    return t;
  }
  double h(int k) const { return box.side(k) / n[k]; }
  double node_coord(int k, int i) const {
    if (i == 0) return box.lower[k];
    if (i == n[k]) return box.upper[k];
    return box.lower[k] + box.side(k) * i / n[k];
  }
  Vec<D> node(const std::array<int, D>& i) const {
    Vec<D> x;
    for (int k = 0; k < D; ++k) x[k] = node_coord(k, i[k]);
    return x;
  }
  bool operator==(const Mesh&) const = default;
};

template <int D>
struct Solution {
  Mesh<D> mesh;
  std::vector<double> values;  // node-ordered, first axis fastest
  std::vector<std::string> warnings;
  double residual = 0.0;
  int iterations = 0;

  std::size_t index(const std::array<int, D>& i) const {
    std::size_t idx = 0;
    for (int k = D - 1; k >= 0; --k) idx = idx * mesh.nodes(k) + i[k];
    return idx;
  }

  // Multilinear interpolation between nodes; exact at node coordinates.
  double eval(const Vec<D>& x) const {
    std::array<int, D> base;
    std::array<double, D> theta;
    for (int k = 0; k < D; ++k) {
      double s = (x[k] - mesh.box.lower[k]) / mesh.h(k);
      int i0 = static_cast<int>(std::floor(s));
      i0 = std::max(0, std::min(i0, mesh.n[k] - 1));
      base[k] = i0;
      theta[k] = std::min(1.0, std::max(0.0, s - i0));
    }
    double acc = 0.0;
    for (int corner = 0; corner < (1 << D); ++corner) {
      double weight = 1.0;
      std::array<int, D> i = base;
      for (int k = 0; k < D; ++k) {
        int up = (corner >> k) & 1;
        weight *= up ? theta[k] : 1.0 - theta[k];
        i[k] += up;
      }
      if (weight != 0.0) acc += weight * values[index(i)];
    }
    return acc;
  }
};

// Dirichlet problem -div(a grad u) = f on a box, u = 0 on the boundary.
// oscillation_scale, when set, tells the solver the finest length scale of
// the coefficient so it can warn about under-resolution.
template <int D>
struct DirichletProblem {
  Box<D> omega{};
  std::function<Mat<D>(const Vec<D>&)> coefficient;
  std::function<double(const Vec<D>&)> source;
  double oscillation_scale = 0.0;
};

namespace detail {

// Shared edge data of the node-centered scheme. Coefficients are sampled at
// the nodes and split into nonnegative edge conductances exactly like the
// cell solver; faces take the harmonic mean of the adjacent node values.
template <int D>
struct NodeOperator {
  static_assert(D == 1 || D == 2, "validated for d in {1, 2}");

  std::array<int, D> m{};  // nodes per axis
  std::array<double, D> h{};
  double cell_vol = 0.0;
  bool cross = false;
  std::array<std::vector<double>, D> axis;  // edge i -> i+e_k, weight included
  std::vector<double> diag_p, diag_m;       // (1,1) and (1,-1) edges

  std::size_t idx2(int i, int j) const {
    return static_cast<std::size_t>(j) * m[0] + i;
  }
  std::size_t total() const {
    std::size_t t = 1;
    for (int k = 0; k < D; ++k) t *= static_cast<std::size_t>(m[k]);
    return t;
  }

  template <class Coeff>
  void build(const Mesh<D>& mesh, Coeff&& coeff, std::vector<std::string>& warnings) {
    for (int k = 0; k < D; ++k) {
      m[k] = mesh.nodes(k);
      h[k] = mesh.h(k);
    }
    cell_vol = 1.0;
    for (int k = 0; k < D; ++k) cell_vol *= h[k];

    const std::size_t tot = total();
    std::array<std::vector<double>, D> kap;
    std::vector<double> kp, km;
    for (int k = 0; k < D; ++k) kap[k].assign(tot, 0.0);
    if constexpr (D == 2) {
      kp.assign(tot, 0.0);
      km.assign(tot, 0.0);
    }

    double amin = std::numeric_limits<double>::infinity(), amax = 0.0;
    std::array<int, D> i{};
    for (std::size_t flat = 0; flat < tot; ++flat) {
      Vec<D> x = mesh.node(i);
      Mat<D> a = coeff(x);
      if (a.asym_norm() > 1e-12 * (a.frobenius() + 1.0))
        throw UnsupportedError("solve_fd: coefficient not symmetric at " +
                               format_point(x));
      if (!(a.min_diag() > 0.0))
        throw EllipticityError("solve_fd: non-elliptic coefficient at " +
                               format_point(x));
      amin = std::min(amin, a.min_diag());
      amax = std::max(amax, a.max_eig());
      if constexpr (D == 1) {
        kap[0][flat] = a(0, 0);
      } else {
        double b = a(0, 1);
        for (int k = 0; k < 2; ++k) {
          double v = a(k, k) - std::abs(b);
          if (v < -1e-12 * (a.frobenius() + 1.0))
            throw UnsupportedError("solve_fd: off-diagonal entry breaks diagonal "
                                   "dominance at " + format_point(x));
          kap[k][flat] = std::max(v, 0.0);
        }
        kp[flat] = std::max(b, 0.0);
        km[flat] = std::max(-b, 0.0);
        if (b != 0.0) cross = true;
      }
      int k = 0;
      while (k < D && ++i[k] == m[k]) i[k++] = 0;
    }
    if (cross && D == 2 && std::abs(h[0] - h[1]) > 1e-12 * h[0])
      throw UnsupportedError("solve_fd: off-diagonal coefficients need square cells");
    if (amax / amin > 1e3)
      warnings.push_back("coefficient contrast " + format_double(amax / amin) +
                         " is large; expect slow convergence and conditioning loss");

    // Edge weights: (cell volume / h_k^2) per axis, cell volume / h^2 = 1 for
    // diagonal edges on square cells.
    for (int k = 0; k < D; ++k) axis[k].assign(tot, 0.0);
    if (cross) {
      diag_p.assign(tot, 0.0);
      diag_m.assign(tot, 0.0);
    }
    if constexpr (D == 1) {
      double w0 = cell_vol / (h[0] * h[0]);
      for (int p = 0; p + 1 < m[0]; ++p)
        axis[0][p] = w0 * harmonic_pair(kap[0][p], kap[0][p + 1]);
    } else {
      std::array<double, 2> wk = {cell_vol / (h[0] * h[0]), cell_vol / (h[1] * h[1])};
      double wd = cross ? cell_vol / (h[0] * h[0]) : 0.0;
      for (int j = 0; j < m[1]; ++j)
        for (int p = 0; p < m[0]; ++p) {
          std::size_t id = idx2(p, j);
          if (p + 1 < m[0])
            axis[0][id] = wk[0] * harmonic_pair(kap[0][id], kap[0][idx2(p + 1, j)]);
          if (j + 1 < m[1])
            axis[1][id] = wk[1] * harmonic_pair(kap[1][id], kap[1][idx2(p, j + 1)]);
          if (cross) {
            if (p + 1 < m[0] && j + 1 < m[1])
              diag_p[id] = wd * harmonic_pair(kp[id], kp[idx2(p + 1, j + 1)]);
            if (p + 1 < m[0] && j > 0)
              diag_m[id] = wd * harmonic_pair(km[id], km[idx2(p + 1, j - 1)]);
          }
        }
    }
  }

  bool is_boundary(const std::array<int, D>& i) const {
    for (int k = 0; k < D; ++k)
      if (i[k] == 0 || i[k] == m[k] - 1) return true;
    return false;
  }

  // out = A u with homogeneous Dirichlet rows replaced by the identity.
  void apply(const std::vector<double>& u, std::vector<double>& out,
             std::vector<double>& scratch) const {
    scratch = u;
    zero_boundary(scratch);
    std::fill(out.begin(), out.end(), 0.0);
    if constexpr (D == 1) {
      for (int p = 0; p + 1 < m[0]; ++p) {
        double f = axis[0][p] * (scratch[p] - scratch[p + 1]);
        out[p] += f;
        out[p + 1] -= f;
      }
      out[0] = u[0];
      out[m[0] - 1] = u[m[0] - 1];
    } else {
      for (int j = 0; j < m[1]; ++j)
        for (int p = 0; p < m[0]; ++p) {
          std::size_t id = idx2(p, j);
          if (p + 1 < m[0]) {
            double f = axis[0][id] * (scratch[id] - scratch[idx2(p + 1, j)]);
            out[id] += f;
            out[idx2(p + 1, j)] -= f;
          }
          if (j + 1 < m[1]) {
            double f = axis[1][id] * (scratch[id] - scratch[idx2(p, j + 1)]);
            out[id] += f;
            out[idx2(p, j + 1)] -= f;
          }
          if (cross) {
            if (p + 1 < m[0] && j + 1 < m[1]) {
              double f = diag_p[id] * (scratch[id] - scratch[idx2(p + 1, j + 1)]);
              out[id] += f;
              out[idx2(p + 1, j + 1)] -= f;
            }
            if (p + 1 < m[0] && j > 0) {
              double f = diag_m[id] * (scratch[id] - scratch[idx2(p + 1, j - 1)]);
              out[id] += f;
              out[idx2(p + 1, j - 1)] -= f;
            }
          }
        }
      for (int j = 0; j < m[1]; ++j)
        for (int p = 0; p < m[0]; ++p)
          if (p == 0 || p == m[0] - 1 || j == 0 || j == m[1] - 1)
            out[idx2(p, j)] = u[idx2(p, j)];
    }
  }

  void zero_boundary(std::vector<double>& v) const {
    if constexpr (D == 1) {
      v[0] = 0.0;
      v[m[0] - 1] = 0.0;
    } else {
      for (int p = 0; p < m[0]; ++p) {
        v[idx2(p, 0)] = 0.0;
        v[idx2(p, m[1] - 1)] = 0.0;
      }
      for (int j = 0; j < m[1]; ++j) {
        v[idx2(0, j)] = 0.0;
        v[idx2(m[0] - 1, j)] = 0.0;
      }
    }
  }

  std::vector<double> inverse_diagonal() const {
    std::vector<double> d(total(), 0.0);
    auto acc = [&](std::size_t a, std::size_t b, double w) {
      d[a] += w;
      d[b] += w;
    };
    if constexpr (D == 1) {
      for (int p = 0; p + 1 < m[0]; ++p) acc(p, p + 1, axis[0][p]);
    } else {
      for (int j = 0; j < m[1]; ++j)
        for (int p = 0; p < m[0]; ++p) {
          std::size_t id = idx2(p, j);
          if (p + 1 < m[0]) acc(id, idx2(p + 1, j), axis[0][id]);
          if (j + 1 < m[1]) acc(id, idx2(p, j + 1), axis[1][id]);
          if (cross) {
            if (p + 1 < m[0] && j + 1 < m[1]) acc(id, idx2(p + 1, j + 1), diag_p[id]);
            if (p + 1 < m[0] && j > 0) acc(id, idx2(p + 1, j - 1), diag_m[id]);
          }
        }
    }
    for (double& v : d) v = v > 0.0 ? 1.0 / v : 1.0;
    return d;
  }
};

}  // namespace detail

// Node-centered finite differences with harmonic edge coefficients. Direct
// tridiagonal solve in 1D, preconditioned CG in 2D (the edge-split stencil is
// symmetric positive definite).
template <int D>
inline Solution<D> solve_fd(const DirichletProblem<D>& problem, const Mesh<D>& mesh,
                            double tol = 1e-10) {
  mesh.validate();
  if (!problem.coefficient) throw ParamError("solve_fd: missing coefficient");
  if (!problem.source) throw ParamError("solve_fd: missing source");
  if (problem.omega != mesh.box)
    throw ConsistencyError("solve_fd: mesh box differs from the problem domain");

  Solution<D> sol;
  sol.mesh = mesh;

  if (problem.oscillation_scale > 0.0) {
    double hmax = 0.0;
    for (int k = 0; k < D; ++k) hmax = std::max(hmax, mesh.h(k));
    if (hmax > problem.oscillation_scale / 4.0)
      sol.warnings.push_back(
          "mesh spacing " + format_double(hmax) + " does not resolve oscillations at "
          "scale " + format_double(problem.oscillation_scale) +
          "; refine to at least a quarter of that scale");
  }

  detail::NodeOperator<D> op;
  op.build(mesh, problem.coefficient, sol.warnings);

  const std::size_t tot = op.total();
  std::vector<double> b(tot, 0.0);
  std::array<int, D> i{};
  for (std::size_t flat = 0; flat < tot; ++flat) {
    if (!op.is_boundary(i)) b[flat] = op.cell_vol * problem.source(mesh.node(i));
    int k = 0;
    while (k < D && ++i[k] == op.m[k]) i[k++] = 0;
  }

  sol.values.assign(tot, 0.0);
  if constexpr (D == 1) {
    // Interior tridiagonal system, solved directly.
    const int ni = op.m[0] - 2;
    if (ni > 0) {
      std::vector<double> lower(ni, 0.0), diag(ni, 0.0), upper(ni, 0.0), rhs(ni, 0.0);
      for (int p = 0; p < ni; ++p) {
        int node = p + 1;
        diag[p] = op.axis[0][node - 1] + op.axis[0][node];
        if (p > 0) lower[p] = -op.axis[0][node - 1];
        if (p + 1 < ni) upper[p] = -op.axis[0][node];
        rhs[p] = b[node];
      }
      std::vector<double> u = tridiag_solve(lower, diag, upper, rhs);
      for (int p = 0; p < ni; ++p) sol.values[p + 1] = u[p];
    }
    // Report the actual discrete residual.
    double rn = 0.0, bn = 0.0;
    std::vector<double> out(tot), scratch;
    op.apply(sol.values, out, scratch);
    for (std::size_t q = 0; q < tot; ++q) {
      rn += (b[q] - out[q]) * (b[q] - out[q]);
      bn += b[q] * b[q];
    }
    sol.residual = bn > 0.0 ? std::sqrt(rn / bn) : 0.0;
    sol.iterations = 0;
  } else {
    std::vector<double> inv_diag = op.inverse_diagonal();
    std::array<int, D> ii{};
    for (std::size_t flat = 0; flat < tot; ++flat) {
      if (op.is_boundary(ii)) inv_diag[flat] = 1.0;
      int k = 0;
      while (k < D && ++ii[k] == op.m[k]) ii[k++] = 0;
    }
    std::vector<double> scratch;
    auto apply = [&op, &scratch](const std::vector<double>& u, std::vector<double>& out) {
      op.apply(u, out, scratch);
    };
    long cap = 200L * std::max(op.m[0], op.m[1]) + 1000;
    SolveStats st = cg_solve(apply, b, sol.values, tol,
                             static_cast<int>(std::min<long>(cap, 2000000)), &inv_diag);
    if (!st.converged)
      throw NumericalError("solve_fd: CG stopped after " +
                           std::to_string(st.iterations) +
                           " iterations at relative residual " +
                           format_double(st.rel_residual));
    sol.residual = st.rel_residual;
    sol.iterations = st.iterations;
    op.zero_boundary(sol.values);  // keep the boundary exactly zero
  }
  return sol;
}

// 1D two-point boundary value problem by quadrature of the closed form
//   u(x) = integral from lo to x of (C - F(s)) / a(s) ds,
// F the antiderivative of f and C fixed by u(hi) = 0. Midpoint rule on
// quad_n cells; both boundary values are exactly zero by construction.
inline Solution<1> solve_fine_1d(const std::function<double(double)>& a,
                                 const std::function<double(double)>& f,
                                 const Box<1>& domain, int quad_n) {
  domain.validate("solve_fine_1d domain");
  if (quad_n < 2) throw ParamError("solve_fine_1d: quad_n must be at least 2");

  const double lo = domain.lower[0], len = domain.side(0);
  const double h = len / quad_n;
  std::vector<double> av(quad_n), Fm(quad_n);
  double Facc = 0.0;  // integral of f up to the left cell edge
  double inv_sum = 0.0, ratio_sum = 0.0;
  for (int i = 0; i < quad_n; ++i) {
    double s = lo + (i + 0.5) * h;
    double ai = a(s);
    if (!(ai > 0.0))
      throw EllipticityError("solve_fine_1d: coefficient not positive at " +
                             format_double(s));
    double fi = f(s);
    av[i] = ai;
    Fm[i] = Facc + 0.5 * h * fi;  // F at the midpoint
    Facc += h * fi;
    inv_sum += 1.0 / ai;
    ratio_sum += Fm[i] / ai;
  }
  const double C = ratio_sum / inv_sum;

  Solution<1> sol;
  sol.mesh.box = domain;
  sol.mesh.n[0] = quad_n;
  sol.values.assign(quad_n + 1, 0.0);
  for (int i = 0; i < quad_n; ++i)
    sol.values[i + 1] = sol.values[i] + h * (C - Fm[i]) / av[i];
  sol.values[quad_n] = 0.0;  // exact by the choice of C; drop the roundoff dust
  return sol;
}

template <int D>
using CellProvider = std::function<const CellSolution<D>*(const Vec<D>&)>;

template <int D>
inline CellProvider<D> lattice_provider(const CellSolutionLattice<D>& lat);

// First-order two-scale reconstruction on the nodes of u0:
//   u1(x) = u0(x) + scale * sum_j w_j(x, x / scale) d_j u0(x).
// Slopes by central differences; the correction is dropped on boundary nodes
// so the Dirichlet data stays exact.
template <int D>
inline Solution<D> corrector(const Solution<D>& u0, const CellProvider<D>& provider,
                             double scale) {
  if (!(scale > 0.0)) throw ParamError("corrector: scale must be positive");
  if (!provider) throw ParamError("corrector: missing cell solution provider");
  u0.mesh.validate();

  Solution<D> u1 = u0;
  std::array<int, D> m;
  for (int k = 0; k < D; ++k) m[k] = u0.mesh.nodes(k);

  std::array<int, D> i{};
  const std::size_t tot = u0.mesh.node_count();
  for (std::size_t flat = 0; flat < tot; ++flat) {
    bool boundary = false;
    for (int k = 0; k < D; ++k)
      if (i[k] == 0 || i[k] == m[k] - 1) boundary = true;
    if (!boundary) {
      Vec<D> x = u0.mesh.node(i);
      const CellSolution<D>* cs = provider(x);
      if (cs == nullptr)
        throw ConsistencyError("corrector: no cell solution available at " +
                               format_point(x));
      Vec<D> y;
      for (int k = 0; k < D; ++k) y[k] = x[k] / scale;
      double add = 0.0;
      for (int j = 0; j < D; ++j) {
        std::array<int, D> ip = i, im = i;
        ip[j] += 1;
        im[j] -= 1;
        double slope =
            (u0.values[u0.index(ip)] - u0.values[u0.index(im)]) / (2.0 * u0.mesh.h(j));
        add += cs->w_eval(j, y) * slope;
      }
      u1.values[flat] += scale * add;
    }
    int k = 0;
    while (k < D && ++i[k] == m[k]) i[k++] = 0;
  }
  return u1;
}

template <int D>
inline CellProvider<D> lattice_provider(const CellSolutionLattice<D>& lat) {
  const CellSolutionLattice<D>* p = &lat;
  return [p](const Vec<D>& x) { return &p->nearest(x); };
}

struct ErrorNorms {
  double l2 = 0.0;
  double h1 = 0.0;  // seminorm of the difference
  double linf = 0.0;
};

// Cellwise midpoint norms of (ua - ub) on their shared mesh: values averaged
// over the cell corners, gradients from corner differences.
template <int D>
inline ErrorNorms error_norms(const Solution<D>& ua, const Solution<D>& ub) {
  if (!(ua.mesh == ub.mesh))
    throw ConsistencyError("error_norms: solutions live on different meshes");
  ua.mesh.validate();
  if (ua.values.size() != ua.mesh.node_count() ||
      ub.values.size() != ub.mesh.node_count())
    throw ConsistencyError("error_norms: node data does not match the mesh");

  double vol = 1.0;
  for (int k = 0; k < D; ++k) vol *= ua.mesh.h(k);

  ErrorNorms out;
  for (std::size_t q = 0; q < ua.values.size(); ++q)
    out.linf = std::max(out.linf, std::abs(ua.values[q] - ub.values[q]));

  std::array<int, D> i{};
  std::size_t cells = 1;
  for (int k = 0; k < D; ++k) cells *= static_cast<std::size_t>(ua.mesh.n[k]);
  double l2 = 0.0, h1 = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    double corner[1 << D];
    for (int corner_id = 0; corner_id < (1 << D); ++corner_id) {
      std::array<int, D> ii = i;
      for (int k = 0; k < D; ++k) ii[k] += (corner_id >> k) & 1;
      std::size_t idx = ua.index(ii);
      corner[corner_id] = ua.values[idx] - ub.values[idx];
    }
    double mean = 0.0;
    for (int corner_id = 0; corner_id < (1 << D); ++corner_id)
      mean += corner[corner_id];
    mean /= (1 << D);
    l2 += vol * mean * mean;

    double g2 = 0.0;
    for (int k = 0; k < D; ++k) {
      double diff = 0.0;
      for (int corner_id = 0; corner_id < (1 << D); ++corner_id)
        diff += ((corner_id >> k) & 1) ? corner[corner_id] : -corner[corner_id];
      diff /= (1 << (D - 1));
      double g = diff / ua.mesh.h(k);
      g2 += g * g;
    }
    h1 += vol * g2;

    int k = 0;
    while (k < D && ++i[k] == ua.mesh.n[k]) i[k++] = 0;
  }
  out.l2 = std::sqrt(l2);
  out.h1 = std::sqrt(h1);
  return out;
}

// Restriction to a coarser mesh whose nodes are a subset of the fine nodes.
template <int D>
inline Solution<D> restrict_solution(const Solution<D>& fine,
                                     const std::array<int, D>& coarse_n) {
  Solution<D> out;
  out.mesh.box = fine.mesh.box;
  out.mesh.n = coarse_n;
  out.mesh.validate();
  std::array<int, D> stride;
  for (int k = 0; k < D; ++k) {
    if (coarse_n[k] <= 0 || fine.mesh.n[k] % coarse_n[k] != 0)
      throw ConsistencyError("restrict_solution: coarse cells must divide fine cells");
    stride[k] = fine.mesh.n[k] / coarse_n[k];
  }
  out.values.resize(out.mesh.node_count());
  std::array<int, D> i{};
  for (std::size_t flat = 0; flat < out.values.size(); ++flat) {
    std::array<int, D> fi;
    for (int k = 0; k < D; ++k) fi[k] = i[k] * stride[k];
    out.values[flat] = fine.values[fine.index(fi)];
    int k = 0;
    while (k < D && ++i[k] == out.mesh.nodes(k)) i[k++] = 0;
  }
  return out;
}

}  // namespace homog
