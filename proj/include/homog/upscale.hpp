#pragma once

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include "homog/cell.hpp"

namespace homog {

// Rectilinear lattice of tensors with multilinear interpolation. Queries are
// clamped into the hull; at a lattice node the stored sample is returned
// bitwise (the blend weights collapse to exact 0 and 1 there).
template <int D>
struct SampleLattice {
  std::array<std::vector<double>, D> coords;  // strictly increasing per axis
  std::vector<Mat<D>> values;                 // first axis fastest

  std::size_t count() const {
    std::size_t t = 1;
    for (int k = 0; k < D; ++k) t *= coords[k].size();
    return t;
  }

  void validate() const {
    for (int k = 0; k < D; ++k) {
      if (coords[k].empty())
        throw ConsistencyError("sample lattice: empty coordinate axis");
      for (std::size_t i = 1; i < coords[k].size(); ++i)
        if (!(coords[k][i - 1] < coords[k][i]))
          throw ConsistencyError("sample lattice: coordinates must increase");
    }
    if (values.size() != count())
      throw ConsistencyError("sample lattice: value count does not match coordinates");
  }

  // Segment index and blend weight along one axis, clamped to the hull.
  static void locate_axis(const std::vector<double>& c, double x, int& i0,
                          double& theta) {
    const int m = static_cast<int>(c.size());
    if (m == 1) {
      i0 = 0;
      theta = 0.0;
      return;
    }
    if (x <= c.front()) {
      i0 = 0;
      theta = 0.0;
      return;
    }
    if (x >= c.back()) {
      i0 = m - 2;
      theta = 1.0;
      return;
    }
    int hi = static_cast<int>(std::upper_bound(c.begin(), c.end(), x) - c.begin());
    i0 = hi - 1;
    theta = (x - c[i0]) / (c[i0 + 1] - c[i0]);
  }

  Mat<D> interpolate(const Vec<D>& x) const {
    std::array<int, D> base;
    std::array<double, D> theta;
    std::array<int, D> extent;
    for (int k = 0; k < D; ++k) {
      locate_axis(coords[k], x[k], base[k], theta[k]);
      extent[k] = static_cast<int>(coords[k].size());
    }
    Mat<D> acc = Mat<D>::zero();
    for (int corner = 0; corner < (1 << D); ++corner) {
      double weight = 1.0;
      std::size_t idx = 0;
      for (int k = D - 1; k >= 0; --k) {
        int up = (corner >> k) & 1;
        weight *= up ? theta[k] : 1.0 - theta[k];
        int ik = std::min(base[k] + up, extent[k] - 1);
        idx = idx * extent[k] + ik;
      }
      if (weight != 0.0) {
        Mat<D> term = values[idx];
        term *= weight;
        acc += term;
      }
    }
    return acc;
  }
};

// Averaged coefficient over the macro domain in one of four shapes:
// a constant tensor, tensors interpolated between sample points, one tensor
// per partition cell, or the oscillatory field itself (the do-nothing
// extension averages to a(x) pointwise).
template <int D>
struct AveragedCoefficientField {
  enum class Mode { constant, interpolated, piecewise_constant, micro };

  Mode mode = Mode::constant;
  Box<D> omega{};
  Mat<D> constant_value = Mat<D>::identity();
  SampleLattice<D> lattice;
  std::shared_ptr<Partition<D>> partition;
  std::vector<Mat<D>> cell_values;
  std::shared_ptr<MicroCoefficient<D>> micro;
  std::vector<std::string> warnings;

  Mat<D> eval(const Vec<D>& x) const {
    check_inside_closed(omega, x, "averaged coefficient");
    Mat<D> a;
    switch (mode) {
      case Mode::constant:
        a = constant_value;
        break;
      case Mode::interpolated:
        a = lattice.interpolate(x);
        break;
      case Mode::piecewise_constant:
        a = cell_values[partition->locate(x)];
        break;
      case Mode::micro:
        a = micro->eval_clamped(x);
        break;
    }
    if (!(a.min_eig() > -1e-12 * (a.frobenius() + 1.0)))
      throw EllipticityError("averaged coefficient lost positivity at " +
                             format_point(x));
    return a;
  }

  std::function<Mat<D>(const Vec<D>&)> evaluator() const {
    AveragedCoefficientField<D> copy = *this;
    return [copy](const Vec<D>& x) { return copy.eval(x); };
  }
};

template <int D>
inline AveragedCoefficientField<D> constant_field(const Box<D>& omega, const Mat<D>& a) {
  AveragedCoefficientField<D> f;
  f.mode = AveragedCoefficientField<D>::Mode::constant;
  f.omega = omega;
  f.constant_value = a;
  return f;
}

// The do-nothing extension needs no cell solves at all: its averaged tensor
// is the field value itself.
template <int D>
inline AveragedCoefficientField<D> micro_field(const TwoScaleCoefficient<D>& ext) {
  if (ext.kind != ExtKind::trivial)
    throw ParamError("micro_field: only valid for the do-nothing extension");
  AveragedCoefficientField<D> f;
  f.mode = AveragedCoefficientField<D>::Mode::micro;
  f.omega = ext.omega();
  f.micro = std::make_shared<MicroCoefficient<D>>(ext.field);
  return f;
}

namespace detail {

// Evenly spaced coordinates covering [lo, hi] with spacing at most `spacing`;
// endpoints are hit bitwise.
inline std::vector<double> axis_coords(double lo, double hi, double spacing) {
  int segs = std::max(1, static_cast<int>(std::ceil((hi - lo) / spacing - 1e-9)));
  std::vector<double> c(segs + 1);
  for (int i = 0; i <= segs; ++i) c[i] = lo + (hi - lo) * i / segs;
  c[0] = lo;
  c[segs] = hi;
  return c;
}

}  // namespace detail

// Cell solutions on a sampling lattice over omega, solved in parallel.
// Feeds both the interpolated averaged field and corrector evaluation.
template <int D>
struct CellSolutionLattice {
  std::array<std::vector<double>, D> coords;
  std::vector<CellSolution<D>> solutions;  // first axis fastest

  const CellSolution<D>& nearest(const Vec<D>& x) const {
    std::size_t idx = 0;
    for (int k = D - 1; k >= 0; --k) {
      const std::vector<double>& c = coords[k];
      if (c.empty()) throw ConsistencyError("cell solution lattice: empty axis");
      auto it = std::lower_bound(c.begin(), c.end(), x[k]);
      int i = static_cast<int>(it - c.begin());
      if (i >= static_cast<int>(c.size())) i = static_cast<int>(c.size()) - 1;
      if (i > 0 && std::abs(c[i - 1] - x[k]) <= std::abs(c[i] - x[k])) --i;
      idx = idx * c.size() + i;
    }
    if (idx >= solutions.size())
      throw ConsistencyError("cell solution lattice: no solution stored near " +
                             format_point(x));
    return solutions[idx];
  }
};

template <int D>
inline CellSolutionLattice<D> solve_cell_lattice(const TwoScaleCoefficient<D>& ext,
                                                 double spacing,
                                                 const UnitCellMesh<D>& mesh,
                                                 double tol = 1e-10) {
  if (!(spacing > 0.0)) throw ParamError("solve_cell_lattice: spacing must be positive");
  CellSolutionLattice<D> lat;
  const Box<D>& omega = ext.omega();
  std::array<std::size_t, D> extent;
  std::size_t total = 1;
  for (int k = 0; k < D; ++k) {
    lat.coords[k] = detail::axis_coords(omega.lower[k], omega.upper[k], spacing);
    extent[k] = lat.coords[k].size();
    total *= extent[k];
  }
  lat.solutions.resize(total);
  parallel_for(total, [&](std::size_t flat) {
    std::size_t rem = flat;
    Vec<D> x;
    for (int k = 0; k < D; ++k) {
      x[k] = lat.coords[k][rem % extent[k]];
      rem /= extent[k];
    }
    lat.solutions[flat] = solve_cell(ext, x, mesh, tol);
  });
  return lat;
}

template <int D>
inline AveragedCoefficientField<D> averaged_field_from_lattice(
    const CellSolutionLattice<D>& lat, const TwoScaleCoefficient<D>& ext) {
  AveragedCoefficientField<D> f;
  f.mode = AveragedCoefficientField<D>::Mode::interpolated;
  f.omega = ext.omega();
  f.lattice.coords = lat.coords;
  f.lattice.values.resize(lat.solutions.size());
  for (std::size_t i = 0; i < lat.solutions.size(); ++i)
    f.lattice.values[i] =
        averaged_tensor(lat.solutions[i], ext, lat.solutions[i].point_x).A;
  f.lattice.validate();
  double spacing = 0.0;
  for (int k = 0; k < D; ++k)
    for (std::size_t i = 1; i < lat.coords[k].size(); ++i)
      spacing = std::max(spacing, lat.coords[k][i] - lat.coords[k][i - 1]);
  if (spacing > ext.eps_bar)
    f.warnings.push_back("sample spacing " + format_double(spacing) +
                         " exceeds the window size " + format_double(ext.eps_bar) +
                         "; interpolated tensors may miss macro variation");
  return f;
}

// Averaged tensors interpolated from a lattice of cell solves.
template <int D>
inline AveragedCoefficientField<D> sample_A_continuous(const TwoScaleCoefficient<D>& ext,
                                                       double spacing,
                                                       const UnitCellMesh<D>& mesh,
                                                       double tol = 1e-10) {
  return averaged_field_from_lattice(solve_cell_lattice(ext, spacing, mesh, tol), ext);
}

// One tensor per partition cell, solved at the window centers.
template <int D>
inline AveragedCoefficientField<D> assemble_A_discrete(const TwoScaleCoefficient<D>& ext,
                                                       const UnitCellMesh<D>& mesh,
                                                       double tol = 1e-10) {
  if (ext.kind != ExtKind::discrete)
    throw ParamError("assemble_A_discrete: extension must be the partition kind");
  const Partition<D>& part = ext.partition;
  AveragedCoefficientField<D> f;
  f.mode = AveragedCoefficientField<D>::Mode::piecewise_constant;
  f.omega = ext.omega();
  f.partition = std::make_shared<Partition<D>>(part);
  f.cell_values.resize(part.cells.size());
  parallel_for(part.cells.size(), [&](std::size_t j) {
    CellSolution<D> sol = solve_cell(ext, part.centers[j], mesh, tol);
    f.cell_values[j] = averaged_tensor(sol, ext, part.centers[j]).A;
  });
  return f;
}

// Componentwise window means of the raw field (the naive upscaling that
// ignores the corrector). Useful as a comparison baseline.
template <int D>
inline AveragedCoefficientField<D> sample_mean_field(const TwoScaleCoefficient<D>& ext,
                                                     double spacing, int quad_n = 64) {
  if (!(spacing > 0.0)) throw ParamError("sample_mean_field: spacing must be positive");
  if (quad_n < 1) throw ParamError("sample_mean_field: quad_n must be positive");
  AveragedCoefficientField<D> f;
  f.mode = AveragedCoefficientField<D>::Mode::interpolated;
  f.omega = ext.omega();
  std::array<std::size_t, D> extent;
  std::size_t total = 1;
  for (int k = 0; k < D; ++k) {
    f.lattice.coords[k] =
        detail::axis_coords(f.omega.lower[k], f.omega.upper[k], spacing);
    extent[k] = f.lattice.coords[k].size();
    total *= extent[k];
  }
  f.lattice.values.resize(total);
  parallel_for(total, [&](std::size_t flat) {
    std::size_t rem = flat;
    Vec<D> x;
    for (int k = 0; k < D; ++k) {
      x[k] = f.lattice.coords[k][rem % extent[k]];
      rem /= extent[k];
    }
    Box<D> win = rev_window(ext, x);
    Mat<D> acc = Mat<D>::zero();
    std::size_t q_total = 1;
    for (int k = 0; k < D; ++k) q_total *= static_cast<std::size_t>(quad_n);
    std::array<int, D> iq{};
    for (std::size_t q = 0; q < q_total; ++q) {
      Vec<D> z;
      for (int k = 0; k < D; ++k)
        z[k] = win.lower[k] + (iq[k] + 0.5) * win.side(k) / quad_n;
      acc += ext.field.eval_clamped(z);
      int k = 0;
      while (k < D && ++iq[k] == quad_n) iq[k++] = 0;
    }
    acc *= 1.0 / static_cast<double>(q_total);
    f.lattice.values[flat] = acc;
  });
  f.lattice.validate();
  return f;
}

// If the field is eps_bar-periodic inside `subdomain`, every window gives the
// same tensor and one solve suffices. Verified against three random probe
// windows; disagreement is an error, not a warning.
template <int D>
inline AveragedCoefficientField<D> periodic_shortcut(const MicroCoefficient<D>& field,
                                                     double eps_bar,
                                                     const Box<D>& subdomain,
                                                     const UnitCellMesh<D>& mesh,
                                                     double tol = 1e-10,
                                                     unsigned long long seed = 0) {
  subdomain.validate("periodic_shortcut subdomain");
  if (!(eps_bar > 0.0)) throw ParamError("periodic_shortcut: eps_bar must be positive");
  if (subdomain.min_side() < eps_bar)
    throw ParamError("periodic_shortcut: subdomain smaller than one window");
  if (!field.omega_tilde.contains_box(subdomain, 1e-12 * eps_bar))
    throw DomainError("periodic_shortcut: subdomain leaves omega_tilde");

  AveragedTensor<D> ref =
      averaged_tensor_from_window(field, subdomain.center(), eps_bar, mesh, tol);
  double scale = ref.A.frobenius();

  Rng rng(seed);
  for (int probe = 0; probe < 3; ++probe) {
    Vec<D> x;
    for (int k = 0; k < D; ++k) {
      double lo = subdomain.lower[k] + 0.5 * eps_bar;
      double hi = subdomain.upper[k] - 0.5 * eps_bar;
      x[k] = lo + (hi - lo) * uniform01(rng);
    }
    AveragedTensor<D> t = averaged_tensor_from_window(field, x, eps_bar, mesh, tol);
    Mat<D> diff = t.A;
    diff -= ref.A;
    if (diff.frobenius() > 1e-6 * scale)
      throw MismatchError(
          "periodic_shortcut: window at " + format_point(x) +
          " disagrees with the reference tensor (relative mismatch " +
          format_double(diff.frobenius() / scale) +
          "); the field is not periodic on this subdomain");
  }

  AveragedCoefficientField<D> f = constant_field(subdomain, ref.A);
  return f;
}

// Frobenius modulus of continuity of the averaged tensor map at x:
// omega[s][k] = |A(x + h_s e_k) - A(x)|_F for each step h_s and axis k.
template <int D>
inline std::vector<std::array<double, D>> continuity_modulus(
    const TwoScaleCoefficient<D>& ext, const Vec<D>& x,
    const std::vector<double>& steps, const UnitCellMesh<D>& mesh,
    double tol = 1e-10) {
  CellSolution<D> base = solve_cell(ext, x, mesh, tol);
  Mat<D> A0 = averaged_tensor(base, ext, x).A;
  std::vector<std::array<double, D>> out(steps.size());
  for (std::size_t s = 0; s < steps.size(); ++s) {
    for (int k = 0; k < D; ++k) {
      Vec<D> xs = x;
      xs[k] += steps[s];
      CellSolution<D> sol = solve_cell(ext, xs, mesh, tol);
      Mat<D> diff = averaged_tensor(sol, ext, xs).A;
      diff -= A0;
      out[s][k] = diff.frobenius();
    }
  }
  return out;
}

}  // namespace homog
