#pragma once

#include <optional>
#include <vector>

#include "homog/field.hpp"

namespace homog {

enum class ExtKind { trivial, continuous, discrete };

inline const char* ext_kind_name(ExtKind k) {
  switch (k) {
    case ExtKind::trivial: return "trivial";
    case ExtKind::continuous: return "continuous";
    case ExtKind::discrete: return "discrete";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Partition of omega into half-open cells, each carrying a window: a cube of
// side eps_bar that contains the cell and stays inside omega_tilde.
// ---------------------------------------------------------------------------

template <int D>
struct Partition {
  std::vector<Box<D>> cells;
  std::vector<Box<D>> windows;
  std::vector<Vec<D>> centers;  // window centers

  // Uniform fast path filled in by uniform_partition; locate() falls back to
  // a scan for hand-built partitions.
  bool uniform = false;
  Box<D> omega{};
  std::array<int, D> counts{};
  double edge = 0.0;

  std::size_t size() const { return cells.size(); }

  int locate(const Vec<D>& x) const {
    if (uniform) {
      std::size_t idx = 0;
      for (int k = D - 1; k >= 0; --k) {
        double t = (x[k] - omega.lower[k]) / edge;
        int i = static_cast<int>(std::floor(t));
        i = std::min(std::max(i, 0), counts[k] - 1);  // closes the top face
        idx = idx * counts[k] + i;
      }
      return static_cast<int>(idx);
    }
    for (std::size_t j = 0; j < cells.size(); ++j)
      if (cells[j].contains_half_open(x)) return static_cast<int>(j);
    for (std::size_t j = cells.size(); j-- > 0;)  // closure: boundary of omega
      if (cells[j].contains_closed(x)) return static_cast<int>(j);
    throw DomainError("partition: point " + format_point(x) + " outside every cell");
  }
};

// Uniform boxes of side eps_bar aligned to the lower corner of omega; the
// last box per axis is clipped. Each window is the eps_bar-cube anchored at
// the box, shifted inward where it would leave omega_tilde.
template <int D>
inline Partition<D> uniform_partition(const Box<D>& omega, const Box<D>& omega_tilde,
                                      double eps_bar) {
  Partition<D> p;
  p.uniform = true;
  p.omega = omega;
  p.edge = eps_bar;
  std::size_t total = 1;
  for (int k = 0; k < D; ++k) {
    p.counts[k] = std::max(1, static_cast<int>(std::ceil(omega.side(k) / eps_bar - 1e-9)));
    total *= p.counts[k];
  }

  std::array<int, D> i{};
  for (std::size_t flat = 0; flat < total; ++flat) {
    Box<D> cell, win;
    Vec<D> c;
    for (int k = 0; k < D; ++k) {
      cell.lower[k] = omega.lower[k] + i[k] * eps_bar;
      cell.upper[k] = std::min(cell.lower[k] + eps_bar, omega.upper[k]);
      win.lower[k] = cell.lower[k];
      win.upper[k] = win.lower[k] + eps_bar;
      if (win.upper[k] > omega_tilde.upper[k]) {  // clipped cell: shift inward
        win.upper[k] = omega_tilde.upper[k];
        win.lower[k] = win.upper[k] - eps_bar;
      }
      c[k] = 0.5 * (win.lower[k] + win.upper[k]);
    }
    p.cells.push_back(cell);
    p.windows.push_back(win);
    p.centers.push_back(c);
    int k = 0;
    while (k < D && ++i[k] == p.counts[k]) i[k++] = 0;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Two-scale coefficient a(x, y): unit-periodic in y and equal to a_M(x) on
// the diagonal y = x / eps_bar. Three constructions:
//   trivial     a(x, y) = a_M(x)
//   continuous  window W(x) of side eps_bar centered at x, content of a_M
//               repeated eps_bar-periodically, read at eps_bar * y
//   discrete    same, but one fixed window per partition cell
// ---------------------------------------------------------------------------

template <int D>
struct TwoScaleCoefficient {
  ExtKind kind = ExtKind::trivial;
  MicroCoefficient<D> field;
  double eps_bar = 0.0;
  Partition<D> partition;  // discrete only

  const Box<D>& omega() const { return field.omega; }
};

template <int D>
inline TwoScaleCoefficient<D> build_extension(ExtKind kind,
                                              const MicroCoefficient<D>& field,
                                              double eps_bar,
                                              std::optional<Partition<D>> partition = {}) {
  field.omega.validate("extension: omega");
  field.omega_tilde.validate("extension: omega_tilde");
  if (!(eps_bar > 0.0)) throw ParamError("extension: eps_bar must be positive");
  if (!(eps_bar < field.omega.min_side()))
    throw ParamError("extension: eps_bar must be smaller than every side of omega");

  TwoScaleCoefficient<D> ext;
  ext.kind = kind;
  ext.field = field;
  ext.eps_bar = eps_bar;

  if (kind == ExtKind::trivial) return ext;

  // Window containment needs at least eps_bar/2 of margin on every side.
  const double slack = 1e-12 * eps_bar;
  for (int k = 0; k < D; ++k) {
    double lo = field.omega.lower[k] - field.omega_tilde.lower[k];
    double hi = field.omega_tilde.upper[k] - field.omega.upper[k];
    if (lo < 0.5 * eps_bar - slack || hi < 0.5 * eps_bar - slack)
      throw ParamError("extension: omega_tilde margin below eps_bar/2 on axis " +
                       std::to_string(k));
  }

  if (kind == ExtKind::discrete) {
    if (partition) {
      const Partition<D>& p = *partition;
      if (p.cells.empty()) throw ParamError("extension: empty partition");
      if (p.windows.size() != p.cells.size() || p.centers.size() != p.cells.size())
        throw ParamError("extension: partition arrays disagree in length");
      double vol = 0.0;
      for (std::size_t j = 0; j < p.cells.size(); ++j) {
        p.cells[j].validate("partition cell");
        for (int k = 0; k < D; ++k)
          if (std::abs(p.windows[j].side(k) - eps_bar) > slack)
            throw ParamError("extension: window " + std::to_string(j) +
                             " side differs from eps_bar on axis " + std::to_string(k));
        if (!p.windows[j].contains_box(p.cells[j], slack))
          throw ParamError("extension: cell " + std::to_string(j) +
                           " not contained in its window");
        if (!field.omega_tilde.contains_box(p.windows[j], slack))
          throw ParamError("extension: window " + std::to_string(j) +
                           " leaves omega_tilde");
        vol += p.cells[j].volume();
      }
      if (std::abs(vol - field.omega.volume()) > 1e-9 * field.omega.volume())
        throw ParamError("extension: partition cells do not cover omega");
      ext.partition = p;
    } else {
      ext.partition = uniform_partition(field.omega, field.omega_tilde, eps_bar);
    }
  }
  return ext;
}

namespace detail {

// Representative of eps_bar * y in the half-open window [w_lo, w_lo + eps_bar).
// Works on the fractional part of y so integer shifts of y are bit-exact.
inline double congruent_in_window(double w_lo, double y, double eps_bar) {
  double t = frac(y);
  double s = w_lo / eps_bar;
  double u = t + std::floor(s - t);
  if (u < s) u += 1.0;
  else if (u >= s + 1.0) u -= 1.0;  // rounding guard
  return u * eps_bar;
}

}  // namespace detail

// Lower corner of the window attached to x.
template <int D>
inline Vec<D> window_anchor(const TwoScaleCoefficient<D>& ext, const Vec<D>& x) {
  if (ext.kind == ExtKind::discrete)
    return ext.partition.windows[ext.partition.locate(x)].lower;
  Vec<D> lo;
  for (int k = 0; k < D; ++k) lo[k] = x[k] - 0.5 * ext.eps_bar;
  return lo;
}

template <int D>
inline Box<D> rev_window(const TwoScaleCoefficient<D>& ext, const Vec<D>& x) {
  check_inside_closed(ext.omega(), x, "rev_window");
  if (ext.kind == ExtKind::discrete)
    return ext.partition.windows[ext.partition.locate(x)];
  return cube_at(x, ext.eps_bar);
}

template <int D>
inline Mat<D> eval_xy(const TwoScaleCoefficient<D>& ext, const Vec<D>& x,
                      const Vec<D>& y) {
  check_inside_closed(ext.omega(), x, "eval_xy");
  if (ext.kind == ExtKind::trivial) return ext.field.eval_clamped(x);

  Vec<D> w_lo = window_anchor(ext, x);
  Vec<D> z;
  for (int k = 0; k < D; ++k)
    z[k] = detail::congruent_in_window(w_lo[k], y[k], ext.eps_bar);
  return ext.field.eval_clamped(z);
}

// Composition a(x, x/eps) through the closed-form cell structure: the grid of
// null cells is located by rounding, corrected to half-open membership, and
// the coefficient is read at the window point the cell maps to.
template <int D>
inline Mat<D> eval_eps(const TwoScaleCoefficient<D>& ext, const Vec<D>& x,
                       double eps) {
  check_inside_closed(ext.omega(), x, "eval_eps");
  if (!(eps > 0.0)) throw ParamError("eval_eps: eps must be positive");

  // At eps = eps_bar every construction reproduces a_M exactly; return it
  // without arithmetic so the identity holds bitwise.
  if (eps == ext.eps_bar || ext.kind == ExtKind::trivial)
    return ext.field.eval_clamped(x);

  const double blow = ext.eps_bar / eps;
  Vec<D> z;
  if (ext.kind == ExtKind::continuous) {
    // Cells of side |c| centered at c * I, c = eps*eps_bar/(eps_bar - eps).
    const double c = eps * ext.eps_bar / (ext.eps_bar - eps);
    for (int k = 0; k < D; ++k) {
      double i = std::floor(x[k] / c + 0.5);
      double xc = c * i;
      z[k] = xc + blow * (x[k] - xc);
    }
  } else {
    // Cells of side eps centered at xhat * eps/eps_bar + eps * I.
    int j = ext.partition.locate(x);
    const Vec<D>& xhat = ext.partition.centers[j];
    for (int k = 0; k < D; ++k) {
      double base = xhat[k] * (eps / ext.eps_bar);
      double i = std::floor((x[k] - base) / eps + 0.5);
      double xc = base + eps * i;
      z[k] = xhat[k] + blow * (x[k] - xc);
    }
  }
  return ext.field.eval_clamped(z);
}

// Max deviation of a(x, x/eps_bar) from a_M(x) over `count` seeded sample
// points; random points miss the null grids almost surely. Must be exactly
// zero for a valid construction.
template <int D>
inline double verify_identity(const TwoScaleCoefficient<D>& ext, int count,
                              std::uint64_t seed = 0) {
  if (count < 1) throw ParamError("verify_identity: count must be positive");
  Rng rng(seed);
  double worst = 0.0;
  for (int i = 0; i < count; ++i) {
    Vec<D> x;
    for (int k = 0; k < D; ++k)
      x[k] = ext.omega().lower[k] + ext.omega().side(k) * uniform01(rng);
    Mat<D> diff = eval_eps(ext, x, ext.eps_bar) - ext.field.eval_clamped(x);
    worst = std::max(worst, diff.frobenius());
  }
  return worst;
}

}  // namespace homog
