#pragma once

#include <algorithm>
#include <cmath>

#include "homog/common.hpp"

namespace homog {

// Axis-aligned box. Membership is half-open [lower, upper) wherever a point
// has to be assigned to exactly one of several boxes; closed membership is
// for domain checks.
template <int D>
struct Box {
  Vec<D> lower{};
  Vec<D> upper{};

  void validate(const char* what = "box") const {
    for (int k = 0; k < D; ++k)
      if (!(lower[k] < upper[k]))
        throw ParamError(std::string(what) + ": empty extent on axis " +
                         std::to_string(k));
  }

  double side(int k) const { return upper[k] - lower[k]; }

  double min_side() const {
    double s = side(0);
    for (int k = 1; k < D; ++k) s = std::min(s, side(k));
    return s;
  }

  double max_side() const {
    double s = side(0);
    for (int k = 1; k < D; ++k) s = std::max(s, side(k));
    return s;
  }

  double volume() const {
    double v = 1.0;
    for (int k = 0; k < D; ++k) v *= side(k);
    return v;
  }

  bool contains_closed(const Vec<D>& z, double tol = 0.0) const {
    for (int k = 0; k < D; ++k)
      if (z[k] < lower[k] - tol || z[k] > upper[k] + tol) return false;
    return true;
  }

  bool contains_half_open(const Vec<D>& z) const {
    for (int k = 0; k < D; ++k)
      if (z[k] < lower[k] || z[k] >= upper[k]) return false;
    return true;
  }

  bool contains_box(const Box& inner, double tol = 0.0) const {
    for (int k = 0; k < D; ++k)
      if (inner.lower[k] < lower[k] - tol || inner.upper[k] > upper[k] + tol)
        return false;
    return true;
  }

  // Componentwise nearest point in the closure.
  Vec<D> clamp(const Vec<D>& z) const {
    Vec<D> r;
    for (int k = 0; k < D; ++k) r[k] = std::min(std::max(z[k], lower[k]), upper[k]);
    return r;
  }

  Box inflated(double margin) const {
    Box b = *this;
    for (int k = 0; k < D; ++k) {
      b.lower[k] -= margin;
      b.upper[k] += margin;
    }
    return b;
  }

  Vec<D> center() const {
    Vec<D> c;
    for (int k = 0; k < D; ++k) c[k] = 0.5 * (lower[k] + upper[k]);
    return c;
  }

  bool operator==(const Box& o) const {
    return lower == o.lower && upper == o.upper;
  }
};

// Cube of side `edge` centered at x.
template <std::size_t N>
inline Box<static_cast<int>(N)> cube_at(const std::array<double, N>& x, double edge) {
  Box<static_cast<int>(N)> b;
  for (std::size_t k = 0; k < N; ++k) {
    b.lower[k] = x[k] - 0.5 * edge;
    b.upper[k] = x[k] + 0.5 * edge;
  }
  return b;
}

template <int D>
inline void check_inside_closed(const Box<D>& box, const Vec<D>& z,
                                const char* what, double tol = 0.0) {
  for (int k = 0; k < D; ++k)
    if (z[k] < box.lower[k] - tol || z[k] > box.upper[k] + tol)
      throw DomainError(std::string(what) + ": coordinate " +
                        std::to_string(k) + " = " + format_double(z[k]) +
                        " outside [" + format_double(box.lower[k]) + ", " +
                        format_double(box.upper[k]) + "]");
}

}  // namespace homog
