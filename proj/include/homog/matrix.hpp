#pragma once

#include <algorithm>
#include <cmath>

#include "homog/common.hpp"

namespace homog {

// Small dense d-by-d matrix. Coefficients in this codebase are symmetric;
// nothing here enforces that, but min_eig() assumes it.
template <int D>
struct Mat {
  std::array<double, D * D> v{};

  double& operator()(int i, int j) { return v[i * D + j]; }
  double operator()(int i, int j) const { return v[i * D + j]; }

  static Mat zero() { return Mat{}; }

  static Mat identity() { return iso(1.0); }

  // a * I
  static Mat iso(double a) {
    Mat m{};
    for (int i = 0; i < D; ++i) m(i, i) = a;
    return m;
  }

  Mat& operator+=(const Mat& o) {
    for (int i = 0; i < D * D; ++i) v[i] += o.v[i];
    return *this;
  }

  Mat& operator-=(const Mat& o) {
    for (int i = 0; i < D * D; ++i) v[i] -= o.v[i];
    return *this;
  }

  Mat& operator*=(double s) {
    for (double& x : v) x *= s;
    return *this;
  }

  friend Mat operator+(Mat a, const Mat& b) { return a += b; }
  friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
  friend Mat operator*(double s, Mat a) { return a *= s; }

  Vec<D> apply(const Vec<D>& x) const {
    Vec<D> y{};
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) y[i] += (*this)(i, j) * x[j];
    return y;
  }

  // xi^T a xi
  double quad(const Vec<D>& xi) const {
    double s = 0.0;
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) s += xi[i] * (*this)(i, j) * xi[j];
    return s;
  }

  double frobenius() const {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  }

  // ||a - a^T||_F
  double asym_norm() const {
    double s = 0.0;
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) {
        double d = (*this)(i, j) - (*this)(j, i);
        s += d * d;
      }
    return std::sqrt(s);
  }

  bool isotropic(double tol) const {
    double a0 = (*this)(0, 0);
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) {
        double want = (i == j) ? a0 : 0.0;
        if (std::abs((*this)(i, j) - want) > tol) return false;
      }
    return true;
  }

  double min_diag() const {
    double m = (*this)(0, 0);
    for (int i = 1; i < D; ++i) m = std::min(m, (*this)(i, i));
    return m;
  }

  // Smallest eigenvalue of the symmetric part. Closed form for d <= 2, which
  // is all the validated range needs.
  double min_eig() const {
    if constexpr (D == 1) {
      return v[0];
    } else if constexpr (D == 2) {
      double a = (*this)(0, 0), d = (*this)(1, 1);
      double b = 0.5 * ((*this)(0, 1) + (*this)(1, 0));
      double mean = 0.5 * (a + d);
      double rad = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
      return mean - rad;
    } else {
      // Gershgorin lower bound; adequate as a safety check beyond d = 2.
      double lo = std::numeric_limits<double>::infinity();
      for (int i = 0; i < D; ++i) {
        double r = 0.0;
        for (int j = 0; j < D; ++j)
          if (j != i) r += std::abs((*this)(i, j));
        lo = std::min(lo, (*this)(i, i) - r);
      }
      return lo;
    }
  }

  double max_eig() const {
    if constexpr (D == 1) {
      return v[0];
    } else if constexpr (D == 2) {
      double a = (*this)(0, 0), d = (*this)(1, 1);
      double b = 0.5 * ((*this)(0, 1) + (*this)(1, 0));
      double mean = 0.5 * (a + d);
      double rad = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
      return mean + rad;
    } else {
      double hi = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < D; ++i) {
        double r = 0.0;
        for (int j = 0; j < D; ++j)
          if (j != i) r += std::abs((*this)(i, j));
        hi = std::max(hi, (*this)(i, i) + r);
      }
      return hi;
    }
  }
};

}  // namespace homog
