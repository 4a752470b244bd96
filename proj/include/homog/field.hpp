#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "homog/box.hpp"
#include "homog/matrix.hpp"

namespace homog {

// ---------------------------------------------------------------------------
// Oscillatory coefficient a_M: symmetric matrix valued, defined on the closed
// working domain omega_tilde which contains the physical domain omega. The
// evaluator must stay within [alpha, beta] ellipticity bounds on omega_tilde.
// ---------------------------------------------------------------------------

template <int D>
struct MicroCoefficient {
  Box<D> omega;
  Box<D> omega_tilde;
  std::function<Mat<D>(const Vec<D>&)> evaluator;
  double alpha = 0.0;  // inf of xi^T a xi / |xi|^2 over omega_tilde
  double beta = 0.0;   // sup of |a xi| / |xi| over omega_tilde

  Mat<D> eval(const Vec<D>& z) const {
    check_inside_closed(omega_tilde, z, "coefficient evaluation");
    return evaluator(z);
  }

  // Nearest-point extension: clamp into the closure of omega_tilde first.
  // Internal code paths use this so last-ulp rounding never trips the
  // domain check.
  Mat<D> eval_clamped(const Vec<D>& z) const {
    return evaluator(omega_tilde.clamp(z));
  }
};

// Extends the field past omega by `margin` per side. Values outside omega
// are taken at the componentwise nearest point of the closure of omega.
template <int D>
inline MicroCoefficient<D> extend_domain(const MicroCoefficient<D>& f,
                                         double margin) {
  if (!(margin > 0.0)) throw ParamError("extend_domain: margin must be positive");
  MicroCoefficient<D> g;
  g.omega = f.omega;
  g.omega_tilde = f.omega.inflated(margin);
  g.alpha = f.alpha;
  g.beta = f.beta;
  Box<D> base = f.omega;
  auto inner = f.evaluator;
  g.evaluator = [base, inner](const Vec<D>& z) { return inner(base.clamp(z)); };
  return g;
}

// ---------------------------------------------------------------------------
// Built-in field families.
// ---------------------------------------------------------------------------

enum class FieldKind {
  constant,      // a = value * I
  layered,       // mean + amplitude * sin(2 pi x_1 / period), varies along axis 0
  sinusoid,      // mean + amplitude * prod_k sin(2 pi x_k / period)
  checkerboard,  // d = 2: a1 where tile parity even, a2 where odd
  laminate,      // d = 2: two-phase in x_1, equal fractions within `period`
  random,        // log-uniform cells at scale `cell`, one box-filter pass
  grid_file,     // piecewise constant values from a text file
};

inline const char* field_kind_name(FieldKind k) {
  switch (k) {
    case FieldKind::constant: return "constant";
    case FieldKind::layered: return "layered";
    case FieldKind::sinusoid: return "sinusoid";
    case FieldKind::checkerboard: return "checkerboard";
    case FieldKind::laminate: return "laminate";
    case FieldKind::random: return "random";
    case FieldKind::grid_file: return "grid-file";
  }
  return "?";
}

struct FieldSpec {
  FieldKind kind = FieldKind::constant;
  double value = 1.0;                    // constant
  double mean = 2.0;                     // layered / sinusoid
  double amplitude = 1.0;                //
  double period = 0.1;                   // layered / sinusoid / laminate
  double a1 = 1.0;                       // checkerboard / laminate phases
  double a2 = 4.0;                       //
  double tile = 0.05;                    // checkerboard tile edge
  double min_value = 1.0;                // random
  double max_value = 10.0;               //
  double cell = 0.0125;                  // random grid scale
  std::uint64_t seed = 0;                //
  std::string path;                      // grid_file

  bool operator==(const FieldSpec&) const = default;
};

namespace detail {

// Cellwise-constant scalar values on a uniform grid over `box`, half-open
// cells, x-index fastest. Shared by the random family and grid files.
template <int D>
struct GridValues {
  Box<D> box;
  std::array<int, D> n{};
  std::vector<double> values;

  std::size_t index(const std::array<int, D>& i) const {
    std::size_t idx = 0;
    for (int k = D - 1; k >= 0; --k) idx = idx * n[k] + i[k];
    return idx;
  }

  double at(const Vec<D>& z) const {
    std::array<int, D> i;
    for (int k = 0; k < D; ++k) {
      double t = (z[k] - box.lower[k]) / box.side(k) * n[k];
      int c = static_cast<int>(std::floor(t));
      i[k] = std::min(std::max(c, 0), n[k] - 1);
    }
    return values[index(i)];
  }
};

// One 3^d box-filter pass with index clamping at the edges.
template <int D>
inline void box_filter(GridValues<D>& g) {
  std::vector<double> out(g.values.size());
  std::array<int, D> i{};
  const std::size_t total = g.values.size();
  for (std::size_t flat = 0; flat < total; ++flat) {
    double sum = 0.0;
    int taps = 0;
    std::array<int, D> o{};
    for (int k = 0; k < D; ++k) o[k] = -1;
    for (;;) {
      std::array<int, D> j;
      for (int k = 0; k < D; ++k)
        j[k] = std::min(std::max(i[k] + o[k], 0), g.n[k] - 1);
      sum += g.values[g.index(j)];
      ++taps;
      int k = 0;
      while (k < D && ++o[k] > 1) o[k++] = -1;
      if (k == D) break;
    }
    out[flat] = sum / taps;
    int k = 0;
    while (k < D && ++i[k] == g.n[k]) i[k++] = 0;
  }
  g.values.swap(out);
}

}  // namespace detail

template <int D>
inline MicroCoefficient<D> synthesize(const FieldSpec& spec, const Box<D>& omega) {
  omega.validate("synthesize: omega");
  MicroCoefficient<D> f;
  f.omega = omega;
  f.omega_tilde = omega;

  switch (spec.kind) {
    case FieldKind::constant: {
      if (!(spec.value > 0.0)) throw ParamError("constant field: value must be positive");
      double c = spec.value;
      f.evaluator = [c](const Vec<D>&) { return Mat<D>::iso(c); };
      f.alpha = f.beta = c;
      break;
    }

    case FieldKind::layered:
    case FieldKind::sinusoid: {
      if (!(spec.period > 0.0)) throw ParamError("sinusoid field: period must be positive");
      if (!(spec.mean - std::abs(spec.amplitude) > 0.0))
        throw ParamError("sinusoid field: mean - |amplitude| must be positive");
      double mean = spec.mean, amp = spec.amplitude, per = spec.period;
      if (spec.kind == FieldKind::layered) {
        f.evaluator = [mean, amp, per](const Vec<D>& z) {
          return Mat<D>::iso(mean + amp * std::sin(2.0 * M_PI * z[0] / per));
        };
      } else {
        f.evaluator = [mean, amp, per](const Vec<D>& z) {
          double osc = amp;
          for (int k = 0; k < D; ++k) osc *= std::sin(2.0 * M_PI * z[k] / per);
          return Mat<D>::iso(mean + osc);
        };
      }
      f.alpha = mean - std::abs(amp);
      f.beta = mean + std::abs(amp);
      break;
    }

    case FieldKind::checkerboard: {
      if constexpr (D != 2) throw ParamError("checkerboard field needs d = 2");
      if (!(spec.a1 > 0.0 && spec.a2 > 0.0))
        throw ParamError("checkerboard field: phases must be positive");
      if (!(spec.tile > 0.0)) throw ParamError("checkerboard field: tile must be positive");
      double a1 = spec.a1, a2 = spec.a2, tile = spec.tile;
      Vec<D> lo = omega.lower;
      f.evaluator = [a1, a2, tile, lo](const Vec<D>& z) {
        long long p = 0;
        for (int k = 0; k < D; ++k)
          p += static_cast<long long>(std::floor((z[k] - lo[k]) / tile));
        return Mat<D>::iso((p % 2 == 0) ? a1 : a2);
      };
      f.alpha = std::min(a1, a2);
      f.beta = std::max(a1, a2);
      break;
    }

    case FieldKind::laminate: {
      if constexpr (D != 2) throw ParamError("laminate field needs d = 2");
      if (!(spec.a1 > 0.0 && spec.a2 > 0.0))
        throw ParamError("laminate field: phases must be positive");
      if (!(spec.period > 0.0)) throw ParamError("laminate field: period must be positive");
      double a1 = spec.a1, a2 = spec.a2, per = spec.period;
      double lo = omega.lower[0];
      f.evaluator = [a1, a2, per, lo](const Vec<D>& z) {
        return Mat<D>::iso(frac((z[0] - lo) / per) < 0.5 ? a1 : a2);
      };
      f.alpha = std::min(a1, a2);
      f.beta = std::max(a1, a2);
      break;
    }

    case FieldKind::random: {
      if (!(spec.min_value > 0.0 && spec.max_value >= spec.min_value))
        throw ParamError("random field: need 0 < min <= max");
      if (spec.max_value / spec.min_value > 100.0 * (1.0 + 1e-12))
        throw ParamError("random field: contrast above the 1e2 cap");
      if (!(spec.cell > 0.0)) throw ParamError("random field: cell must be positive");

      auto grid = std::make_shared<detail::GridValues<D>>();
      grid->box = omega;
      std::size_t total = 1;
      for (int k = 0; k < D; ++k) {
        grid->n[k] = std::max(1, static_cast<int>(std::ceil(omega.side(k) / spec.cell - 1e-9)));
        total *= grid->n[k];
      }
      grid->values.resize(total);
      Rng rng(spec.seed);
      double llo = std::log(spec.min_value), lhi = std::log(spec.max_value);
      for (double& v : grid->values) v = std::exp(llo + (lhi - llo) * uniform01(rng));
      detail::box_filter(*grid);

      f.alpha = f.beta = grid->values[0];
      for (double v : grid->values) {
        f.alpha = std::min(f.alpha, v);
        f.beta = std::max(f.beta, v);
      }
      f.evaluator = [grid](const Vec<D>& z) { return Mat<D>::iso(grid->at(z)); };
      break;
    }

    case FieldKind::grid_file:
      throw ParamError("synthesize: grid-file fields go through load_grid_field");
  }
  return f;
}

// ---------------------------------------------------------------------------
// Grid field text format:
//   line 1:  d n1 [n2]
//   line 2:  lower_1 .. lower_d upper_1 .. upper_d
//   then     n1 (x n2) positive values, x-index fastest; '#' starts a comment
// ---------------------------------------------------------------------------

namespace detail {

struct TokenStream {
  std::istream& in;
  int line = 0;
  std::istringstream cur;

  explicit TokenStream(std::istream& s) : in(s) {}

  bool next(std::string& tok) {
    for (;;) {
      if (cur >> tok) {
        if (tok[0] == '#') {  // comment to end of line
          cur.str("");
          cur.clear();
          continue;
        }
        return true;
      }
      std::string l;
      if (!std::getline(in, l)) return false;
      ++line;
      auto hash = l.find('#');
      if (hash != std::string::npos) l.erase(hash);
      cur.str(l);
      cur.clear();
    }
  }

  double number(const char* what) {
    std::string tok;
    if (!next(tok))
      throw ParseError(std::string("grid field: missing ") + what + " near line " +
                       std::to_string(line));
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ParseError(std::string("grid field: bad ") + what + " '" + tok +
                       "' at line " + std::to_string(line));
    }
  }

  long integer(const char* what) {
    double v = number(what);
    long r = static_cast<long>(v);
    if (static_cast<double>(r) != v)
      throw ParseError(std::string("grid field: ") + what + " must be an integer, got " +
                       format_double(v) + " at line " + std::to_string(line));
    return r;
  }
};

}  // namespace detail

inline int grid_field_dimension(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("grid field: cannot open '" + path + "'");
  detail::TokenStream ts(in);
  long d = ts.integer("dimension");
  if (d < 1 || d > 2)
    throw ParseError("grid field: dimension must be 1 or 2, got " + std::to_string(d) +
                     " at line " + std::to_string(ts.line));
  return static_cast<int>(d);
}

template <int D>
inline MicroCoefficient<D> load_grid_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("grid field: cannot open '" + path + "'");
  detail::TokenStream ts(in);

  long d = ts.integer("dimension");
  if (d != D)
    throw ParseError("grid field: file has d = " + std::to_string(d) + ", expected " +
                     std::to_string(D) + " (line " + std::to_string(ts.line) + ")");

  auto grid = std::make_shared<detail::GridValues<D>>();
  std::size_t total = 1;
  for (int k = 0; k < D; ++k) {
    long n = ts.integer("cell count");
    if (n < 1)
      throw ParseError("grid field: cell count must be >= 1 at line " +
                       std::to_string(ts.line));
    grid->n[k] = static_cast<int>(n);
    total *= grid->n[k];
  }
  for (int k = 0; k < D; ++k) grid->box.lower[k] = ts.number("lower bound");
  for (int k = 0; k < D; ++k) grid->box.upper[k] = ts.number("upper bound");
  grid->box.validate("grid field extent");

  grid->values.resize(total);
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    double v = ts.number("value");
    if (!(v > 0.0))
      throw ParseError("grid field: non-elliptic value " + format_double(v) +
                       " at line " + std::to_string(ts.line));
    grid->values[i] = v;
    lo = i ? std::min(lo, v) : v;
    hi = i ? std::max(hi, v) : v;
  }
  std::string extra;
  if (ts.next(extra))
    throw ParseError("grid field: trailing token '" + extra + "' at line " +
                     std::to_string(ts.line));

  MicroCoefficient<D> f;
  f.omega = grid->box;
  f.omega_tilde = grid->box;
  f.alpha = lo;
  f.beta = hi;
  f.evaluator = [grid](const Vec<D>& z) { return Mat<D>::iso(grid->at(z)); };
  return f;
}

template <int D>
inline void save_grid_field(const std::string& path, const Box<D>& box,
                            const std::array<int, D>& n,
                            const std::vector<double>& values) {
  std::ofstream out(path);
  if (!out) throw ParseError("grid field: cannot write '" + path + "'");
  out << D;
  for (int k = 0; k < D; ++k) out << ' ' << n[k];
  out << '\n';
  for (int k = 0; k < D; ++k) out << format_double(box.lower[k]) << ' ';
  for (int k = 0; k < D; ++k) out << format_double(box.upper[k]) << (k + 1 < D ? " " : "");
  out << '\n';
  std::size_t per_row = static_cast<std::size_t>(n[0]);
  for (std::size_t i = 0; i < values.size(); ++i)
    out << format_double(values[i]) << ((i + 1) % per_row == 0 ? '\n' : ' ');
}

// ---------------------------------------------------------------------------
// Pointwise combinators, used by the structure-preservation tests.
// ---------------------------------------------------------------------------

template <int D>
inline MicroCoefficient<D> linear_combination(double c1, const MicroCoefficient<D>& f1,
                                              double c2, const MicroCoefficient<D>& f2) {
  if (!(f1.omega == f2.omega) || !(f1.omega_tilde == f2.omega_tilde))
    throw ConsistencyError("linear_combination: fields live on different domains");
  if (c1 < 0.0 || c2 < 0.0)
    throw ParamError("linear_combination: coefficients must be nonnegative to keep ellipticity");
  MicroCoefficient<D> g;
  g.omega = f1.omega;
  g.omega_tilde = f1.omega_tilde;
  auto e1 = f1.evaluator, e2 = f2.evaluator;
  g.evaluator = [c1, e1, c2, e2](const Vec<D>& z) {
    return c1 * e1(z) + c2 * e2(z);
  };
  g.alpha = c1 * f1.alpha + c2 * f2.alpha;
  g.beta = c1 * f1.beta + c2 * f2.beta;
  return g;
}

// Entrywise power of an isotropic field; matrix powers of general symmetric
// values are out of scope.
template <int D>
inline MicroCoefficient<D> pow_field(const MicroCoefficient<D>& f, int p) {
  if (p < 1) throw ParamError("pow_field: exponent must be a positive integer");
  MicroCoefficient<D> g;
  g.omega = f.omega;
  g.omega_tilde = f.omega_tilde;
  auto inner = f.evaluator;
  g.evaluator = [inner, p](const Vec<D>& z) {
    Mat<D> a = inner(z);
    if (!a.isotropic(0.0))
      throw UnsupportedError("pow_field: value is not isotropic");
    double s = a(0, 0);
    double r = 1.0;
    for (int i = 0; i < p; ++i) r *= s;
    return Mat<D>::iso(r);
  };
  g.alpha = std::pow(f.alpha, p);
  g.beta = std::pow(f.beta, p);
  return g;
}

}  // namespace homog
