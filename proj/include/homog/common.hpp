#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace homog {

// ---------------------------------------------------------------------------
// Error taxonomy. Everything a caller can mishandle gets its own type so
// callers (and the CLI exit-code mapping) can tell usage errors from
// numerical failures.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : Error { using Error::Error; };       // point outside its domain
struct ParamError : Error { using Error::Error; };        // bad argument or construction
struct ParseError : Error { using Error::Error; };        // malformed input file
struct ConfigError : Error { using Error::Error; };       // bad config key/value
struct EllipticityError : Error { using Error::Error; };  // coefficient not positive
struct NumericalError : Error { using Error::Error; };    // solver did not converge
struct ConsistencyError : Error { using Error::Error; };  // mismatched meshes/solutions
struct UnsupportedError : Error { using Error::Error; };
struct ResolutionError : Error { using Error::Error; };   // quadrature too coarse
struct MismatchError : Error { using Error::Error; };     // failed cross-check

// The size_t(D) cast keeps the array extent out of template deduction, so D
// is picked up from a companion argument (a Box, a coefficient, ...) instead.
// Helpers taking only arrays deduce the extent directly.
template <int D>
using Vec = std::array<double, std::size_t(D)>;

template <std::size_t N>
inline std::array<double, N> operator+(const std::array<double, N>& a,
                                       const std::array<double, N>& b) {
  std::array<double, N> r;
  for (std::size_t k = 0; k < N; ++k) r[k] = a[k] + b[k];
  return r;
}

template <std::size_t N>
inline std::array<double, N> operator-(const std::array<double, N>& a,
                                       const std::array<double, N>& b) {
  std::array<double, N> r;
  for (std::size_t k = 0; k < N; ++k) r[k] = a[k] - b[k];
  return r;
}

template <std::size_t N>
inline std::array<double, N> operator*(double s, const std::array<double, N>& a) {
  std::array<double, N> r;
  for (std::size_t k = 0; k < N; ++k) r[k] = s * a[k];
  return r;
}

template <std::size_t N>
inline double dot(const std::array<double, N>& a, const std::array<double, N>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < N; ++k) s += a[k] * b[k];
  return s;
}

template <std::size_t N>
inline double norm_inf(const std::array<double, N>& a) {
  double s = 0.0;
  for (std::size_t k = 0; k < N; ++k) s = std::max(s, std::abs(a[k]));
  return s;
}

template <int D>
inline Vec<D> unit_vec(int k) {
  Vec<D> e{};
  e[k] = 1.0;
  return e;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <std::size_t N>
inline std::string format_point(const std::array<double, N>& z) {
  std::string s = "(";
  for (std::size_t k = 0; k < N; ++k) {
    if (k) s += ", ";
    s += format_double(z[k]);
  }
  return s + ")";
}

// Fractional part in [0, 1). Exact for |t| < 2^52 since t - floor(t) is
// representable; the guard catches the t-just-below-an-integer rounding case.
inline double frac(double t) {
  double f = t - std::floor(t);
  return f < 1.0 ? f : 0.0;
}

// ---------------------------------------------------------------------------
// Randomness. mt19937_64 is bit-identical everywhere; the distribution
// classes are not, so draws go through this helper only.
// ---------------------------------------------------------------------------

using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// ---------------------------------------------------------------------------
// Job pool. HOMOG_JOBS caps concurrency; results are stored by index so the
// outcome is independent of scheduling. On multiple failures the one with the
// smallest index wins, again for determinism.
// ---------------------------------------------------------------------------

inline int job_limit() {
  if (const char* s = std::getenv("HOMOG_JOBS")) {
    int v = std::atoi(s);
    if (v > 0) return v;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

template <class Fn>
void parallel_for(std::size_t count, Fn&& body) {
  int jobs = job_limit();
  if (count <= 1 || jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  jobs = static_cast<int>(std::min<std::size_t>(jobs, count));

  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::size_t err_index = std::numeric_limits<std::size_t>::max();
  std::exception_ptr err;

  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> g(err_mutex);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
      }
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(jobs);
  for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace homog
