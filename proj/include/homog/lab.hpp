#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "homog/config.hpp"
#include "homog/solve.hpp"

namespace homog {

// Geometric scale sequence eps_n = eps_bar * ratio^n, n = 0 .. count-1.
struct EpsSequence {
  double eps_bar = 0.1;
  double ratio = 0.5;
  int count = 7;

  std::vector<double> values() const {
    if (!(eps_bar > 0.0)) throw ParamError("eps sequence: eps_bar must be positive");
    if (!(ratio > 0.0 && ratio < 1.0))
      throw ParamError("eps sequence: ratio must lie strictly between 0 and 1");
    if (count < 1) throw ParamError("eps sequence: count must be positive");
    std::vector<double> v(count);
    double e = eps_bar;
    for (int i = 0; i < count; ++i) {
      v[i] = e;
      e *= ratio;
    }
    return v;
  }
};

// Test function phi(x, y), continuous in x and unit-periodic in y.
template <int D>
struct TwoScaleTestFn {
  std::string name;
  std::function<double(const Vec<D>&, const Vec<D>&)> f;
};

template <int D>
inline TwoScaleTestFn<D> phi_one() {
  return {"one", [](const Vec<D>&, const Vec<D>&) { return 1.0; }};
}

template <int D>
inline TwoScaleTestFn<D> phi_x_cos() {
  return {"x-cos", [](const Vec<D>& x, const Vec<D>& y) {
            return x[0] * std::cos(2.0 * M_PI * y[0]);
          }};
}

struct StudyRow {
  double eps = 0.0;
  double value = 0.0;
  double reference = 0.0;
  double deviation = 0.0;
};

struct StudyReport {
  std::string name;
  std::vector<std::string> notes;
  std::vector<StudyRow> rows;

  std::string csv() const {
    std::string out = "# " + name + "\n";
    for (const std::string& n : notes) out += "# " + n + "\n";
    out += "eps,value,reference,deviation\n";
    for (const StudyRow& r : rows)
      out += format_double(r.eps) + "," + format_double(r.value) + "," +
             format_double(r.reference) + "," + format_double(r.deviation) + "\n";
    return out;
  }
};

namespace detail {

template <int D>
inline double iso_value(const Mat<D>& a, const char* where) {
  if (!a.isotropic(1e-12 * (std::abs(a(0, 0)) + 1.0)))
    throw UnsupportedError(std::string(where) +
                           ": only scalar (isotropic) coefficients are supported here");
  return a(0, 0);
}

inline double int_pow(double v, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= v;
  return r;
}

// Finest length scale of x -> a(x, x/eps): the reading cells shrink like
// eps * eps_bar / |eps_bar - eps| for the sliding-window construction and
// like eps for the fixed-window one.
template <int D>
inline double osc_scale(const TwoScaleCoefficient<D>& ext, double eps) {
  if (ext.kind == ExtKind::trivial || eps == ext.eps_bar) return ext.eps_bar;
  if (ext.kind == ExtKind::discrete) return std::min(eps, ext.eps_bar);
  double c = eps * ext.eps_bar / std::abs(ext.eps_bar - eps);
  return std::min(eps, c);
}

}  // namespace detail

// Weak convergence test: compares the midpoint quadrature of
// a(x, x/eps)^p phi(x, x/eps) over omega against the product quadrature of
// a(x, y)^p phi(x, y) over omega x Y. The deviation column should fall to
// zero along the sequence for an admissible construction.
template <int D>
inline StudyReport atf_study(const TwoScaleCoefficient<D>& ext,
                             const TwoScaleTestFn<D>& phi, int power,
                             const EpsSequence& seq, int quad_n, int rhs_n) {
  if (power < 1) throw ParamError("atf_study: power must be at least 1");
  if (quad_n < 2) throw ParamError("atf_study: quad_n must be at least 2");
  if (rhs_n < 2) throw ParamError("atf_study: rhs_n must be at least 2");
  const Box<D>& omega = ext.omega();
  const double vol = omega.volume();

  // Reference value: out of the quadrature over omega, each point carries the
  // mean over one periodicity cell. Outer loop parallel, combined in index
  // order so the result does not depend on scheduling.
  std::size_t nx = 1, ny = 1;
  for (int k = 0; k < D; ++k) {
    nx *= static_cast<std::size_t>(rhs_n);
    ny *= static_cast<std::size_t>(rhs_n);
  }
  std::vector<double> partial(nx, 0.0);
  parallel_for(nx, [&](std::size_t flat) {
    std::size_t rem = flat;
    Vec<D> x;
    for (int k = 0; k < D; ++k) {
      x[k] = omega.lower[k] + (rem % rhs_n + 0.5) * omega.side(k) / rhs_n;
      rem /= rhs_n;
    }
    double acc = 0.0;
    std::array<int, D> iy{};
    for (std::size_t fy = 0; fy < ny; ++fy) {
      Vec<D> y;
      for (int k = 0; k < D; ++k) y[k] = (iy[k] + 0.5) / rhs_n;
      double a = detail::iso_value(eval_xy(ext, x, y), "atf_study");
      acc += detail::int_pow(a, power) * phi.f(x, y);
      int k = 0;
      while (k < D && ++iy[k] == rhs_n) iy[k++] = 0;
    }
    partial[flat] = acc / static_cast<double>(ny);
  });
  double reference = 0.0;
  for (double v : partial) reference += v;
  reference *= vol / static_cast<double>(nx);

  StudyReport rep;
  rep.name = std::string("atf ") + ext_kind_name(ext.kind) + " phi=" + phi.name +
             " p=" + std::to_string(power);
  rep.notes.push_back("quad_n=" + std::to_string(quad_n) +
                      " rhs_n=" + std::to_string(rhs_n));

  std::size_t nq = 1;
  for (int k = 0; k < D; ++k) nq *= static_cast<std::size_t>(quad_n);
  for (double eps : seq.values()) {
    const double scale = detail::osc_scale(ext, eps);
    for (int k = 0; k < D; ++k) {
      double h = omega.side(k) / quad_n;
      if (h > scale / 8.0 * (1.0 + 1e-9))
        throw ResolutionError(
            "atf_study: quadrature spacing " + format_double(h) + " at eps = " +
            format_double(eps) + " exceeds an eighth of the oscillation scale " +
            format_double(scale) + "; raise quad_n");
    }
    std::vector<double> part(static_cast<std::size_t>(quad_n), 0.0);
    parallel_for(static_cast<std::size_t>(quad_n), [&](std::size_t i0) {
      double acc = 0.0;
      std::array<int, D> ix{};
      ix[D - 1] = static_cast<int>(i0);  // split the outermost axis
      std::size_t inner = nq / quad_n;
      for (std::size_t f = 0; f < inner; ++f) {
        Vec<D> x, y;
        for (int k = 0; k < D; ++k) {
          x[k] = omega.lower[k] + (ix[k] + 0.5) * omega.side(k) / quad_n;
          y[k] = x[k] / eps;
        }
        double a = detail::iso_value(eval_eps(ext, x, eps), "atf_study");
        acc += detail::int_pow(a, power) * phi.f(x, y);
        int k = 0;
        while (k < D - 1 && ++ix[k] == quad_n) ix[k++] = 0;
      }
      part[i0] = acc;
    });
    double lhs = 0.0;
    for (double v : part) lhs += v;
    lhs *= vol / static_cast<double>(nq);
    rep.rows.push_back({eps, lhs, reference, std::abs(lhs - reference)});
  }
  return rep;
}

// Convenience forms with the reference quadrature fixed (512 points per axis
// in one dimension, 128 in two) so reports stay comparable across runs.
template <int D>
inline StudyReport atf_integral_study(const TwoScaleCoefficient<D>& ext,
                                      const TwoScaleTestFn<D>& phi,
                                      const EpsSequence& seq, int quad_n) {
  return atf_study(ext, phi, 1, seq, quad_n, D == 1 ? 512 : 128);
}

template <int D>
inline StudyReport atf_power_study(const TwoScaleCoefficient<D>& ext,
                                   const TwoScaleTestFn<D>& phi, int power,
                                   const EpsSequence& seq, int quad_n) {
  return atf_study(ext, phi, power, seq, quad_n, D == 1 ? 512 : 128);
}

// L2 distance between the oscillatory solution and the upscaled one along an
// eps sequence, both solved on a mesh fine enough for the oscillation.
struct MeshRule {
  int cells_per_eps = 8;
  int min_n = 64;
  int max_n = 4000000;
};

inline StudyReport u_eps_study(const TwoScaleCoefficient<1>& ext,
                               const AveragedCoefficientField<1>& A_field,
                               const std::function<double(double)>& f,
                               const EpsSequence& seq, const MeshRule& rule) {
  if (rule.cells_per_eps < 1)
    throw ParamError("u_eps_study: cells_per_eps must be positive");
  const Box<1>& omega = ext.omega();

  StudyReport rep;
  rep.name = std::string("u-eps ") + ext_kind_name(ext.kind);
  rep.notes.push_back("value = |u_eps - u0|_L2, reference fixed at 0");

  for (double eps : seq.values()) {
    double scale = detail::osc_scale(ext, eps);
    long want = static_cast<long>(
        std::ceil(omega.side(0) * rule.cells_per_eps / scale - 1e-9));
    int n = static_cast<int>(std::min<long>(std::max<long>(want, rule.min_n),
                                            rule.max_n));
    if (want > rule.max_n)
      throw ResolutionError("u_eps_study: eps = " + format_double(eps) + " needs " +
                            std::to_string(want) + " cells, above the cap " +
                            std::to_string(rule.max_n));
    auto a_eps = [&ext, eps](double s) {
      return detail::iso_value(eval_eps(ext, Vec<1>{s}, eps), "u_eps_study");
    };
    auto a_zero = [&A_field](double s) {
      return detail::iso_value(A_field.eval(Vec<1>{s}), "u_eps_study");
    };
    Solution<1> u_eps = solve_fine_1d(a_eps, f, omega, n);
    Solution<1> u0 = solve_fine_1d(a_zero, f, omega, n);
    double dist = error_norms(u_eps, u0).l2;
    rep.rows.push_back({eps, dist, 0.0, dist});
  }
  return rep;
}

// ---------------------------------------------------------------------------
// End-to-end pipeline: field -> extension -> averaged tensors -> fine and
// upscaled solves -> corrected reconstruction -> CSV artifacts. All outputs
// are a pure function of the configuration.
// ---------------------------------------------------------------------------

struct PipelineResult {
  std::string dir;
  ErrorNorms u0_error;
  ErrorNorms corrected_error;
  ErrorNorms baseline_error;
  bool has_corrected = false;
  bool has_baseline = false;
  std::vector<std::string> warnings;
};

namespace detail {

inline FieldKind parse_field_kind(const std::string& s) {
  if (s == "constant") return FieldKind::constant;
  if (s == "layered") return FieldKind::layered;
  if (s == "sinusoid") return FieldKind::sinusoid;
  if (s == "checkerboard") return FieldKind::checkerboard;
  if (s == "laminate") return FieldKind::laminate;
  if (s == "random") return FieldKind::random;
  if (s == "grid-file") return FieldKind::grid_file;
  throw ConfigError("field.kind '" + s + "' is not recognized");
}

inline ExtKind parse_ext_kind(const std::string& s) {
  if (s == "trivial") return ExtKind::trivial;
  if (s == "continuous") return ExtKind::continuous;
  if (s == "discrete") return ExtKind::discrete;
  throw ConfigError("extension '" + s + "' is not recognized");
}

inline FieldSpec make_field_spec(const PipelineConfig& c) {
  FieldSpec s;
  s.kind = parse_field_kind(c.field_kind);
  s.value = c.field_value;
  s.mean = c.field_mean;
  s.amplitude = c.field_amplitude;
  s.period = c.field_period;
  s.a1 = c.field_a1;
  s.a2 = c.field_a2;
  s.tile = c.field_tile;
  s.min_value = c.field_min;
  s.max_value = c.field_max;
  s.cell = c.field_cell;
  s.seed = c.seed;
  s.path = c.field_path;
  return s;
}

template <int D>
inline Box<D> make_box(const PipelineConfig& c) {
  Box<D> b;
  for (int k = 0; k < D; ++k) {
    if (c.omega_bounds.empty()) {
      b.lower[k] = 0.0;
      b.upper[k] = 1.0;
    } else {
      b.lower[k] = c.omega_bounds[k];
      b.upper[k] = c.omega_bounds[D + k];
    }
  }
  b.validate("omega");
  return b;
}

template <int D>
inline std::function<double(const Vec<D>&)> make_source(const PipelineConfig& c,
                                                        const Box<D>& omega) {
  if (c.source_kind == "constant") {
    double v = c.source_value;
    return [v](const Vec<D>&) { return v; };
  }
  if (c.source_kind == "sine-10")
    return [](const Vec<D>& x) { return -3.0 * std::sin(10.0 * x[0]); };
  Box<D> b = omega;  // sine-pi: product of half-sines, zero on the boundary
  return [b](const Vec<D>& x) {
    double v = 1.0;
    for (int k = 0; k < D; ++k)
      v *= std::sin(M_PI * (x[k] - b.lower[k]) / b.side(k));
    return v;
  };
}

// Synthesize over the inflated box, then declare the core box as the macro
// domain. Analytic fields are thereby genuinely defined on the margin instead
// of clamped.
template <int D>
inline MicroCoefficient<D> make_field(const PipelineConfig& c, const Box<D>& omega,
                                      double margin) {
  FieldSpec spec = make_field_spec(c);
  MicroCoefficient<D> f;
  if (spec.kind == FieldKind::grid_file) {
    f = load_grid_field<D>(spec.path);
    Box<D> core = f.omega_tilde;
    for (int k = 0; k < D; ++k) {
      core.lower[k] += margin;
      core.upper[k] -= margin;
      if (!(core.lower[k] < core.upper[k]))
        throw ConfigError("grid-file domain too small for margin " +
                          format_double(margin));
    }
    f.omega = core;
  } else {
    f = synthesize(spec, omega.inflated(margin));
    f.omega = omega;
  }
  return f;
}

template <int D>
inline Partition<D> make_partition(const PipelineConfig& c, const Box<D>& omega,
                                   const Box<D>& omega_tilde) {
  Partition<D> p;
  std::array<int, D> counts;
  std::size_t total = 1;
  for (int k = 0; k < D; ++k) {
    counts[k] = c.partition_n;
    if (omega.side(k) / counts[k] > c.eps_bar * (1.0 + 1e-12))
      throw ConfigError("partition_n = " + std::to_string(c.partition_n) +
                        " makes cells larger than the window; raise it");
    total *= static_cast<std::size_t>(counts[k]);
  }
  std::array<int, D> i{};
  for (std::size_t flat = 0; flat < total; ++flat) {
    Box<D> cell, win;
    Vec<D> center;
    for (int k = 0; k < D; ++k) {
      cell.lower[k] = omega.lower[k] + omega.side(k) * i[k] / counts[k];
      cell.upper[k] = (i[k] + 1 == counts[k])
                          ? omega.upper[k]
                          : omega.lower[k] + omega.side(k) * (i[k] + 1) / counts[k];
      double c0 = 0.5 * (cell.lower[k] + cell.upper[k]);
      win.lower[k] = c0 - 0.5 * c.eps_bar;
      win.upper[k] = c0 + 0.5 * c.eps_bar;
      if (win.lower[k] < omega_tilde.lower[k]) {
        win.lower[k] = omega_tilde.lower[k];
        win.upper[k] = win.lower[k] + c.eps_bar;
      }
      if (win.upper[k] > omega_tilde.upper[k]) {
        win.upper[k] = omega_tilde.upper[k];
        win.lower[k] = win.upper[k] - c.eps_bar;
      }
      center[k] = 0.5 * (win.lower[k] + win.upper[k]);
    }
    if (!win.contains_box(cell, 1e-12 * c.eps_bar))
      throw ConfigError("partition_n window does not cover its cell; widen the "
                        "margin or raise partition_n");
    p.cells.push_back(cell);
    p.windows.push_back(win);
    p.centers.push_back(center);
    int k = 0;
    while (k < D && ++i[k] == counts[k]) i[k++] = 0;
  }
  return p;
}

// The field's own core box is the macro domain from here on; for grid-backed
// fields it may differ from the configured bounds.
template <int D>
inline TwoScaleCoefficient<D> make_extension(const PipelineConfig& c) {
  const double margin = c.margin > 0.0 ? c.margin : 0.5 * c.eps_bar;
  const Box<D> omega = make_box<D>(c);
  MicroCoefficient<D> field = make_field<D>(c, omega, margin);
  const ExtKind kind = parse_ext_kind(c.extension);
  std::optional<Partition<D>> part;
  if (kind == ExtKind::discrete && c.partition_n > 0)
    part = make_partition<D>(c, field.omega, field.omega_tilde);
  return build_extension<D>(kind, field, c.eps_bar, part);
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
}

template <int D>
inline std::string point_header() {
  std::string h;
  for (int k = 0; k < D; ++k) h += "x" + std::to_string(k) + ",";
  return h;
}

template <int D>
inline std::string solution_csv(const Solution<D>& u) {
  std::string out = point_header<D>() + "u\n";
  std::array<int, D> i{};
  for (std::size_t flat = 0; flat < u.values.size(); ++flat) {
    Vec<D> x = u.mesh.node(i);
    for (int k = 0; k < D; ++k) out += format_double(x[k]) + ",";
    out += format_double(u.values[flat]) + "\n";
    int k = 0;
    while (k < D && ++i[k] == u.mesh.nodes(k)) i[k++] = 0;
  }
  return out;
}

template <int D>
inline std::string tensor_csv(const Mesh<D>& mesh,
                              const std::function<Mat<D>(const Vec<D>&)>& a) {
  std::string out = point_header<D>();
  if constexpr (D == 1) out += "a\n";
  else out += "a00,a01,a11\n";
  std::array<int, D> i{};
  const std::size_t total = mesh.node_count();
  for (std::size_t flat = 0; flat < total; ++flat) {
    Vec<D> x = mesh.node(i);
    Mat<D> v = a(x);
    for (int k = 0; k < D; ++k) out += format_double(x[k]) + ",";
    if constexpr (D == 1) {
      out += format_double(v(0, 0)) + "\n";
    } else {
      out += format_double(v(0, 0)) + "," + format_double(v(0, 1)) + "," +
             format_double(v(1, 1)) + "\n";
    }
    int k = 0;
    while (k < D && ++i[k] == mesh.nodes(k)) i[k++] = 0;
  }
  return out;
}

inline std::string plot_script(bool corrected, bool baseline) {
  std::string s;
  s += "set datafile separator comma\n";
  s += "set key left top\n";
  s += "set xlabel 'x'\n";
  s += "set ylabel 'u'\n";
  s += "plot 'u_fine.csv' using 1:2 with lines title 'fine', \\\n";
  s += "     'u0.csv' using 1:2 with lines title 'upscaled'";
  if (corrected)
    s += ", \\\n     'u0_corrected.csv' using 1:2 with lines title 'corrected'";
  if (baseline)
    s += ", \\\n     'u0_baseline.csv' using 1:2 with lines title 'mean baseline'";
  s += "\n";
  return s;
}

// Stage into a sibling directory, then swap it in. Readers never observe a
// half-written output directory.
class OutputStager {
 public:
  explicit OutputStager(const std::string& out_dir)
      : final_(out_dir), staging_(out_dir + ".staging") {
    std::filesystem::remove_all(staging_);
    std::filesystem::create_directories(staging_);
  }

  const std::filesystem::path& dir() const { return staging_; }

  void add(const std::string& name, const std::string& content) {
    write_text_file(staging_ / name, content);
  }

  void commit() {
    std::filesystem::remove_all(final_);
    std::filesystem::rename(staging_, final_);
  }

  void fail(const std::string& message) {
    std::filesystem::remove_all(staging_);
    std::filesystem::create_directories(staging_);
    write_text_file(staging_ / "FAILED", message + "\n");
    write_text_file(staging_ / "run.log", message + "\n");
    commit();
  }

 private:
  std::filesystem::path final_;
  std::filesystem::path staging_;
};

}  // namespace detail

template <int D>
inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
  validate_config(cfg);
  if (cfg.d != D) throw ConfigError("config dimension does not match the runner");

  detail::OutputStager stager(cfg.output);
  try {
    PipelineResult res;
    res.dir = cfg.output;

    TwoScaleCoefficient<D> ext = detail::make_extension<D>(cfg);
    const MicroCoefficient<D>& field = ext.field;
    const Box<D>& omega = ext.omega();
    const ExtKind kind = ext.kind;

    const double spacing =
        cfg.sample_spacing > 0.0 ? cfg.sample_spacing : 0.5 * cfg.eps_bar;
    const UnitCellMesh<D> cellmesh{cfg.cell_n};

    // Averaged coefficient plus the cell solutions feeding the corrector.
    AveragedCoefficientField<D> Af;
    CellSolutionLattice<D> lat;
    std::vector<CellSolution<D>> part_sols;
    CellProvider<D> provider;
    if (kind == ExtKind::trivial) {
      Af = micro_field(ext);
    } else if (kind == ExtKind::continuous) {
      lat = solve_cell_lattice(ext, spacing, cellmesh, cfg.cell_tol);
      Af = averaged_field_from_lattice(lat, ext);
      provider = lattice_provider(lat);
    } else {
      const Partition<D>& p = ext.partition;
      part_sols.resize(p.size());
      Af.mode = AveragedCoefficientField<D>::Mode::piecewise_constant;
      Af.omega = ext.omega();
      Af.partition = std::make_shared<Partition<D>>(p);
      Af.cell_values.resize(p.size());
      parallel_for(p.size(), [&](std::size_t j) {
        part_sols[j] = solve_cell(ext, p.centers[j], cellmesh, cfg.cell_tol);
        Af.cell_values[j] = averaged_tensor(part_sols[j], ext, p.centers[j]).A;
      });
      const TwoScaleCoefficient<D>* extp = &ext;
      const std::vector<CellSolution<D>>* solsp = &part_sols;
      provider = [extp, solsp](const Vec<D>& x) {
        return &(*solsp)[extp->partition.locate(x)];
      };
    }
    for (const std::string& w : Af.warnings) res.warnings.push_back(w);

    std::optional<AveragedCoefficientField<D>> Bf;
    if (cfg.baseline == "arithmetic")
      Bf = sample_mean_field(ext, spacing, 64);

    auto f = detail::make_source<D>(cfg, omega);

    // Fine and upscaled solves on a shared mesh.
    Solution<D> u, u0, u0b;
    if constexpr (D == 1) {
      auto a_fine = [&field](double s) {
        return detail::iso_value(field.eval_clamped(Vec<1>{s}), "pipeline");
      };
      auto f1 = [&f](double s) { return f(Vec<1>{s}); };
      u = solve_fine_1d(a_fine, f1, omega, cfg.quad_n);
      auto a0 = [&Af](double s) {
        return detail::iso_value(Af.eval(Vec<1>{s}), "pipeline");
      };
      u0 = solve_fine_1d(a0, f1, omega, cfg.quad_n);
      if (Bf) {
        auto ab = [&Bf](double s) {
          return detail::iso_value(Bf->eval(Vec<1>{s}), "pipeline");
        };
        u0b = solve_fine_1d(ab, f1, omega, cfg.quad_n);
      }
    } else {
      Mesh<D> mesh;
      mesh.box = omega;
      for (int k = 0; k < D; ++k) {
        int want = cfg.mesh_n > 0
                       ? cfg.mesh_n
                       : static_cast<int>(std::ceil(omega.side(k) * 8.0 / cfg.eps_bar));
        mesh.n[k] = std::min(512, std::max(32, want));
      }
      DirichletProblem<D> fine;
      fine.omega = omega;
      fine.coefficient = [&field](const Vec<D>& x) { return field.eval_clamped(x); };
      fine.source = f;
      fine.oscillation_scale = cfg.eps_bar;
      u = solve_fd(fine, mesh, cfg.cell_tol);

      DirichletProblem<D> up;
      up.omega = omega;
      up.coefficient = Af.evaluator();
      up.source = f;
      u0 = solve_fd(up, mesh, cfg.cell_tol);
      if (Bf) {
        DirichletProblem<D> bp;
        bp.omega = omega;
        bp.coefficient = Bf->evaluator();
        bp.source = f;
        u0b = solve_fd(bp, mesh, cfg.cell_tol);
      }
      for (const std::string& w : u.warnings) res.warnings.push_back(w);
    }

    // u1 falls back to u0 when the correctors vanish (do-nothing kind) or the
    // reconstruction is switched off.
    Solution<D> u1 = u0;
    if (cfg.with_corrector && provider) {
      res.has_corrected = true;
      u1 = corrector(u0, provider, cfg.eps_bar);
    }

    res.u0_error = error_norms(u, u0);
    res.corrected_error = error_norms(u, u1);
    if (Bf) {
      res.has_baseline = true;
      res.baseline_error = error_norms(u, u0b);
    }

    // Artifacts.
    stager.add("config.txt", write_config(cfg));
    auto field_eval = [&field](const Vec<D>& x) { return field.eval_clamped(x); };
    stager.add("field.csv",
               detail::tensor_csv<D>(u.mesh, field_eval));
    auto a_eval = [&Af](const Vec<D>& x) { return Af.eval(x); };
    stager.add("averaged.csv", detail::tensor_csv<D>(u.mesh, a_eval));
    stager.add("u_fine.csv", detail::solution_csv(u));
    stager.add("u0.csv", detail::solution_csv(u0));
    stager.add("u0_corrected.csv", detail::solution_csv(u1));
    if (Bf) stager.add("u0_baseline.csv", detail::solution_csv(u0b));

    StudyReport rep;
    rep.name = "pipeline error report";
    rep.notes.push_back(
        "value = distance to the fine solution; rows: u0 l2, u0 h1, corrected l2, "
        "corrected h1" +
        std::string(res.has_baseline ? ", baseline l2, baseline h1" : ""));
    for (const std::string& w : res.warnings) rep.notes.push_back("warning: " + w);
    rep.rows.push_back({cfg.eps_bar, res.u0_error.l2, 0.0, res.u0_error.l2});
    rep.rows.push_back({cfg.eps_bar, res.u0_error.h1, 0.0, res.u0_error.h1});
    rep.rows.push_back(
        {cfg.eps_bar, res.corrected_error.l2, 0.0, res.corrected_error.l2});
    rep.rows.push_back(
        {cfg.eps_bar, res.corrected_error.h1, 0.0, res.corrected_error.h1});
    if (res.has_baseline) {
      rep.rows.push_back(
          {cfg.eps_bar, res.baseline_error.l2, 0.0, res.baseline_error.l2});
      rep.rows.push_back(
          {cfg.eps_bar, res.baseline_error.h1, 0.0, res.baseline_error.h1});
    }
    stager.add("report.csv", rep.csv());
    stager.add("plot.gp", detail::plot_script(true, res.has_baseline));
    stager.commit();
    return res;
  } catch (const std::exception& e) {
    stager.fail(e.what());
    throw;
  }
}

}  // namespace homog
