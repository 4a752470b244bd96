#pragma once

#include <algorithm>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "homog/lab.hpp"

namespace homog {

namespace detail {

struct CliArgs {
  std::string config;
  std::vector<std::string> sets;
  std::string out_dir;
  std::string at;
};

inline PipelineConfig load_cli_config(const CliArgs& a) {
  PipelineConfig cfg = parse_config_file(a.config);
  for (const std::string& kv : a.sets) {
    std::size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got '" + kv + "'");
    config_set(cfg, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  if (!a.out_dir.empty()) cfg.output = a.out_dir;
  validate_config(cfg);
  return cfg;
}

template <int D>
inline Vec<D> parse_probe(const std::string& text, const Box<D>& omega) {
  if (text.empty()) return omega.center();
  std::istringstream in(text);
  Vec<D> x;
  for (int k = 0; k < D; ++k)
    if (!(in >> x[k]))
      throw ConfigError("--at needs " + std::to_string(D) +
                        " space-separated coordinates, got '" + text + "'");
  std::string rest;
  if (in >> rest)
    throw ConfigError("--at has trailing text '" + rest + "'");
  return x;
}

template <int D>
inline void print_tensor(std::ostream& out, const Mat<D>& a) {
  for (int i = 0; i < D; ++i) {
    out << " ";
    for (int j = 0; j < D; ++j) out << " " << format_double(a(i, j));
    out << "\n";
  }
}

inline void print_report(std::ostream& out, const StudyReport& rep) {
  out << rep.name << "\n";
  for (const std::string& n : rep.notes) out << "  " << n << "\n";
  for (const StudyRow& r : rep.rows)
    out << "  eps = " << format_double(r.eps) << "  value = " << format_double(r.value)
        << "  deviation = " << format_double(r.deviation) << "\n";
  if (rep.rows.size() >= 2 && rep.rows.front().deviation != 0.0)
    out << "  deviation ratio last/first = "
        << format_double(rep.rows.back().deviation / rep.rows.front().deviation)
        << "\n";
}

template <int D>
inline AveragedCoefficientField<D> make_averaged_field(
    const TwoScaleCoefficient<D>& ext, const PipelineConfig& cfg) {
  const double spacing =
      cfg.sample_spacing > 0.0 ? cfg.sample_spacing : 0.5 * cfg.eps_bar;
  const UnitCellMesh<D> mesh{cfg.cell_n};
  if (ext.kind == ExtKind::trivial) return micro_field(ext);
  if (ext.kind == ExtKind::continuous)
    return sample_A_continuous(ext, spacing, mesh, cfg.cell_tol);
  return assemble_A_discrete(ext, mesh, cfg.cell_tol);
}

template <int D>
inline double l2_norm(const Solution<D>& u) {
  Solution<D> zero;
  zero.mesh = u.mesh;
  zero.values.assign(u.values.size(), 0.0);
  return error_norms(u, zero).l2;
}

template <int D>
inline int cmd_extend_check(const PipelineConfig& cfg, const CliArgs& args,
                            std::ostream& out) {
  (void)args;
  TwoScaleCoefficient<D> ext = make_extension<D>(cfg);
  const int count = 10000;
  double dev = verify_identity(ext, count, cfg.seed);
  out << "max |a(x, x/eps_bar) - a_M(x)| over " << count
      << " points = " << format_double(dev) << "\n";
  if (dev != 0.0) {
    out << "identity check FAILED (must be exactly zero)\n";
    return 1;
  }
  out << "identity holds exactly\n";
  return 0;
}

template <int D>
inline int cmd_cell(const PipelineConfig& cfg, const CliArgs& args,
                    std::ostream& out) {
  TwoScaleCoefficient<D> ext = make_extension<D>(cfg);
  Vec<D> x = parse_probe<D>(args.at, ext.omega());
  UnitCellMesh<D> mesh{cfg.cell_n};
  CellSolution<D> sol = solve_cell(ext, x, mesh, cfg.cell_tol);
  AveragedTensor<D> avg = averaged_tensor(sol, ext, x);
  out << "A(" << format_point(x) << ") =\n";
  print_tensor<D>(out, avg.A);
  out << "cell mesh n = " << cfg.cell_n << ", cg iterations = " << sol.iterations
      << ", flux residual = " << format_double(avg.residual) << "\n";
  int vq = D == 1 ? cfg.quad_n : std::min(cfg.quad_n, 512);
  auto [reuss, voigt] = voigt_reuss(ext.field, rev_window(ext, x), vq);
  out << "harmonic/arithmetic window means = " << format_double(reuss(0, 0))
      << " / " << format_double(voigt(0, 0)) << "\n";
  return 0;
}

template <int D>
inline int cmd_average(const PipelineConfig& cfg, const CliArgs& args,
                       std::ostream& out) {
  (void)args;
  TwoScaleCoefficient<D> ext = make_extension<D>(cfg);
  OutputStager stager(cfg.output);
  try {
    AveragedCoefficientField<D> Af = make_averaged_field(ext, cfg);
    for (const std::string& w : Af.warnings) out << "warning: " << w << "\n";
    Mesh<D> mesh;
    mesh.box = ext.omega();
    for (int k = 0; k < D; ++k) mesh.n[k] = cfg.mesh_n > 0 ? cfg.mesh_n : 256;
    auto a_eval = [&Af](const Vec<D>& x) { return Af.eval(x); };
    stager.add("config.txt", write_config(cfg));
    stager.add("averaged.csv", tensor_csv<D>(mesh, a_eval));
    stager.commit();
    Vec<D> c = ext.omega().center();
    out << "A(" << format_point(c) << ") =\n";
    print_tensor<D>(out, Af.eval(c));
    out << "wrote " << cfg.output << "/averaged.csv\n";
    return 0;
  } catch (const std::exception& e) {
    stager.fail(e.what());
    throw;
  }
}

template <int D>
inline int cmd_solve(const PipelineConfig& cfg, const CliArgs& args,
                     std::ostream& out) {
  (void)args;
  TwoScaleCoefficient<D> ext = make_extension<D>(cfg);
  const MicroCoefficient<D>& field = ext.field;
  const Box<D>& omega = ext.omega();
  auto f = make_source<D>(cfg, omega);
  OutputStager stager(cfg.output);
  try {
    Solution<D> u;
    if constexpr (D == 1) {
      auto a1 = [&field](double s) {
        return iso_value(field.eval_clamped(Vec<1>{s}), "solve");
      };
      auto f1 = [&f](double s) { return f(Vec<1>{s}); };
      u = solve_fine_1d(a1, f1, omega, cfg.quad_n);
    } else {
      Mesh<D> mesh;
      mesh.box = omega;
      for (int k = 0; k < D; ++k) {
        int want = cfg.mesh_n > 0
                       ? cfg.mesh_n
                       : static_cast<int>(std::ceil(omega.side(k) * 8.0 / cfg.eps_bar));
        mesh.n[k] = std::min(512, std::max(32, want));
      }
      DirichletProblem<D> prob;
      prob.omega = omega;
      prob.coefficient = [&field](const Vec<D>& x) { return field.eval_clamped(x); };
      prob.source = f;
      prob.oscillation_scale = cfg.eps_bar;
      u = solve_fd(prob, mesh, cfg.cell_tol);
    }
    for (const std::string& w : u.warnings) out << "warning: " << w << "\n";
    stager.add("config.txt", write_config(cfg));
    stager.add("u_fine.csv", solution_csv(u));
    stager.commit();
    out << "|u|_L2 = " << format_double(l2_norm(u)) << "\n";
    out << "solver residual = " << format_double(u.residual)
        << ", iterations = " << u.iterations << "\n";
    out << "wrote " << cfg.output << "/u_fine.csv\n";
    return 0;
  } catch (const std::exception& e) {
    stager.fail(e.what());
    throw;
  }
}

template <int D>
inline int cmd_atf_study(const PipelineConfig& cfg, const CliArgs& args,
                         std::ostream& out) {
  (void)args;
  TwoScaleCoefficient<D> ext = make_extension<D>(cfg);
  TwoScaleTestFn<D> phi = cfg.phi == "one" ? phi_one<D>() : phi_x_cos<D>();
  EpsSequence seq{cfg.eps_bar, cfg.seq_ratio, cfg.seq_count};
  int rhs_n = cfg.study_rhs_n > 0 ? cfg.study_rhs_n : (D == 1 ? 512 : 128);
  OutputStager stager(cfg.output);
  try {
    StudyReport rep = atf_study(ext, phi, cfg.power, seq, cfg.quad_n, rhs_n);
    stager.add("config.txt", write_config(cfg));
    stager.add("report.csv", rep.csv());
    stager.commit();
    print_report(out, rep);
    out << "wrote " << cfg.output << "/report.csv\n";
    return 0;
  } catch (const std::exception& e) {
    stager.fail(e.what());
    throw;
  }
}

template <int D>
inline int cmd_ueps_study(const PipelineConfig& cfg, const CliArgs& args,
                          std::ostream& out) {
  (void)args;
  if constexpr (D != 1) {
    throw ConfigError("ueps-study supports d = 1 only");
  } else {
    TwoScaleCoefficient<1> ext = make_extension<1>(cfg);
    AveragedCoefficientField<1> Af = make_averaged_field(ext, cfg);
    auto src = make_source<1>(cfg, ext.omega());
    auto f1 = [&src](double s) { return src(Vec<1>{s}); };
    EpsSequence seq{cfg.eps_bar, cfg.seq_ratio, cfg.seq_count};
    MeshRule rule;
    rule.cells_per_eps = cfg.mesh_cells_per_eps;
    OutputStager stager(cfg.output);
    try {
      StudyReport rep = u_eps_study(ext, Af, f1, seq, rule);
      stager.add("config.txt", write_config(cfg));
      stager.add("report.csv", rep.csv());
      stager.commit();
      print_report(out, rep);
      out << "wrote " << cfg.output << "/report.csv\n";
      return 0;
    } catch (const std::exception& e) {
      stager.fail(e.what());
      throw;
    }
  }
}

template <int D>
inline int cmd_pipeline(const PipelineConfig& cfg, const CliArgs& args,
                        std::ostream& out) {
  (void)args;
  PipelineResult res = run_pipeline<D>(cfg);
  for (const std::string& w : res.warnings) out << "warning: " << w << "\n";
  out << "|u0 - u|_L2 = " << format_double(res.u0_error.l2)
      << "  |u0 - u|_H1 = " << format_double(res.u0_error.h1) << "\n";
  out << "|u1 - u|_L2 = " << format_double(res.corrected_error.l2)
      << "  |u1 - u|_H1 = " << format_double(res.corrected_error.h1) << "\n";
  if (res.has_baseline)
    out << "|ub - u|_L2 = " << format_double(res.baseline_error.l2)
        << "  |ub - u|_H1 = " << format_double(res.baseline_error.h1) << "\n";
  out << "artifacts in " << res.dir << "\n";
  return 0;
}

using CliRunner = int (*)(const PipelineConfig&, const CliArgs&, std::ostream&);

struct CliCommand {
  const char* name;
  const char* help;
  CliRunner run1;
  CliRunner run2;
};

inline const std::vector<CliCommand>& cli_commands() {
  static const std::vector<CliCommand> cmds = {
      {"extend-check", "verify a(x, x/eps_bar) equals a_M(x) on sample points",
       &cmd_extend_check<1>, &cmd_extend_check<2>},
      {"cell", "solve one cell problem and print the averaged tensor",
       &cmd_cell<1>, &cmd_cell<2>},
      {"average", "assemble the averaged coefficient field, write averaged.csv",
       &cmd_average<1>, &cmd_average<2>},
      {"solve", "solve the fine-scale Dirichlet problem, write u_fine.csv",
       &cmd_solve<1>, &cmd_solve<2>},
      {"atf-study", "two-scale quadrature deviation study, write report.csv",
       &cmd_atf_study<1>, &cmd_atf_study<2>},
      {"ueps-study", "|u_eps - u0|_L2 study along the eps sequence (1D), write report.csv",
       &cmd_ueps_study<1>, &cmd_ueps_study<2>},
      {"pipeline", "end-to-end run, write all artifacts",
       &cmd_pipeline<1>, &cmd_pipeline<2>},
  };
  return cmds;
}

}  // namespace detail

// Entry point shared by the binary and the tests. `args` excludes the program
// name. Exit codes: 0 success, 1 numerical failure, 2 usage or config error.
inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"non-periodic coefficient averaging toolkit"};
  app.name("homog");
  app.require_subcommand(1);

  struct Bound {
    detail::CliArgs args;
    const detail::CliCommand* cmd;
    CLI::App* sub;
  };
  std::vector<Bound> bound;
  bound.reserve(detail::cli_commands().size());
  for (const detail::CliCommand& c : detail::cli_commands()) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    bound.push_back({{}, &c, sub});
    detail::CliArgs& a = bound.back().args;
    sub->add_option("config", a.config, "config file (key = value lines)")
        ->required();
    sub->add_option("--set", a.sets,
                    "override a config entry, key=value (repeatable)");
    sub->add_option("--out", a.out_dir,
                    "output directory (overrides the 'output' key)");
    if (std::string(c.name) == "cell")
      sub->add_option("--at", a.at, "probe point, e.g. \"0.5\" or \"0.25 0.75\"");
  }

  try {
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  for (Bound& b : bound) {
    if (!b.sub->parsed()) continue;
    try {
      PipelineConfig cfg = detail::load_cli_config(b.args);
      return cfg.d == 1 ? b.cmd->run1(cfg, b.args, out)
                        : b.cmd->run2(cfg, b.args, out);
    } catch (const ConfigError& e) {
      err << b.cmd->name << ": " << e.what() << "\n";
      return 2;
    } catch (const ParseError& e) {
      err << b.cmd->name << ": " << e.what() << "\n";
      return 2;
    } catch (const ParamError& e) {
      err << b.cmd->name << ": " << e.what() << "\n";
      return 2;
    } catch (const Error& e) {
      err << b.cmd->name << ": " << e.what() << "\n";
      return 1;
    } catch (const std::exception& e) {
      err << b.cmd->name << ": " << e.what() << "\n";
      return 1;
    }
  }
  err << "error: no subcommand given\n\n" << app.help();
  return 2;
}

}  // namespace homog
