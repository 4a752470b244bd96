#pragma once

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "homog/common.hpp"

namespace homog {

// Flat `key = value` configuration with '#' comments. Unknown keys are
// rejected so typos never silently fall back to defaults. Zero means "pick
// automatically" for margin, partition_n, sample_spacing, mesh.n and
// study.rhs_n.
struct PipelineConfig {
  int d = 1;
  std::vector<double> omega_bounds;  // d lower bounds then d upper; empty = unit box
  double margin = 0.0;               // 0 = eps_bar / 2
  double eps_bar = 0.1;
  std::string extension = "continuous";
  int partition_n = 0;

  std::string field_kind = "sinusoid";
  double field_value = 1.0;
  double field_mean = 2.0;
  double field_amplitude = 1.0;
  double field_period = 0.1;
  double field_a1 = 1.0;
  double field_a2 = 4.0;
  double field_tile = 0.05;
  double field_min = 1.0;
  double field_max = 10.0;
  double field_cell = 0.0125;
  std::string field_path;

  unsigned long long seed = 0;
  int cell_n = 128;
  double cell_tol = 1e-10;
  int quad_n = 4096;
  double sample_spacing = 0.0;  // 0 = eps_bar / 2
  double seq_ratio = 0.5;
  int seq_count = 7;
  int mesh_n = 0;
  int mesh_cells_per_eps = 8;
  std::string source_kind = "sine-10";
  double source_value = 1.0;
  int study_rhs_n = 0;
  std::string phi = "one";
  int power = 1;
  std::string baseline = "none";
  std::string output = "out";
  bool with_corrector = true;

  bool operator==(const PipelineConfig&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double parse_double_value(const std::string& key, const std::string& v) {
  char* end = nullptr;
  double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError("key '" + key + "': cannot parse '" + v + "' as a number");
  return x;
}

inline int parse_int_value(const std::string& key, const std::string& v) {
  char* end = nullptr;
  long x = std::strtol(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError("key '" + key + "': cannot parse '" + v + "' as an integer");
  return static_cast<int>(x);
}

inline unsigned long long parse_seed_value(const std::string& key,
                                           const std::string& v) {
  char* end = nullptr;
  unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError("key '" + key + "': cannot parse '" + v + "' as an integer");
  return x;
}

inline bool parse_bool_value(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ConfigError("key '" + key + "': expected 0/1/true/false, got '" + v + "'");
}

inline std::vector<double> parse_number_list(const std::string& key,
                                             const std::string& v) {
  std::vector<double> out;
  std::istringstream in(v);
  std::string tok;
  while (in >> tok) out.push_back(parse_double_value(key, tok));
  return out;
}

}  // namespace detail

inline void config_set(PipelineConfig& c, const std::string& key,
                       const std::string& value) {
  using detail::parse_bool_value;
  using detail::parse_double_value;
  using detail::parse_int_value;
  using detail::parse_number_list;
  using detail::parse_seed_value;

  if (key == "d") c.d = parse_int_value(key, value);
  else if (key == "omega") c.omega_bounds = parse_number_list(key, value);
  else if (key == "margin") c.margin = parse_double_value(key, value);
  else if (key == "eps_bar") c.eps_bar = parse_double_value(key, value);
  else if (key == "extension") c.extension = value;
  else if (key == "partition_n") c.partition_n = parse_int_value(key, value);
  else if (key == "field.kind") c.field_kind = value;
  else if (key == "field.value") c.field_value = parse_double_value(key, value);
  else if (key == "field.mean") c.field_mean = parse_double_value(key, value);
  else if (key == "field.amplitude") c.field_amplitude = parse_double_value(key, value);
  else if (key == "field.period") c.field_period = parse_double_value(key, value);
  else if (key == "field.a1") c.field_a1 = parse_double_value(key, value);
  else if (key == "field.a2") c.field_a2 = parse_double_value(key, value);
  else if (key == "field.tile") c.field_tile = parse_double_value(key, value);
  else if (key == "field.min") c.field_min = parse_double_value(key, value);
  else if (key == "field.max") c.field_max = parse_double_value(key, value);
  else if (key == "field.cell") c.field_cell = parse_double_value(key, value);
  else if (key == "field.path") c.field_path = value;
  else if (key == "seed") c.seed = parse_seed_value(key, value);
  else if (key == "cell.n") c.cell_n = parse_int_value(key, value);
  else if (key == "cell.tol") c.cell_tol = parse_double_value(key, value);
  else if (key == "quad_n") c.quad_n = parse_int_value(key, value);
  else if (key == "sample_spacing") c.sample_spacing = parse_double_value(key, value);
  else if (key == "seq.ratio") c.seq_ratio = parse_double_value(key, value);
  else if (key == "seq.count") c.seq_count = parse_int_value(key, value);
  else if (key == "mesh.n") c.mesh_n = parse_int_value(key, value);
  else if (key == "mesh.cells_per_eps")
    c.mesh_cells_per_eps = parse_int_value(key, value);
  else if (key == "source.kind") c.source_kind = value;
  else if (key == "source.value") c.source_value = parse_double_value(key, value);
  else if (key == "study.rhs_n") c.study_rhs_n = parse_int_value(key, value);
  else if (key == "phi") c.phi = value;
  else if (key == "power") c.power = parse_int_value(key, value);
  else if (key == "baseline") c.baseline = value;
  else if (key == "output") c.output = value;
  else if (key == "corrector") c.with_corrector = parse_bool_value(key, value);
  else throw ConfigError("unknown key '" + key + "'");
}

inline PipelineConfig parse_config(const std::string& text) {
  PipelineConfig c;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected 'key = value', got '" + line + "'");
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    try {
      config_set(c, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

inline PipelineConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

inline void validate_config(const PipelineConfig& c) {
  if (c.d != 1 && c.d != 2) throw ConfigError("d must be 1 or 2");
  if (!c.omega_bounds.empty() &&
      c.omega_bounds.size() != static_cast<std::size_t>(2 * c.d))
    throw ConfigError("omega needs " + std::to_string(2 * c.d) +
                      " numbers (lower bounds then upper bounds)");
  for (int k = 0; k < c.d && !c.omega_bounds.empty(); ++k)
    if (!(c.omega_bounds[k] < c.omega_bounds[c.d + k]))
      throw ConfigError("omega bounds must satisfy lower < upper");
  if (!(c.eps_bar > 0.0)) throw ConfigError("eps_bar must be positive");
  if (c.margin < 0.0) throw ConfigError("margin must be nonnegative");
  if (c.extension != "trivial" && c.extension != "continuous" &&
      c.extension != "discrete")
    throw ConfigError("extension must be trivial, continuous or discrete");
  if (c.partition_n < 0) throw ConfigError("partition_n must be nonnegative");
  if (c.field_kind != "constant" && c.field_kind != "layered" &&
      c.field_kind != "sinusoid" && c.field_kind != "checkerboard" &&
      c.field_kind != "laminate" && c.field_kind != "random" &&
      c.field_kind != "grid-file")
    throw ConfigError("field.kind '" + c.field_kind + "' is not recognized");
  if (c.field_kind == "grid-file" && c.field_path.empty())
    throw ConfigError("field.kind = grid-file needs field.path");
  if (c.cell_n < 2) throw ConfigError("cell.n must be at least 2");
  if (!(c.cell_tol > 0.0)) throw ConfigError("cell.tol must be positive");
  if (c.quad_n < 2) throw ConfigError("quad_n must be at least 2");
  if (c.sample_spacing < 0.0) throw ConfigError("sample_spacing must be nonnegative");
  if (!(c.seq_ratio > 0.0 && c.seq_ratio < 1.0))
    throw ConfigError("seq.ratio must lie strictly between 0 and 1");
  if (c.seq_count < 1) throw ConfigError("seq.count must be positive");
  if (c.mesh_n < 0) throw ConfigError("mesh.n must be nonnegative");
  if (c.mesh_cells_per_eps < 1) throw ConfigError("mesh.cells_per_eps must be positive");
  if (c.source_kind != "sine-10" && c.source_kind != "constant" &&
      c.source_kind != "sine-pi")
    throw ConfigError("source.kind must be sine-10, constant or sine-pi");
  if (c.study_rhs_n < 0) throw ConfigError("study.rhs_n must be nonnegative");
  if (c.phi != "one" && c.phi != "x-cos")
    throw ConfigError("phi must be one or x-cos");
  if (c.power < 1) throw ConfigError("power must be at least 1");
  if (c.baseline != "none" && c.baseline != "arithmetic")
    throw ConfigError("baseline must be none or arithmetic");
  if (c.output.empty()) throw ConfigError("output must not be empty");
}

// Canonical text form; parse_config(write_config(c)) == c.
inline std::string write_config(const PipelineConfig& c) {
  std::ostringstream out;
  auto num = [&](const char* key, double v) {
    out << key << " = " << format_double(v) << "\n";
  };
  out << "d = " << c.d << "\n";
  if (!c.omega_bounds.empty()) {
    out << "omega =";
    for (double v : c.omega_bounds) out << " " << format_double(v);
    out << "\n";
  }
  num("margin", c.margin);
  num("eps_bar", c.eps_bar);
  out << "extension = " << c.extension << "\n";
  out << "partition_n = " << c.partition_n << "\n";
  out << "field.kind = " << c.field_kind << "\n";
  num("field.value", c.field_value);
  num("field.mean", c.field_mean);
  num("field.amplitude", c.field_amplitude);
  num("field.period", c.field_period);
  num("field.a1", c.field_a1);
  num("field.a2", c.field_a2);
  num("field.tile", c.field_tile);
  num("field.min", c.field_min);
  num("field.max", c.field_max);
  num("field.cell", c.field_cell);
  if (!c.field_path.empty()) out << "field.path = " << c.field_path << "\n";
  out << "seed = " << c.seed << "\n";
  out << "cell.n = " << c.cell_n << "\n";
  num("cell.tol", c.cell_tol);
  out << "quad_n = " << c.quad_n << "\n";
  num("sample_spacing", c.sample_spacing);
  num("seq.ratio", c.seq_ratio);
  out << "seq.count = " << c.seq_count << "\n";
  out << "mesh.n = " << c.mesh_n << "\n";
  out << "mesh.cells_per_eps = " << c.mesh_cells_per_eps << "\n";
  out << "source.kind = " << c.source_kind << "\n";
  num("source.value", c.source_value);
  out << "study.rhs_n = " << c.study_rhs_n << "\n";
  out << "phi = " << c.phi << "\n";
  out << "power = " << c.power << "\n";
  out << "baseline = " << c.baseline << "\n";
  out << "output = " << c.output << "\n";
  out << "corrector = " << (c.with_corrector ? 1 : 0) << "\n";
  return out.str();
}

}  // namespace homog
