#include "theta_lab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "theta_lab/errors.hpp"
#include "theta_lab/parallel.hpp"

namespace theta_lab {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

json parse_scalar(const std::string& raw, const std::string& key, int line) {
  const std::string v = trim(raw);
  if (v.empty()) throw ConfigError(key, "missing value", line);
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') throw ConfigError(key, "unterminated string", line);
    return v.substr(1, v.size() - 2);
  }
  if (v == "true") return true;
  if (v == "false") return false;
  std::size_t used = 0;
  try {
    if (v.find_first_of(".eE") == std::string::npos || v.find("inf") != std::string::npos) {
      const long long i = std::stoll(v, &used);
      if (used == v.size()) return i;
    }
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError(key, "cannot parse value '" + v + "'", line);
}

// Flat key = value text into a JSON object plus the line of every key.
json parse_flat(const std::string& text, std::map<std::string, int>& lines) {
  json out = json::object();
  std::istringstream is(text);
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') throw ConfigError("", "tables are not supported; use flat keys", number);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("", "expected 'key = value'", number);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("", "empty key", number);
    if (out.contains(key)) throw ConfigError(key, "duplicate key", number);
    if (!value.empty() && value.front() == '[') {
      if (value.back() != ']') throw ConfigError(key, "unterminated list", number);
      json arr = json::array();
      std::stringstream items(value.substr(1, value.size() - 2));
      for (std::string item; std::getline(items, item, ',');) {
        if (trim(item).empty()) continue;
        arr.push_back(parse_scalar(item, key, number));
      }
      out[key] = arr;
    } else {
      out[key] = parse_scalar(value, key, number);
    }
    lines[key] = number;
  }
  return out;
}

ExperimentConfig from_object(const json& j, const std::map<std::string, int>& lines) {
  auto line_of = [&](const std::string& key) {
    const auto it = lines.find(key);
    return it == lines.end() ? 0 : it->second;
  };
  static const std::vector<std::string> known = {
      "schema_version", "n", "omega", "family", "k_list", "quadrature_grid", "amoeba_grid", "fiber_grid",
      "metric_grid", "eps", "delta_policy", "output_dir", "seed", "stencil_radius", "knn"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError(key, "unknown key", line_of(key));
    }
  }
  for (const char* key : {"schema_version", "n", "omega", "family", "k_list"}) {
    if (!j.contains(key)) throw ConfigError(key, "required key is missing");
  }
  auto get_int = [&](const std::string& key) -> long long {
    const json& v = j.at(key);
    if (!v.is_number_integer()) throw ConfigError(key, "expected an integer", line_of(key));
    return v.get<long long>();
  };
  auto get_number = [&](const std::string& key) -> double {
    const json& v = j.at(key);
    if (!v.is_number()) throw ConfigError(key, "expected a number", line_of(key));
    return v.get<double>();
  };
  auto get_string = [&](const std::string& key) -> std::string {
    const json& v = j.at(key);
    if (!v.is_string()) throw ConfigError(key, "expected a string", line_of(key));
    return v.get<std::string>();
  };

  ExperimentConfig cfg;
  cfg.schema_version = static_cast<int>(get_int("schema_version"));
  if (cfg.schema_version != 1) {
    throw ConfigError("schema_version", "unsupported schema version " + std::to_string(cfg.schema_version),
                      line_of("schema_version"));
  }
  cfg.n = static_cast<int>(get_int("n"));
  if (cfg.n < 1 || cfg.n > 4) throw ConfigError("n", "dimension must be between 1 and 4", line_of("n"));

  const json& om = j.at("omega");
  if (!om.is_array() || om.size() != static_cast<std::size_t>(2 * cfg.n * cfg.n)) {
    throw ConfigError("omega", "expected " + std::to_string(2 * cfg.n * cfg.n) +
                                   " numbers (row-major re, im pairs)", line_of("omega"));
  }
  cfg.omega.resize(cfg.n, cfg.n);
  for (int r = 0; r < cfg.n; ++r) {
    for (int c = 0; c < cfg.n; ++c) {
      const std::size_t at = 2 * static_cast<std::size_t>(r * cfg.n + c);
      if (!om[at].is_number() || !om[at + 1].is_number()) {
        throw ConfigError("omega", "entries must be numbers", line_of("omega"));
      }
      cfg.omega(r, c) = Complex(om[at].get<double>(), om[at + 1].get<double>());
    }
  }

  try {
    cfg.family = parse_family(get_string("family"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("family", e.what(), line_of("family"));
  }

  const json& ks = j.at("k_list");
  if (!ks.is_array()) throw ConfigError("k_list", "expected a list of integers", line_of("k_list"));
  for (const auto& k : ks) {
    if (!k.is_number_integer()) throw ConfigError("k_list", "expected a list of integers", line_of("k_list"));
    cfg.k_list.push_back(k.get<int>());
  }

  cfg.quadrature_grid = cfg.n == 1 ? 256 : 24;
  cfg.amoeba_grid = cfg.n == 1 ? 64 : 10;
  cfg.fiber_grid = cfg.n == 1 ? 256 : 32;
  cfg.metric_grid = cfg.n == 1 ? 32 : 12;
  if (j.contains("quadrature_grid")) cfg.quadrature_grid = static_cast<int>(get_int("quadrature_grid"));
  if (j.contains("amoeba_grid")) cfg.amoeba_grid = static_cast<int>(get_int("amoeba_grid"));
  if (j.contains("fiber_grid")) cfg.fiber_grid = static_cast<int>(get_int("fiber_grid"));
  if (j.contains("metric_grid")) cfg.metric_grid = static_cast<int>(get_int("metric_grid"));
  if (j.contains("eps")) cfg.eps = get_number("eps");
  if (j.contains("output_dir")) cfg.output_dir = get_string("output_dir");
  if (j.contains("seed")) {
    const long long s = get_int("seed");
    if (s < 0) throw ConfigError("seed", "seed must be nonnegative", line_of("seed"));
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  if (j.contains("stencil_radius")) cfg.stencil_radius = static_cast<int>(get_int("stencil_radius"));
  if (j.contains("knn")) cfg.knn = static_cast<int>(get_int("knn"));
  if (j.contains("delta_policy")) {
    const json& d = j.at("delta_policy");
    if (d.is_number()) {
      cfg.delta = {false, d.get<double>()};
    } else if (d.is_string()) {
      const std::string s = d.get<std::string>();
      if (s == "fitted") {
        cfg.delta = {true, 0.0};
      } else if (s.rfind("fixed(", 0) == 0 && s.back() == ')') {
        try {
          cfg.delta = {false, std::stod(s.substr(6, s.size() - 7))};
        } catch (const std::exception&) {
          throw ConfigError("delta_policy", "cannot parse '" + s + "'", line_of("delta_policy"));
        }
      } else {
        throw ConfigError("delta_policy", "expected \"fitted\" or \"fixed(<value>)\"", line_of("delta_policy"));
      }
    } else {
      throw ConfigError("delta_policy", "expected \"fitted\" or \"fixed(<value>)\"", line_of("delta_policy"));
    }
  }

  try {
    validate_config(cfg);
  } catch (const ConfigError& e) {
    if (e.line() == 0 && line_of(e.field()) != 0) {
      throw ConfigError(e.field(), std::string(e.what()).substr(std::string(e.what()).find(": ") + 2),
                        line_of(e.field()));
    }
    throw;
  }
  return cfg;
}

double bits_to_unit(std::uint64_t r) { return static_cast<double>(r >> 11) * 0x1.0p-53; }

json metric_json(const ComplexMatrix& g) {
  json rows = json::array();
  for (int r = 0; r < g.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < g.cols(); ++c) row.push_back({g(r, c).real(), g(r, c).imag()});
    rows.push_back(row);
  }
  return rows;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

double gram_error(const ExperimentConfig& cfg, const Embedding& e) {
  ComplexMatrix G;
  if (auto* s = e.section_basis()) G = gram_matrix(*s, cfg.quadrature_grid, GridCheck::ignore);
  else G = kummer_gram_matrix(*e.invariant_basis(), cfg.quadrature_grid, GridCheck::ignore);
  return (G - ComplexMatrix::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
}

struct BergmanStats {
  double mean = 0.0;
  double max_rel_dev = 0.0;
};

BergmanStats bergman_stats(const ExperimentConfig& cfg, const Embedding& e) {
  const TorusGrid grid(cfg.n, cfg.metric_grid);
  const auto rho = parallel_map<double>(grid.size(), [&](std::size_t i) {
    return e.norm_factor() * e.evaluate(AbelianPoint{grid.x(i), grid.y(i)}).values.squaredNorm();
  });
  BergmanStats s;
  for (double v : rho) s.mean += v;
  s.mean /= static_cast<double>(rho.size());
  for (double v : rho) s.max_rel_dev = std::max(s.max_rel_dev, std::abs(v / s.mean - 1.0));
  return s;
}

struct MetricStats {
  double far_c0 = 0.0;
  double u_c0 = 0.0;
  double u_c1 = 0.0;
  double near_c0 = 0.0;
  double radius = 0.0;
  std::size_t u_points = 0;
  std::size_t near_points = 0;
};

MetricStats metric_stats(const Embedding& e, const ErrorField& field, const RegionDecomposition& regions) {
  MetricStats m;
  m.radius = regions.radius;
  for (std::size_t i = 0; i < field.samples.size(); ++i) {
    const auto& s = field.samples[i];
    if (regions.in_u(i)) {
      m.u_c0 = std::max(m.u_c0, s.err_c0);
      m.u_c1 = std::max(m.u_c1, s.err_c1);
      ++m.u_points;
    } else {
      m.near_c0 = std::max(m.near_c0, s.err_c0);
      ++m.near_points;
    }
  }
  // On A every point is regular, so the whole torus is far field.
  if (e.family() == Family::abelian) {
    for (const auto& s : field.samples) m.far_c0 = std::max(m.far_c0, s.err_c0);
  } else {
    m.far_c0 = m.u_c0;
  }
  return m;
}

RealVector generic_base_point(const ExperimentConfig& cfg, std::uint64_t stream) {
  // Keep clear of the half-lattice so the fibre is a generic one.
  RealVector y = seeded_points(cfg, 1, stream).front().y;
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = 0.05 + 0.4 * y(i);
  return y;
}

double deviation_over_cloud(const Embedding& e, const AmoebaCloud& cloud) {
  const auto dev = parallel_map<double>(cloud.sources.size(), [&](std::size_t i) {
    return simplex_distance(e.level(), phi_k(e, cloud.sources[i].y).xi, cloud.images[i].xi);
  });
  return dev.empty() ? 0.0 : *std::max_element(dev.begin(), dev.end());
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  std::map<std::string, int> lines;
  if (first != std::string::npos && text[first] == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError("", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("", "JSON config must be an object");
    return from_object(j, lines);
  }
  const json j = parse_flat(text, lines);
  return from_object(j, lines);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.schema_version != 1) throw ConfigError("schema_version", "unsupported schema version");
  if (cfg.omega.rows() != cfg.n || cfg.omega.cols() != cfg.n) throw ConfigError("omega", "shape does not match n");
  try {
    validate_period_matrix(cfg.omega);
  } catch (const Error& e) {
    throw ConfigError("omega", e.what());
  }
  if (cfg.k_list.empty()) throw ConfigError("k_list", "must not be empty");
  for (std::size_t i = 0; i < cfg.k_list.size(); ++i) {
    if (cfg.k_list[i] < 1) throw ConfigError("k_list", "levels must be >= 1");
    if (i > 0 && cfg.k_list[i] <= cfg.k_list[i - 1]) throw ConfigError("k_list", "levels must be strictly ascending");
  }
  const std::pair<const char*, int> grids[] = {{"quadrature_grid", cfg.quadrature_grid},
                                               {"amoeba_grid", cfg.amoeba_grid},
                                               {"fiber_grid", cfg.fiber_grid},
                                               {"metric_grid", cfg.metric_grid}};
  for (const auto& [name, value] : grids) {
    if (value < 8) throw ConfigError(name, "grids need at least 8 nodes per dimension");
  }
  if (!(cfg.eps > 0.0)) throw ConfigError("eps", "must be positive");
  if (!cfg.delta.fitted && !(cfg.delta.value > 0.0)) throw ConfigError("delta_policy", "fixed delta must be positive");
  if (cfg.output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
  if (cfg.stencil_radius < 1) throw ConfigError("stencil_radius", "must be >= 1");
  if (cfg.knn < 1) throw ConfigError("knn", "must be >= 1");
}

json config_to_json(const ExperimentConfig& cfg) {
  json omega = json::array();
  for (int r = 0; r < cfg.n; ++r)
    for (int c = 0; c < cfg.n; ++c) {
      omega.push_back(cfg.omega(r, c).real());
      omega.push_back(cfg.omega(r, c).imag());
    }
  return {{"schema_version", cfg.schema_version},
          {"n", cfg.n},
          {"omega", omega},
          {"family", to_string(cfg.family)},
          {"k_list", cfg.k_list},
          {"quadrature_grid", cfg.quadrature_grid},
          {"amoeba_grid", cfg.amoeba_grid},
          {"fiber_grid", cfg.fiber_grid},
          {"metric_grid", cfg.metric_grid},
          {"eps", cfg.eps},
          {"delta_policy", cfg.delta.fitted ? std::string("fitted") : "fixed(" + format_double(cfg.delta.value) + ")"},
          {"output_dir", cfg.output_dir},
          {"seed", cfg.seed},
          {"stencil_radius", cfg.stencil_radius},
          {"knn", cfg.knn}};
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t c = 0; c < columns.size(); ++c) out += (c ? "," : "") + columns[c];
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + format_double(row[c]);
    out += '\n';
  }
  return out;
}

json Table::to_json() const {
  json out = json::array();
  for (const auto& row : rows) {
    json obj = json::object();
    for (std::size_t c = 0; c < columns.size(); ++c) obj[columns[c]] = row[c];
    out.push_back(obj);
  }
  return out;
}

Table Table::from_csv(const std::string& text) {
  Table t;
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty CSV");
  std::stringstream header(line);
  for (std::string cell; std::getline(header, cell, ',');) t.columns.push_back(cell);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) row.push_back(std::strtod(cell.c_str(), nullptr));
    if (row.size() != t.columns.size()) throw std::runtime_error("CSV row has wrong width");
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table Table::from_json(const json& j) {
  Table t;
  if (!j.is_array()) throw std::runtime_error("table JSON must be an array");
  for (const auto& obj : j) {
    if (t.columns.empty()) {
      for (const auto& [key, _] : obj.items()) t.columns.push_back(key);
    }
    std::vector<double> row;
    for (const auto& c : t.columns) row.push_back(obj.at(c).get<double>());
    t.rows.push_back(std::move(row));
  }
  return t;
}

json to_json(const HausdorffApproxReport& r) {
  return {{"k", r.k},
          {"distortion", r.distortion},
          {"covering_radius", r.covering_radius},
          {"eps", r.eps},
          {"gh_upper", r.gh_upper},
          {"restriction_distortion", r.restriction_distortion},
          {"restriction_covering", r.restriction_covering},
          {"knn", r.knn}};
}

HausdorffApproxReport hausdorff_report_from_json(const json& j) {
  HausdorffApproxReport r;
  r.k = j.at("k").get<int>();
  r.distortion = j.at("distortion").get<double>();
  r.covering_radius = j.at("covering_radius").get<double>();
  r.eps = j.at("eps").get<double>();
  r.gh_upper = j.at("gh_upper").get<double>();
  r.restriction_distortion = j.at("restriction_distortion").get<double>();
  r.restriction_covering = j.at("restriction_covering").get<double>();
  r.knn = j.at("knn").get<int>();
  return r;
}

json to_json(const RateTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) rows.push_back({{"k", r.k}, {"value", r.value}, {"model_predictor", r.predictor}});
  return {{"model", to_string(t.model)},
          {"rows", rows},
          {"slope", t.slope},
          {"intercept", t.intercept},
          {"residuals", t.residuals},
          {"slope_log_k", t.slope_log_k},
          {"intercept_log_k", t.intercept_log_k}};
}

AbelianVariety make_variety(const ExperimentConfig& cfg) {
  return AbelianVariety(validate_period_matrix(cfg.omega));
}

Embedding make_embedding(const ExperimentConfig& cfg, int k) {
  TruncationPolicy pol;
  pol.eps = cfg.eps;
  return Embedding::make(make_variety(cfg), cfg.family, k, pol);
}

std::vector<AbelianPoint> seeded_points(const ExperimentConfig& cfg, std::size_t count, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::mt19937_64 rng(seq);
  std::vector<AbelianPoint> out;
  for (std::size_t i = 0; i < count; ++i) {
    AbelianPoint p{RealVector(cfg.n), RealVector(cfg.n)};
    for (int d = 0; d < cfg.n; ++d) p.x(d) = bits_to_unit(rng());
    for (int d = 0; d < cfg.n; ++d) p.y(d) = bits_to_unit(rng());
    out.push_back(p);
  }
  return out;
}

double resolve_delta(const ExperimentConfig& cfg) {
  if (!cfg.delta.fitted) return cfg.delta.value;
  const AbelianVariety A = make_variety(cfg);
  const int k0 = cfg.family == Family::abelian ? cfg.k_list.front() : 2 * cfg.k_list.front();
  TruncationPolicy pol;
  pol.eps = cfg.eps;
  const std::vector<SectionBasis> bases{SectionBasis(A, std::max(k0, 2), pol)};
  const TorusGrid grid(cfg.n, cfg.metric_grid);
  std::vector<AbelianPoint> samples;
  for (std::size_t i = 0; i < grid.size(); ++i) samples.push_back({grid.x(i), grid.y(i)});
  return 0.5 * gaussian_decay_check(bases, samples).c;
}

Table theta_eval_table(const ExperimentConfig& cfg, int k) {
  const AbelianVariety A = make_variety(cfg);
  TruncationPolicy pol;
  pol.eps = cfg.eps;
  const SectionBasis basis(A, k, pol);
  Table t;
  t.columns = {"point"};
  for (int i = 1; i <= cfg.n; ++i) t.columns.push_back("x" + std::to_string(i));
  for (int i = 1; i <= cfg.n; ++i) t.columns.push_back("y" + std::to_string(i));
  for (const char* c : {"section", "raw_re", "raw_im", "h_norm"}) t.columns.push_back(c);
  const auto points = seeded_points(cfg, 4, 11);
  for (std::size_t p = 0; p < points.size(); ++p) {
    const ComplexVector z = to_complex(A, points[p]);
    for (int s = 0; s < basis.size(); ++s) {
      const HermitianSectionValue v = section_value(basis, s, z);
      std::vector<double> row{static_cast<double>(p)};
      for (int i = 0; i < cfg.n; ++i) row.push_back(points[p].x(i));
      for (int i = 0; i < cfg.n; ++i) row.push_back(points[p].y(i));
      row.insert(row.end(), {static_cast<double>(s), v.raw.real(), v.raw.imag(), v.h_norm});
      t.rows.push_back(row);
    }
  }
  return t;
}

Table gram_table(const ExperimentConfig& cfg) {
  Table t{{"k", "size", "gram_max_error"}, {}};
  for (int k : cfg.k_list) {
    const Embedding e = make_embedding(cfg, k);
    t.rows.push_back({double(k), double(e.size()), gram_error(cfg, e)});
  }
  return t;
}

Table bergman_table(const ExperimentConfig& cfg) {
  Table t{{"k", "mean_density", "max_relative_deviation"}, {}};
  for (int k : cfg.k_list) {
    const BergmanStats s = bergman_stats(cfg, make_embedding(cfg, k));
    t.rows.push_back({double(k), s.mean, s.max_rel_dev});
  }
  return t;
}

Table metric_table(const ExperimentConfig& cfg) {
  const double delta = resolve_delta(cfg);
  Table t{{"k", "far_field_c0", "u_k_c0", "u_k_c1", "near_singular_c0", "region_radius", "delta"}, {}};
  for (int k : cfg.k_list) {
    const Embedding e = make_embedding(cfg, k);
    const ErrorField field = metric_error_field(e, cfg.metric_grid, 1);
    const RegionDecomposition regions =
        region_decomposition(e.variety(), e.metric_factor(), std::max(k, 2), delta, cfg.metric_grid);
    const MetricStats m = metric_stats(e, field, regions);
    t.rows.push_back({double(k), m.far_c0, m.u_c0, m.u_c1, m.near_c0, m.radius, delta});
  }
  return t;
}

Table gh_table(const ExperimentConfig& cfg) {
  Table t{{"k", "distortion", "covering_radius", "eps", "gh_upper", "restriction_distortion",
           "restriction_covering", "knn"},
          {}};
  for (int k : cfg.k_list) {
    const Embedding e = make_embedding(cfg, k);
    const HausdorffApproxReport r = distortion_report(e, base_samples(e, cfg.amoeba_grid),
                                                      amoeba_sample(e, cfg.amoeba_grid), {cfg.knn});
    t.rows.push_back({double(r.k), r.distortion, r.covering_radius, r.eps, r.gh_upper, r.restriction_distortion,
                      r.restriction_covering, double(r.knn)});
  }
  return t;
}

Table fiber_table(const ExperimentConfig& cfg) {
  Table t;
  t.columns = {"k"};
  for (int i = 1; i <= cfg.n; ++i) t.columns.push_back("y" + std::to_string(i));
  t.columns.insert(t.columns.end(), {"diameter", "diameter_sqrt_k"});
  const RealVector y = generic_base_point(cfg, 23);
  for (int k : cfg.k_list) {
    const double d = fiber_collapse(make_embedding(cfg, k), y, cfg.fiber_grid);
    std::vector<double> row{double(k)};
    for (int i = 0; i < cfg.n; ++i) row.push_back(y(i));
    row.insert(row.end(), {d, d * std::sqrt(double(k))});
    t.rows.push_back(row);
  }
  return t;
}

Table rate_table(const ExperimentConfig& cfg, RateModel model) {
  const Table gh = gh_table(cfg);
  std::vector<std::pair<double, double>> values;
  for (const auto& row : gh.rows) values.emplace_back(row[0], row[3]);
  const RateTable fit = rate_fit(values, model);
  Table t{{"k", "value", "model_predictor"}, {}};
  for (const auto& r : fit.rows) t.rows.push_back({r.k, r.value, r.predictor});
  return t;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const auto started = std::chrono::steady_clock::now();
  namespace fs = std::filesystem;
  const fs::path out_dir(cfg.output_dir);
  fs::create_directories(out_dir);

  json report;
  report["tool_version"] = kToolVersion;
  report["config"] = config_to_json(cfg);

  double delta = 0.0;
  std::string delta_error;
  try {
    delta = resolve_delta(cfg);
    report["delta"] = {{"policy", cfg.delta.fitted ? "fitted" : "fixed"}, {"value", delta}};
  } catch (const std::exception& e) {
    delta_error = e.what();
    report["delta"] = {{"policy", cfg.delta.fitted ? "fitted" : "fixed"}, {"error", delta_error}};
  }

  const auto generic = seeded_points(cfg, 1, 5).front();
  const RealVector fibre_y = generic_base_point(cfg, 23);

  RunResult result;
  json rows = json::array();
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  for (int k : cfg.k_list) {
    json row = {{"k", k}};
    try {
      if (!delta_error.empty()) throw Error("delta unavailable: " + delta_error);
      const Embedding e = make_embedding(cfg, k);
      const std::string tag = "k" + std::to_string(k);
      row["dimension"] = e.size();
      row["kummer_curve_case"] = cfg.family == Family::kummer && cfg.n == 1;
      row["gram_max_error"] = gram_error(cfg, e);

      const BergmanStats b = bergman_stats(cfg, e);
      row["bergman"] = {{"mean", b.mean}, {"max_relative_deviation", b.max_rel_dev}};

      const ComplexVector z = to_complex(e.variety(), generic);
      const MetricValue gz = pullback_metric(e, z, Scheme::analytic);
      const MetricValue gf = pullback_metric(e, z, Scheme::finite_difference);
      const ErrorField field = metric_error_field(e, cfg.metric_grid, 1);
      const RegionDecomposition regions =
          region_decomposition(e.variety(), e.metric_factor(), std::max(k, 2), delta, cfg.metric_grid);
      const MetricStats m = metric_stats(e, field, regions);
      row["metric"] = {{"generic_point_metric", metric_json(gz.g)},
                       {"scheme_gap", relative_difference(gf.g, gz.g)},
                       {"richardson_gap", richardson_gap(e, z)},
                       {"far_field_c0", m.far_c0},
                       {"u_k_c0", m.u_c0},
                       {"u_k_c1", m.u_c1},
                       {"near_singular_c0", m.near_c0},
                       {"region_radius", m.radius},
                       {"u_k_points", m.u_points},
                       {"near_points", m.near_points}};
      {
        std::ostringstream os;
        write_error_field_csv(os, field);
        write_text(out_dir / ("error_field_" + tag + ".csv"), os.str());
        std::ostringstream rs;
        write_regions_csv(rs, regions);
        write_text(out_dir / ("regions_" + tag + ".csv"), rs.str());
      }

      if (cfg.n == 1 && k >= 2) {
        const MetricField mf = pullback_field(e, cfg.metric_grid);
        const GridGraph graph(mf, cfg.stencil_radius);
        const AbelianPoint origin{RealVector::Zero(1), RealVector::Zero(1)};
        const double diam = ball_diameter(graph, mf, e.variety(), e.metric_factor(), origin, m.radius);
        row["singular_ball_diameter"] = {{"diameter", diam},
                                         {"ratio_to_sqrt_logk_over_k", diam / rate_predictor(RateModel::sqrt_logk_over_k, k)}};
      }

      const AmoebaCloud cloud = amoeba_sample(e, cfg.amoeba_grid);
      {
        std::ostringstream os;
        write_amoeba_csv(os, cloud);
        write_text(out_dir / ("amoeba_" + tag + ".csv"), os.str());
      }
      const HausdorffApproxReport gh = distortion_report(e, base_samples(e, cfg.amoeba_grid), cloud, {cfg.knn});
      row["hausdorff"] = to_json(gh);

      const double fibre = fiber_collapse(e, fibre_y, cfg.fiber_grid);
      const double deviation = deviation_over_cloud(e, cloud);
      const TangentLeaks leaks = tangent_distortion(e, z);
      row["fiber_collapse"] = {{"y", std::vector<double>(fibre_y.data(), fibre_y.data() + fibre_y.size())},
                               {"diameter", fibre}};
      row["map_deviation_sup"] = deviation;
      row["tangent"] = {{"vertical_leak", leaks.vertical_leak}, {"horizontal_leak", leaks.horizontal_leak}};
      row["status"] = "ok";

      series["eps"].emplace_back(k, gh.eps);
      series["map_deviation"].emplace_back(k, deviation);
      series["fiber_collapse"].emplace_back(k, fibre);
      series["far_field_c0"].emplace_back(k, m.far_c0);
      series["vertical_leak"].emplace_back(k, leaks.vertical_leak);
      ++result.ok_rows;
    } catch (const std::exception& ex) {
      row["status"] = "failed";
      row["error"] = ex.what();
      ++result.failed_rows;
    }
    rows.push_back(row);
  }
  report["rows"] = rows;

  const std::pair<const char*, RateModel> fits[] = {{"eps", RateModel::sqrt_logk_over_k},
                                                    {"map_deviation", RateModel::sqrt_logk_over_k},
                                                    {"fiber_collapse", RateModel::inv_sqrt_k},
                                                    {"far_field_c0", RateModel::inv_k},
                                                    {"vertical_leak", RateModel::inv_sqrt_k}};
  json rate = json::object();
  for (const auto& [name, model] : fits) {
    try {
      const RateTable t = rate_fit(series[name], model);
      rate[name] = to_json(t);
      std::ostringstream os;
      write_rate_csv(os, t);
      write_text(out_dir / (std::string("rate_") + name + ".csv"), os.str());
    } catch (const std::exception& ex) {
      rate[name] = {{"skipped", ex.what()}};
    }
  }
  report["rate_fits"] = rate;
  report["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_text(out_dir / "report.json", report.dump(2) + "\n");
  result.report = report;
  return result;
}

json strip_wall_clock(json report) {
  report.erase("wall_clock_seconds");
  return report;
}

}  // namespace theta_lab
