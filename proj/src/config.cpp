#include "qdim/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "qdim/error.hpp"
#include "qdim/util.hpp"

namespace qdim {

namespace pt = boost::property_tree;

namespace {

[[noreturn]] void field_error(const std::string& source, const std::string& section, const std::string& key,
                              const std::string& msg) {
  throw ConfigError(source + ": [" + section + "] " + key + ": " + msg);
}

template <class T>
T parse_number(std::string_view text, const std::string& source, const std::string& section, const std::string& key) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  T v{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    field_error(source, section, key, "expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::vector<double> parse_list(const std::string& text, const std::string& source, const std::string& section,
                               const std::string& key) {
  std::vector<double> out;
  for (const auto& w : split_words(text)) out.push_back(parse_number<double>(w, source, section, key));
  if (out.empty()) field_error(source, section, key, "empty list");
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += format_double(v[i]);
  }
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += v[i];
  }
  return out;
}

// JSON scalars and arrays flattened into the INI string form.
std::string json_to_text(const nlohmann::json& j) {
  if (j.is_array()) {
    std::string out;
    for (const auto& e : j) {
      if (!out.empty()) out += ' ';
      out += json_to_text(e);
    }
    return out;
  }
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_unsigned()) return std::to_string(j.get<std::uint64_t>());
  if (j.is_number_integer()) return std::to_string(j.get<std::int64_t>());
  if (j.is_number_float()) return format_double(j.get<double>());
  if (j.is_boolean()) return j.get<bool>() ? "1" : "0";
  throw ConfigError("unsupported JSON value " + j.dump());
}

pt::ptree json_to_tree(const std::string& text, const std::string& source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError(source + ": top level must be an object");
  pt::ptree tree;
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_object()) {
      tree.put(key, json_to_text(value));
      continue;
    }
    pt::ptree section;
    for (const auto& [k, v] : value.items()) {
      if ((k == "maps" || k == "potential") && v.is_array()) {
        const std::string stem = k == "maps" ? "map" : "potential";
        for (std::size_t i = 0; i < v.size(); ++i) section.put(stem + std::to_string(i + 1), json_to_text(v[i]));
      } else {
        section.put(k, json_to_text(v));
      }
    }
    tree.add_child(key, section);
  }
  return tree;
}

class SectionReader {
 public:
  SectionReader(const pt::ptree* tree, std::string name, std::string source)
      : tree_(tree), name_(std::move(name)), source_(std::move(source)) {}

  std::optional<std::string> raw(const std::string& key) {
    seen_.insert(key);
    if (!tree_) return std::nullopt;
    auto v = tree_->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return *v;
  }
  template <class T>
  void number(const std::string& key, T& out) {
    if (auto v = raw(key)) out = parse_number<T>(*v, source_, name_, key);
  }
  void list(const std::string& key, std::vector<double>& out) {
    if (auto v = raw(key)) out = parse_list(*v, source_, name_, key);
  }
  void words(const std::string& key, std::vector<std::string>& out) {
    if (auto v = raw(key)) out = split_words(*v);
  }
  void text(const std::string& key, std::string& out) {
    if (auto v = raw(key)) out = *v;
  }
  /// Keys matching stem1, stem2, ... in order.
  std::vector<std::vector<double>> numbered(const std::string& stem) {
    std::vector<std::vector<double>> out;
    for (int i = 1;; ++i) {
      const std::string key = stem + std::to_string(i);
      auto v = raw(key);
      if (!v) break;
      out.push_back(parse_list(*v, source_, name_, key));
    }
    return out;
  }
  void reject_unknown() const {
    if (!tree_) return;
    for (const auto& [key, child] : *tree_) {
      if (!child.empty()) field_error(source_, name_, key, "unexpected nested section");
      if (!seen_.count(key)) field_error(source_, name_, key, "unknown key");
    }
  }
  const std::string& name() const { return name_; }
  const std::string& source() const { return source_; }

 private:
  const pt::ptree* tree_;
  std::string name_, source_;
  std::set<std::string> seen_;
};

RunConfig from_tree(const pt::ptree& tree, const std::string& source) {
  RunConfig c;
  // Top-level scalars.
  std::set<std::string> top_seen = {"seed", "output", "ifs", "measure", "analysis"};
  for (const auto& [key, child] : tree) {
    if (!top_seen.count(key)) throw ConfigError(source + ": unknown top-level key or section '" + key + "'");
  }
  if (auto v = tree.get_optional<std::string>("seed")) c.seed = parse_number<std::uint64_t>(*v, source, "", "seed");
  if (auto v = tree.get_optional<std::string>("output")) c.output = *v;

  auto child = [&](const std::string& name) -> const pt::ptree* {
    auto it = tree.find(name);
    return it == tree.not_found() ? nullptr : &it->second;
  };

  SectionReader ifs(child("ifs"), "ifs", source);
  if (!child("ifs")) throw ConfigError(source + ": missing [ifs] section");
  ifs.number("dim", c.dim);
  ifs.number("region_radius", c.region_radius);
  c.maps = ifs.numbered("map");
  ifs.reject_unknown();
  if (c.dim < 1 || c.dim > kMaxDim) field_error(source, "ifs", "dim", "must be in 1.." + std::to_string(kMaxDim));
  if (c.maps.size() < 2) field_error(source, "ifs", "map1", "need at least two maps (map1, map2, ...)");
  for (std::size_t i = 0; i < c.maps.size(); ++i) {
    if (c.maps[i].size() != static_cast<std::size_t>(c.dim * c.dim)) {
      field_error(source, "ifs", "map" + std::to_string(i + 1),
                  "expected " + std::to_string(c.dim * c.dim) + " entries (row-major), got " +
                      std::to_string(c.maps[i].size()));
    }
  }

  SectionReader measure(child("measure"), "measure", source);
  if (!child("measure")) throw ConfigError(source + ": missing [measure] section");
  measure.text("kind", c.measure_kind);
  measure.list("probs", c.probs);
  c.potential = measure.numbered("potential");
  measure.reject_unknown();
  if (c.measure_kind != "bernoulli" && c.measure_kind != "markov") {
    field_error(source, "measure", "kind", "must be 'bernoulli' or 'markov'");
  }

  SectionReader a(child("analysis"), "analysis", source);
  auto& an = c.analysis;
  a.list("q", an.q);
  a.number("tol", an.tol);
  a.number("table_budget", an.table_budget);
  a.number("phase_q_min", an.phase_q_min);
  a.number("phase_q_max", an.phase_q_max);
  a.number("phase_q_step", an.phase_q_step);
  a.number("phase_tol", an.phase_tol);
  a.number("samples", an.samples);
  a.number("depth", an.depth);
  a.number("rho", an.rho);
  a.number("rungs", an.rungs);
  a.number("r0", an.r0);
  a.number("min_per_cube", an.min_per_cube);
  a.number("min_cubes", an.min_cubes);
  a.words("forms", an.forms);
  a.number("correlation_points", an.correlation_points);
  a.number("verify_tolerance", an.verify_tolerance);
  a.list("s_values", an.s_values);
  a.number("energy_n", an.energy_n);
  a.number("energy_q", an.energy_q);
  a.number("energy_depth", an.energy_depth);
  a.number("energy_samples", an.energy_samples);
  a.number("energy_inner", an.energy_inner);
  a.number("energy_exact_depth", an.energy_exact_depth);
  a.number("decay_k_max", an.decay_k_max);
  a.number("class_max_spread", an.class_max_spread);
  a.number("class_max_level", an.class_max_level);
  a.reject_unknown();
  for (double q : an.q)
    if (!(q > 1.0)) field_error(source, "analysis", "q", "every q must exceed 1");
  for (const auto& f : an.forms)
    if (f != "mesh" && f != "correlation") field_error(source, "analysis", "forms", "unknown form '" + f + "'");
  if (!(an.tol >= 1e-12)) field_error(source, "analysis", "tol", "must be at least 1e-12");
  if (an.samples < 1) field_error(source, "analysis", "samples", "must be positive");
  if (an.depth < 0) field_error(source, "analysis", "depth", "must be nonnegative");
  if (!(an.rho > 0.0 && an.rho < 1.0)) field_error(source, "analysis", "rho", "must lie in (0, 1)");
  if (an.rungs < 3) field_error(source, "analysis", "rungs", "need at least 3");
  if (!(an.phase_q_step > 0.0)) field_error(source, "analysis", "phase_q_step", "must be positive");

  // Build the model objects once so invalid maps or weights fail here with a field address.
  for (std::size_t i = 0; i < c.maps.size(); ++i) {
    Matrix m(c.dim);
    for (int r = 0; r < c.dim; ++r)
      for (int col = 0; col < c.dim; ++col) m(r, col) = c.maps[i][static_cast<std::size_t>(r * c.dim + col)];
    try {
      LinearContraction lc(m);
    } catch (const Error& e) {
      field_error(source, "ifs", "map" + std::to_string(i + 1), e.what());
    }
  }
  try {
    (void)c.ifs();
  } catch (const Error& e) {
    field_error(source, "ifs", "region_radius", e.what());
  }
  try {
    const MeasureModel mm = c.model();
    if (mm.size() != static_cast<int>(c.maps.size())) {
      field_error(source, "measure", c.measure_kind == "bernoulli" ? "probs" : "potential1",
                  "has " + std::to_string(mm.size()) + " symbols but there are " + std::to_string(c.maps.size()) +
                      " maps");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    field_error(source, "measure", c.measure_kind == "bernoulli" ? "probs" : "potential", e.what());
  }
  return c;
}

}  // namespace

AffineIFS RunConfig::ifs() const {
  std::vector<LinearContraction> ms;
  for (const auto& entries : maps) {
    Matrix m(dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) m(r, c) = entries[static_cast<std::size_t>(r * dim + c)];
    ms.emplace_back(m);
  }
  return AffineIFS(std::move(ms), region_radius);
}

MeasureModel RunConfig::model() const {
  if (measure_kind == "bernoulli") {
    if (probs.empty()) throw InvalidInput("bernoulli measure needs probs");
    return MeasureModel::bernoulli(probs);
  }
  if (potential.empty()) throw InvalidInput("markov measure needs potential1, potential2, ...");
  return MeasureModel::markov_gibbs(potential);
}

std::string RunConfig::to_ini() const {
  std::string out;
  out += "seed = " + std::to_string(seed) + "\n";
  out += "output = " + output + "\n\n[ifs]\n";
  out += "dim = " + std::to_string(dim) + "\n";
  out += "region_radius = " + format_double(region_radius) + "\n";
  for (std::size_t i = 0; i < maps.size(); ++i) out += "map" + std::to_string(i + 1) + " = " + join(maps[i]) + "\n";
  out += "\n[measure]\nkind = " + measure_kind + "\n";
  if (measure_kind == "bernoulli") {
    out += "probs = " + join(probs) + "\n";
  } else {
    for (std::size_t i = 0; i < potential.size(); ++i)
      out += "potential" + std::to_string(i + 1) + " = " + join(potential[i]) + "\n";
  }
  const auto& a = analysis;
  out += "\n[analysis]\n";
  out += "q = " + join(a.q) + "\n";
  out += "tol = " + format_double(a.tol) + "\n";
  out += "table_budget = " + std::to_string(a.table_budget) + "\n";
  out += "phase_q_min = " + format_double(a.phase_q_min) + "\n";
  out += "phase_q_max = " + format_double(a.phase_q_max) + "\n";
  out += "phase_q_step = " + format_double(a.phase_q_step) + "\n";
  out += "phase_tol = " + format_double(a.phase_tol) + "\n";
  out += "samples = " + std::to_string(a.samples) + "\n";
  out += "depth = " + std::to_string(a.depth) + "\n";
  out += "rho = " + format_double(a.rho) + "\n";
  out += "rungs = " + std::to_string(a.rungs) + "\n";
  out += "r0 = " + format_double(a.r0) + "\n";
  out += "min_per_cube = " + format_double(a.min_per_cube) + "\n";
  out += "min_cubes = " + std::to_string(a.min_cubes) + "\n";
  out += "forms = " + join(a.forms) + "\n";
  out += "correlation_points = " + std::to_string(a.correlation_points) + "\n";
  out += "verify_tolerance = " + format_double(a.verify_tolerance) + "\n";
  out += "s_values = " + join(a.s_values) + "\n";
  out += "energy_n = " + std::to_string(a.energy_n) + "\n";
  out += "energy_q = " + format_double(a.energy_q) + "\n";
  out += "energy_depth = " + std::to_string(a.energy_depth) + "\n";
  out += "energy_samples = " + std::to_string(a.energy_samples) + "\n";
  out += "energy_inner = " + std::to_string(a.energy_inner) + "\n";
  out += "energy_exact_depth = " + std::to_string(a.energy_exact_depth) + "\n";
  out += "decay_k_max = " + std::to_string(a.decay_k_max) + "\n";
  out += "class_max_spread = " + std::to_string(a.class_max_spread) + "\n";
  out += "class_max_level = " + std::to_string(a.class_max_level) + "\n";
  return out;
}

std::uint64_t RunConfig::fnv_of_ini() const { return fnv1a(to_ini()); }

RunConfig parse_config(const std::string& text, const std::string& source) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return from_tree(json_to_tree(text, source), source);
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  return from_tree(tree, source);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

}  // namespace qdim
