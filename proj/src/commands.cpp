#include "qdim/commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qdim/dimsolver.hpp"
#include "qdim/error.hpp"
#include "qdim/estimator.hpp"
#include "qdim/multienergy.hpp"
#include "qdim/rng.hpp"
#include "qdim/sampler.hpp"
#include "qdim/util.hpp"

namespace qdim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

fs::path out_dir(const RunConfig& c) {
  fs::path dir(c.output);
  fs::create_directories(dir);
  return dir;
}

std::string q_tag(double q) {
  std::string t = format_double(q);
  for (auto& ch : t)
    if (ch == '.') ch = 'p';
  return t;
}

SolverOptions solver_options(const RunConfig& c) {
  SolverOptions o;
  o.tol = c.analysis.tol;
  o.table_budget = c.analysis.table_budget;
  return o;
}

LadderOptions ladder_options(const RunConfig& c) {
  LadderOptions o;
  o.rho = c.analysis.rho;
  o.r0 = c.analysis.r0;
  o.rungs = c.analysis.rungs;
  o.min_per_cube = c.analysis.min_per_cube;
  o.min_cubes = c.analysis.min_cubes;
  return o;
}

json dimension_json(const DimensionResult& r) {
  return {{"q", r.q},         {"d_q", r.d_q},       {"k_max", r.k_max},     {"iterations", r.iterations},
          {"s_lo", r.s_lo},   {"s_hi", r.s_hi},     {"rate_lo", r.rate_lo}, {"rate_hi", r.rate_hi}};
}

json estimate_json(const DimEstimate& e, const MomentLadder& ladder) {
  return {{"q", e.q},
          {"form", to_string(e.form)},
          {"value", e.value},
          {"stderr", e.stderr_},
          {"raw_slope", e.raw_slope},
          {"clamped", e.clamped},
          {"l_min", e.l_min},
          {"l_max", e.l_max},
          {"r_max_used", ladder.radii[static_cast<std::size_t>(e.l_min)]},
          {"r_min_used", ladder.radii[static_cast<std::size_t>(e.l_max)]},
          {"n", ladder.n}};
}

double fitted_intercept(const MomentLadder& ladder, const DimEstimate& e) {
  double sx = 0, sy = 0;
  for (int l = e.l_min; l <= e.l_max; ++l) {
    sx += (ladder.q - 1.0) * std::log(ladder.radii[static_cast<std::size_t>(l)]);
    sy += std::log(ladder.sums[static_cast<std::size_t>(l)]);
  }
  const double count = e.l_max - e.l_min + 1;
  return sy / count - e.raw_slope * sx / count;
}

/// gnuplot script drawing log M_r(q) against log r with the fitted line.
std::string plot_script(const std::string& csv, const MomentLadder& ladder, const DimEstimate* e) {
  std::string s;
  s += "set datafile separator ','\n";
  s += "set logscale xy\n";
  s += "set xlabel 'r'\n";
  s += "set ylabel 'M_r(q)'\n";
  s += "set key left top\n";
  s += "set title '" + to_string(ladder.form) + " ladder, q = " + format_double(ladder.q) + "'\n";
  if (e) {
    s += "a = " + format_double17(fitted_intercept(ladder, *e)) + "\n";
    s += "b = " + format_double17((ladder.q - 1.0) * e->raw_slope) + "\n";
    s += "f(r) = exp(a) * r**b\n";
  }
  s += "plot '" + csv + "' every ::1 using 2:3 with linespoints title 'M_r(q)'";
  s += ", '' every ::1 using 2:($6 > 0 ? $3 : 1/0) with points pt 7 title 'regression window'";
  if (e) s += ", f(x) with lines title sprintf('slope %.4f', " + format_double17(e->raw_slope) + ")";
  s += "\n";
  return s;
}

/// Writes ladder CSV and plot script; returns the estimate or the reason it failed.
json emit_ladder(const fs::path& dir, const MomentLadder& ladder, int dim, std::optional<DimEstimate>& est,
                 std::string& failure) {
  est.reset();
  try {
    est = estimate_dimension(ladder, dim);
  } catch (const InsufficientData& e) {
    failure = e.what();
  }
  const std::string stem = "ladder_" + to_string(ladder.form) + "_q" + q_tag(ladder.q);
  write_text(dir / (stem + ".csv"), ladder_csv(ladder, est ? &*est : nullptr));
  write_text(dir / (stem + ".gp"), plot_script(stem + ".csv", ladder, est ? &*est : nullptr));
  json occ = json::array();
  for (auto o : ladder.occupied) occ.push_back(o);
  json j = {{"csv", stem + ".csv"}, {"plot", stem + ".gp"}, {"occupied", occ}};
  if (est) j["estimate"] = estimate_json(*est, ladder);
  else j["error"] = failure;
  return j;
}

PointCloud obtain_cloud(const RunConfig& c, const std::optional<fs::path>& reuse, json& info,
                        std::vector<std::string>& warnings) {
  const AffineIFS ifs = c.ifs();
  const MeasureModel model = c.model();
  if (reuse) {
    PointCloud cloud = read_cloud(*reuse);
    if (cloud.dim != c.dim) throw InvalidInput("cloud dimension does not match the configured maps");
    if (cloud.model_hash != model_hash(ifs, model)) warnings.push_back("reused cloud was sampled from another model");
    info = {{"source", reuse->string()}, {"points", cloud.size()}, {"depth", cloud.depth},
            {"seed", cloud.seed},        {"truncation_bound", cloud.truncation_bound}};
    return cloud;
  }
  const DepthChoice k = choose_depth(c);
  if (k.suggested) {
    warnings.push_back("depth K = " + std::to_string(k.depth) + " leaves truncation error " + format_double(k.bound) +
                       " above r_min / 10 = " + format_double(k.r_min / 10) + "; suggest K = " +
                       std::to_string(*k.suggested));
  }
  PointCloud cloud = sample_cloud(ifs, model, derive_seed(c.seed, "cloud"), c.analysis.samples, k.depth);
  info = {{"source", "sampled"},    {"points", cloud.size()}, {"depth", k.depth},
          {"seed", cloud.seed},     {"truncation_bound", cloud.truncation_bound},
          {"r_min", k.r_min}};
  if (k.suggested) info["suggested_depth"] = *k.suggested;
  return cloud;
}

bool is_integer(double q) { return q == std::floor(q); }

}  // namespace

json ResultRecord::to_json() const {
  return {{"command", command},   {"config_hash", hex64(config_hash)}, {"seed", seed},
          {"seconds", seconds},   {"tool_version", tool_version},      {"warnings", warnings},
          {"payload", payload}};
}

std::uint64_t file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return fnv1a(ss.str());
}

DepthChoice choose_depth(const RunConfig& c) {
  const AffineIFS ifs = c.ifs();
  double r0 = c.analysis.r0;
  if (!(r0 > 0.0)) {
    // Pilot cloud for the bounding-box diameter that sets the ladder top.
    const int pilot_depth = depth_for_bound(ifs, c.region_radius, 1e-6 * c.region_radius);
    r0 = bounding_box_diameter(sample_cloud(ifs, c.model(), derive_seed(c.seed, "pilot"), 2000, pilot_depth));
  }
  DepthChoice k;
  k.r_min = r0 * std::pow(c.analysis.rho, c.analysis.rungs - 1);
  const int needed = std::max(1, depth_for_bound(ifs, c.region_radius, k.r_min / 10));
  k.depth = c.analysis.depth > 0 ? c.analysis.depth : needed;
  k.bound = truncation_bound(ifs, c.region_radius, k.depth);
  if (k.depth < needed) k.suggested = needed;
  return k;
}

json solve_payload(const RunConfig& c) {
  const AffineIFS ifs = c.ifs();
  const MeasureModel model = c.model();
  const MomentTable table(ifs, model, solver_options(c));
  json rows = json::array();
  for (double q : c.analysis.q) {
    const auto r = d_q_minus(table, q, c.analysis.tol);
    json row = dimension_json(r);
    row["min_d_q_N"] = std::min(r.d_q, static_cast<double>(c.dim));
    rows.push_back(row);
  }
  std::vector<double> grid;
  const auto& a = c.analysis;
  const int steps = static_cast<int>(std::floor((a.phase_q_max - a.phase_q_min) / a.phase_q_step + 1e-9));
  for (int i = 0; i <= steps; ++i) grid.push_back(a.phase_q_min + i * a.phase_q_step);
  json scan_json;
  if (grid.size() >= 3) {
    const auto scan = phase_transition_scan(table, grid, a.phase_tol);
    json tab = json::array();
    for (std::size_t i = 0; i < scan.q.size(); ++i) {
      tab.push_back({{"q", scan.q[i]},
                     {"d_q", scan.d_q[i]},
                     {"min_d_q_N", std::min(scan.d_q[i], static_cast<double>(c.dim))},
                     {"slope_jump", scan.slope_jump[i]}});
    }
    json kinks = json::array();
    for (auto i : scan.kinks) kinks.push_back(scan.q[i]);
    scan_json = {{"table", tab}, {"kinks", kinks}, {"noise_floor", scan.noise_floor}};
  }
  return {{"dimensions", rows},
          {"affinity_dimension", affinity_dimension(table, a.tol)},
          {"table_depth", table.k_max()},
          {"phase_scan", scan_json}};
}

ResultRecord cmd_solve(const RunConfig& c) {
  ResultRecord rec;
  rec.command = "solve";
  rec.payload = solve_payload(c);
  const fs::path dir = out_dir(c);
  std::string csv = "q,d_q,min_d_q_N,slope_jump\n";
  if (!rec.payload["phase_scan"].is_null()) {
    for (const auto& row : rec.payload["phase_scan"]["table"]) {
      csv += format_double17(row["q"].get<double>()) + ',' + format_double17(row["d_q"].get<double>()) + ',' +
             format_double17(row["min_d_q_N"].get<double>()) + ',' + format_double17(row["slope_jump"].get<double>()) +
             '\n';
    }
    write_text(dir / "phase_scan.csv", csv);
    write_text(dir / "phase_scan.gp",
               "set datafile separator ','\nset xlabel 'q'\nset ylabel 'd_q'\n"
               "plot 'phase_scan.csv' every ::1 using 1:2 with linespoints title 'd_q', "
               "'' every ::1 using 1:3 with lines title 'min(d_q, N)'\n");
  }
  return rec;
}

ResultRecord cmd_sample(const RunConfig& c) {
  ResultRecord rec;
  rec.command = "sample";
  json info;
  const PointCloud cloud = obtain_cloud(c, std::nullopt, info, rec.warnings);
  const fs::path path = out_dir(c) / "cloud.txt";
  write_cloud(cloud, path);
  info["file"] = "cloud.txt";
  info["file_hash"] = hex64(file_hash(path));
  info["model_hash"] = hex64(cloud.model_hash);
  rec.payload = info;
  return rec;
}

namespace {

json estimate_all(const RunConfig& c, const PointCloud& cloud, std::vector<DimEstimate>& mesh_estimates,
                  std::string& first_failure) {
  const fs::path dir = out_dir(c);
  const auto lopts = ladder_options(c);
  CorrelationOptions copts;
  copts.max_points = c.analysis.correlation_points;
  const bool want_mesh =
      std::find(c.analysis.forms.begin(), c.analysis.forms.end(), "mesh") != c.analysis.forms.end();
  const bool want_corr =
      std::find(c.analysis.forms.begin(), c.analysis.forms.end(), "correlation") != c.analysis.forms.end();
  json rows = json::array();
  const auto ladders = mesh_ladders(cloud, c.analysis.q, lopts);
  for (std::size_t i = 0; i < c.analysis.q.size(); ++i) {
    const double q = c.analysis.q[i];
    json row = {{"q", q}};
    std::optional<DimEstimate> mesh, corr;
    std::string failure;
    if (want_mesh) {
      row["mesh"] = emit_ladder(dir, ladders[i], c.dim, mesh, failure);
      if (!mesh && first_failure.empty()) first_failure = failure;
    }
    if (mesh) mesh_estimates.push_back(*mesh);
    if (want_corr && is_integer(q)) {
      const auto ladder = correlation_ladder(cloud, static_cast<int>(q), lopts, copts);
      row["correlation"] = emit_ladder(dir, ladder, c.dim, corr, failure);
      if (!corr && first_failure.empty()) first_failure = failure;
    }
    if (mesh && corr) {
      const double diff = mesh->value - corr->value;
      row["form_difference"] = diff;
      row["forms_agree"] = std::abs(diff) <= c.analysis.verify_tolerance;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

ResultRecord cmd_estimate(const RunConfig& c, const std::optional<fs::path>& cloud_path) {
  ResultRecord rec;
  rec.command = "estimate";
  json info;
  const PointCloud cloud = obtain_cloud(c, cloud_path, info, rec.warnings);
  std::vector<DimEstimate> mesh;
  std::string failure;
  const json rows = estimate_all(c, cloud, mesh, failure);
  rec.payload = {{"cloud", info}, {"estimates", rows}};
  write_text(out_dir(c) / "estimate.json", rec.payload.dump(2) + "\n");
  if (!failure.empty()) throw InsufficientData(failure);
  return rec;
}

ResultRecord cmd_verify(const RunConfig& c, const std::optional<fs::path>& cloud_path) {
  ResultRecord rec;
  rec.command = "verify";
  const AffineIFS ifs = c.ifs();
  const MeasureModel model = c.model();
  const MomentTable table(ifs, model, solver_options(c));
  json info;
  const PointCloud cloud = obtain_cloud(c, cloud_path, info, rec.warnings);
  const auto ladders = mesh_ladders(cloud, c.analysis.q, ladder_options(c));
  const fs::path dir = out_dir(c);
  json rows = json::array();
  std::string csv = "q,d_q,theoretical,empirical,stderr,discrepancy,within\n";
  std::string failure;
  bool all_within = true;
  std::vector<double> d_values;
  for (std::size_t i = 0; i < c.analysis.q.size(); ++i) {
    const double q = c.analysis.q[i];
    const auto dq = d_q_minus(table, q, c.analysis.tol);
    const double theory = std::min(dq.d_q, static_cast<double>(c.dim));
    d_values.push_back(dq.d_q);
    std::optional<DimEstimate> est;
    std::string why;
    json lad = emit_ladder(dir, ladders[i], c.dim, est, why);
    json row = {{"q", q}, {"d_q", dq.d_q}, {"theoretical", theory}, {"ladder", lad}};
    if (est) {
      const double disc = est->value - theory;
      const bool within = std::abs(disc) <= c.analysis.verify_tolerance;
      all_within = all_within && within;
      row["empirical"] = est->value;
      row["stderr"] = est->stderr_;
      row["discrepancy"] = disc;
      row["within_tolerance"] = within;
      csv += format_double17(q) + ',' + format_double17(dq.d_q) + ',' + format_double17(theory) + ',' +
             format_double17(est->value) + ',' + format_double17(est->stderr_) + ',' + format_double17(disc) + ',' +
             (within ? "1" : "0") + '\n';
    } else {
      all_within = false;
      if (failure.empty()) failure = why;
    }
    rows.push_back(row);
  }
  write_text(dir / "verify.csv", csv);
  write_text(dir / "verify.gp",
             "set datafile separator ','\nset xlabel 'q'\nset ylabel 'dimension'\n"
             "plot 'verify.csv' every ::1 using 1:3 with linespoints title 'min(d_q, N)', "
             "'' every ::1 using 1:4:5 with yerrorbars title 'empirical D_q'\n");
  rec.payload = {{"cloud", info},
                 {"rows", rows},
                 {"tolerance", c.analysis.verify_tolerance},
                 {"all_within_tolerance", all_within}};
  // Kinks in the theoretical column when the requested q values form a grid.
  const auto& qs = c.analysis.q;
  if (qs.size() >= 3 && std::is_sorted(qs.begin(), qs.end()) &&
      std::adjacent_find(qs.begin(), qs.end()) == qs.end()) {
    const auto scan = phase_transition_scan(table, qs, c.analysis.phase_tol);
    json kinks = json::array();
    for (auto k : scan.kinks) kinks.push_back(scan.q[k]);
    rec.payload["theoretical_kinks"] = kinks;
  }
  if (!failure.empty()) throw InsufficientData(failure);
  return rec;
}

ResultRecord cmd_multienergy(const RunConfig& c) {
  ResultRecord rec;
  rec.command = "multienergy";
  const AffineIFS ifs = c.ifs();
  const MeasureModel model = c.model();
  const auto& a = c.analysis;
  for (double s : a.s_values) {
    if (s == std::floor(s)) {
      throw InvalidInput("s = " + format_double(s) +
                         " is an integer; the multienergy bounds hold only for non-integer s");
    }
    if (!(s > 0.0) || s > c.dim) throw InvalidInput("s = " + format_double(s) + " outside (0, N)");
  }
  const double d_ref = d_q_minus(ifs, model, a.energy_q, solver_options(c)).d_q;
  json rows = json::array();
  std::string csv = "s,n,q,depth,estimate,stderr,exact,failures,decay_slope,geometric,cauchy\n";
  for (std::size_t i = 0; i < a.s_values.size(); ++i) {
    const double s = a.s_values[i];
    json row = {{"s", s}, {"n", a.energy_n}, {"q", a.energy_q}};
    MultiEnergyOptions mo;
    mo.inner = a.energy_inner;
    mo.seed = derive_seed(derive_seed(c.seed, "multienergy"), i);
    std::optional<MultiEnergyEstimate> mc;
    try {
      mc = mc_multienergy(ifs, model, s, a.energy_n, a.energy_q, a.energy_samples, a.energy_depth, mo);
      row["mc"] = {{"value", mc->value},         {"stderr", mc->stderr_},
                   {"samples", mc->sample_count}, {"depth", mc->truncation_depth},
                   {"failures", mc->failures},    {"failure_rate", mc->failure_rate}};
    } catch (const DepthInsufficient& e) {
      row["mc"] = {{"error", e.what()}};
    }
    const double exact = exact_truncated_multienergy(ifs, model, s, a.energy_n, a.energy_q, a.energy_exact_depth);
    row["exact_truncated"] = exact;
    const auto decay = check_decay_criterion(ifs, model, s, a.energy_q, a.decay_k_max);
    row["decay"] = {{"lambda_fit", decay.lambda_fit},
                    {"slope", decay.slope},
                    {"geometric", decay.geometric},
                    {"growing", decay.growing}};
    bool cauchy = false;
    if (a.energy_exact_depth >= 4) {
      const auto trend = truncation_trend(ifs, model, s, a.energy_n, a.energy_q, a.energy_exact_depth);
      cauchy = trend.cauchy;
      row["truncation_trend"] = {{"values", trend.values}, {"ratio", trend.ratio}, {"cauchy", trend.cauchy}};
    }
    row["diagnostic"] = decay.geometric ? "finite" : (decay.growing ? "divergent" : "borderline");
    row["s_below_d_q"] = s < d_ref;
    rows.push_back(row);
    csv += format_double17(s) + ',' + std::to_string(a.energy_n) + ',' + format_double17(a.energy_q) + ',' +
           std::to_string(a.energy_depth) + ',' + (mc ? format_double17(mc->value) : "nan") + ',' +
           (mc ? format_double17(mc->stderr_) : "nan") + ',' + format_double17(exact) + ',' +
           (mc ? std::to_string(mc->failures) : "nan") + ',' + format_double17(decay.slope) + ',' +
           (decay.geometric ? "1" : "0") + ',' + (cauchy ? "1" : "0") + '\n';
  }
  json prop = json::array();
  bool all_hold = true;
  const int spread = std::min<int>(a.class_max_spread, static_cast<int>(std::floor(a.energy_q)));
  if (spread >= 2) {
    for (double s : a.s_values) {
      for (const auto& chk : check_join_class_bounds(ifs, model, s, a.energy_q, spread, a.class_max_level)) {
        all_hold = all_hold && chk.holds;
        prop.push_back({{"s", s},
                        {"root", chk.join_class.root.to_string()},
                        {"class", chk.join_class.canonical_form},
                        {"spread", chk.join_class.spread},
                        {"lhs", chk.lhs},
                        {"rhs", chk.rhs},
                        {"holds", chk.holds}});
      }
    }
  }
  write_text(out_dir(c) / "multienergy.csv", csv);
  rec.payload = {{"d_q", d_ref},
                 {"rows", rows},
                 {"join_class_bounds", {{"checks", prop}, {"count", prop.size()}, {"all_hold", all_hold}}}};
  return rec;
}

ResultRecord run_command(const std::string& verb, const RunConfig& c, const std::optional<fs::path>& cloud) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = out_dir(c);
  write_text(dir / "resolved_config.ini", c.to_ini());
  if (cloud && !fs::exists(*cloud)) throw InvalidInput("cloud file not found: " + cloud->string());
  ResultRecord rec;
  if (verb == "solve") rec = cmd_solve(c);
  else if (verb == "sample") rec = cmd_sample(c);
  else if (verb == "estimate") rec = cmd_estimate(c, cloud);
  else if (verb == "verify") rec = cmd_verify(c, cloud);
  else if (verb == "multienergy") rec = cmd_multienergy(c);
  else throw InvalidInput("unknown command '" + verb + "'");
  rec.config_hash = c.hash();
  rec.seed = c.seed;
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const json j = rec.to_json();
  write_text(dir / (verb + "_result.json"), j.dump(2) + "\n");
  std::ofstream log(dir / "results.jsonl", std::ios::app | std::ios::binary);
  log << j.dump() << '\n';
  return rec;
}

}  // namespace qdim
