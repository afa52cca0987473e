#include "qdim/sampler.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "qdim/error.hpp"
#include "qdim/kernels.hpp"
#include "qdim/rng.hpp"
#include "qdim/util.hpp"

namespace qdim {

DisplacementField::DisplacementField(std::uint64_t seed, int dim, double radius)
    : seed_(seed), dim_(dim), radius_(radius) {
  if (dim < 1 || dim > kMaxDim) throw InvalidInput("displacement field dimension out of range");
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw InvalidInput("displacement radius must be nonnegative");
}

std::uint64_t DisplacementField::mix(std::uint64_t z) noexcept { return mix64(z); }

DisplacementField::Key DisplacementField::key_of(const Word& w) noexcept {
  Key k;
  for (std::size_t i = 0; i < w.size(); ++i) k = extend(k, w[i]);
  return k;
}

void DisplacementField::displacement(Key k, double* out) const noexcept {
  if (radius_ == 0.0) {
    for (int i = 0; i < dim_; ++i) out[i] = 0.0;
    return;
  }
  CounterStream stream(seed_, k.a, static_cast<std::uint32_t>(k.b));
  for (int i = 0; i < dim_; ++i) out[i] = radius_ * (2.0 * stream.uniform() - 1.0);
}

std::vector<double> DisplacementField::displacement(const Word& w) const {
  if (w.empty()) throw InvalidInput("displacement is defined for nonempty words only");
  std::vector<double> out(static_cast<std::size_t>(dim_));
  displacement(key_of(w), out.data());
  return out;
}

double truncation_bound(const AffineIFS& ifs, double radius, int depth) {
  const double ap = ifs.a_plus();
  return std::pow(ap, depth) * radius * std::sqrt(static_cast<double>(ifs.dim())) / (1.0 - ap);
}

int depth_for_bound(const AffineIFS& ifs, double radius, double target) {
  if (!(target > 0.0)) throw InvalidInput("truncation target must be positive");
  const double base = radius * std::sqrt(static_cast<double>(ifs.dim())) / (1.0 - ifs.a_plus());
  if (base <= target) return 1;
  return std::max(1, static_cast<int>(std::ceil(std::log(target / base) / std::log(ifs.a_plus()))));
}

CloudPoint project(const AffineIFS& ifs, const DisplacementField& field, const Word& word, int depth) {
  if (depth < 1) throw InvalidInput("projection depth must be at least 1");
  if (static_cast<std::size_t>(depth) > word.size()) throw InvalidInput("projection depth exceeds word length");
  if (field.dim() != ifs.dim()) throw InvalidInput("field and maps differ in dimension");
  CloudPoint p;
  p.position.resize(static_cast<std::size_t>(ifs.dim()));
  project_into(ifs, word, depth, [&](DisplacementField::Key k, double* out) { field.displacement(k, out); },
               p.position.data());
  p.word = word.prefix(static_cast<std::size_t>(depth));
  p.truncation_bound = truncation_bound(ifs, field.radius(), depth);
  return p;
}

std::uint64_t model_hash(const AffineIFS& ifs, const MeasureModel& model) {
  std::string desc = std::to_string(ifs.dim()) + ' ' + format_double(ifs.region_radius());
  for (const auto& t : ifs.maps())
    for (int r = 0; r < ifs.dim(); ++r)
      for (int c = 0; c < ifs.dim(); ++c) desc += ' ' + format_double(t.matrix()(r, c));
  desc += ' ' + hex64(model.fingerprint());
  return fnv1a(desc);
}

PointCloud sample_cloud(const AffineIFS& ifs, const MeasureModel& model, std::uint64_t seed, std::size_t n,
                        int depth) {
  if (n < 1) throw InvalidInput("sample count must be at least 1");
  if (depth < 1) throw InvalidInput("sampling depth must be at least 1");
  if (model.size() != ifs.size()) throw InvalidInput("measure and maps differ in alphabet size");
  if (n > (std::size_t{1} << 31)) throw ResourceLimit("sample count above 2^31");
  const DisplacementField field(derive_seed(seed, "field"), ifs.dim(), ifs.region_radius());
  PointCloud cloud;
  cloud.dim = ifs.dim();
  cloud.coords = kernels::omp::sample_cloud(ifs, model, field, n, depth, derive_seed(seed, "words"));
  cloud.seed = seed;
  cloud.depth = depth;
  cloud.model_hash = model_hash(ifs, model);
  cloud.truncation_bound = truncation_bound(ifs, ifs.region_radius(), depth);
  return cloud;
}

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  std::string buf;
  buf += "# qdim-cloud 1\n";
  buf += "# dim " + std::to_string(cloud.dim) + '\n';
  buf += "# count " + std::to_string(cloud.size()) + '\n';
  buf += "# seed " + std::to_string(cloud.seed) + '\n';
  buf += "# depth " + std::to_string(cloud.depth) + '\n';
  buf += "# model_hash " + hex64(cloud.model_hash) + '\n';
  buf += "# truncation_bound " + format_double17(cloud.truncation_bound) + '\n';
  out << buf;
  const auto d = static_cast<std::size_t>(cloud.dim);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    buf.clear();
    for (std::size_t c = 0; c < d; ++c) {
      if (c) buf += ' ';
      buf += format_double17(cloud.coords[i * d + c]);
    }
    buf += '\n';
    out << buf;
  }
  if (!out) throw Error("write failed for " + path.string());
}

PointCloud read_cloud(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cloud file not found: " + path.string());
  PointCloud cloud;
  std::size_t count = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key, value;
      hs >> key >> value;
      if (key == "dim") cloud.dim = std::stoi(value);
      else if (key == "count") count = std::stoull(value);
      else if (key == "seed") cloud.seed = std::stoull(value);
      else if (key == "depth") cloud.depth = std::stoi(value);
      else if (key == "model_hash") cloud.model_hash = std::stoull(value, nullptr, 16);
      else if (key == "truncation_bound") std::from_chars(value.data(), value.data() + value.size(), cloud.truncation_bound);
      continue;
    }
    if (cloud.dim < 1) throw InvalidInput(path.string() + ": missing '# dim' header before data");
    const char* p = line.data();
    const char* end = p + line.size();
    for (int c = 0; c < cloud.dim; ++c) {
      while (p < end && *p == ' ') ++p;
      double v = 0.0;
      auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) {
        throw InvalidInput(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(cloud.dim) +
                           " numbers");
      }
      cloud.coords.push_back(v);
      p = res.ptr;
    }
  }
  if (cloud.dim < 1) throw InvalidInput(path.string() + ": not a cloud file");
  if (count && count != cloud.size()) {
    throw InvalidInput(path.string() + ": header count " + std::to_string(count) + " but " +
                       std::to_string(cloud.size()) + " rows");
  }
  if (cloud.size() == 0) throw InvalidInput(path.string() + ": empty cloud");
  return cloud;
}

}  // namespace qdim
