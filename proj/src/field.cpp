#include "modint/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace modint {

namespace {

std::size_t ipow(std::size_t b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

void check_dim(int d) {
  if (d < 1 || d > int(kMaxDim)) throw std::invalid_argument("dimension must be in [1, 3]");
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ParticleConfig::ParticleConfig(int d, std::vector<double> coords) : d_(d), coords_(std::move(coords)) {
  check_dim(d);
  if (coords_.size() % std::size_t(d) != 0) throw std::invalid_argument("coordinate count not a multiple of d");
  for (double& c : coords_) c = wrap(c);
}

ParticleConfig::ParticleConfig(int d, std::size_t n, double fill) : d_(d), coords_(n * std::size_t(d), wrap(fill)) {
  check_dim(d);
}

DensityField::DensityField(int d, std::size_t M, double fill) : d_(d), M_(M), values_(ipow(M, d), fill) {
  check_dim(d);
  if (M == 0) throw std::invalid_argument("grid needs at least one point per axis");
}

DensityField::DensityField(int d, std::size_t M, std::vector<double> values) : d_(d), M_(M), values_(std::move(values)) {
  check_dim(d);
  if (values_.size() != ipow(M, d)) throw std::invalid_argument("field value count does not match M^d");
}

DensityField DensityField::from_function(int d, std::size_t M,
                                         const std::function<double(std::span<const double>)>& f) {
  DensityField out(d, M);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Vec x = out.node(i);
    out.values_[i] = f(std::span<const double>(x.data(), std::size_t(d)));
  }
  return out;
}

double DensityField::cell_volume() const noexcept { return std::pow(spacing(), d_); }

Vec DensityField::node(std::size_t flat) const noexcept {
  Vec x{};
  for (int j = d_ - 1; j >= 0; --j) {
    x[j] = node_coordinate(flat % M_);
    flat /= M_;
  }
  return x;
}

std::size_t DensityField::flat_index(std::span<const long> idx) const noexcept {
  std::size_t flat = 0;
  const long m = long(M_);
  for (int j = 0; j < d_; ++j) {
    long k = idx[j] % m;
    if (k < 0) k += m;
    flat = flat * M_ + std::size_t(k);
  }
  return flat;
}

double DensityField::total_mass() const noexcept {
  double s = 0.0;
  for (double v : values_) s += v;
  return s * cell_volume();
}

double DensityField::min_value() const noexcept { return *std::min_element(values_.begin(), values_.end()); }

void write_field_csv(const DensityField& f, std::ostream& out) {
  const int d = f.dimension();
  for (int j = 0; j < d; ++j) out << 'x' << (j + 1) << ',';
  out << "value\n";
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Vec x = f.node(i);
    for (int j = 0; j < d; ++j) out << fmt_double(x[j]) << ',';
    out << fmt_double(f[i]) << '\n';
  }
}

void write_field_binary(const DensityField& f, std::ostream& out) {
  const std::int32_t d = f.dimension();
  const std::int64_t M = std::int64_t(f.points_per_axis());
  out.write(reinterpret_cast<const char*>(&d), sizeof d);
  out.write(reinterpret_cast<const char*>(&M), sizeof M);
  out.write(reinterpret_cast<const char*>(f.values().data()), std::streamsize(f.size() * sizeof(double)));
}

DensityField read_field_binary(std::istream& in) {
  std::int32_t d = 0;
  std::int64_t M = 0;
  in.read(reinterpret_cast<char*>(&d), sizeof d);
  in.read(reinterpret_cast<char*>(&M), sizeof M);
  if (!in || d < 1 || d > int(kMaxDim) || M < 1) throw std::runtime_error("malformed field header");
  std::vector<double> v(ipow(std::size_t(M), d));
  in.read(reinterpret_cast<char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
  if (!in) throw std::runtime_error("truncated field payload");
  return DensityField(d, std::size_t(M), std::move(v));
}

void write_particles_csv(const ParticleConfig& p, std::ostream& out) {
  const int d = p.dimension();
  for (int j = 0; j < d; ++j) out << (j ? "," : "") << 'x' << (j + 1);
  out << '\n';
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto x = p.point(i);
    for (int j = 0; j < d; ++j) out << (j ? "," : "") << fmt_double(x[j]);
    out << '\n';
  }
}

ParticleConfig read_particles_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty particle CSV");
  const int d = int(std::count(line.begin(), line.end(), ',')) + 1;
  std::vector<double> coords;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int cols = 0;
    while (std::getline(ss, cell, ',')) {
      coords.push_back(std::stod(cell));
      ++cols;
    }
    if (cols != d) throw std::runtime_error("particle CSV row has wrong column count");
  }
  return ParticleConfig(d, std::move(coords));
}

void save_field(const DensityField& f, const std::filesystem::path& path) {
  const bool binary = path.extension() == ".bin";
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  if (binary)
    write_field_binary(f, out);
  else
    write_field_csv(f, out);
}

}  // namespace modint
