#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "modint/torus.hpp"

namespace modint {

/// n points on the d-torus, stored row-major (particle-major), always wrapped.
class ParticleConfig {
 public:
  ParticleConfig() = default;
  /// Coordinates are wrapped on construction. Throws if coords.size() != n*d.
  ParticleConfig(int d, std::vector<double> coords);
  ParticleConfig(int d, std::size_t n, double fill = 0.0);

  int dimension() const noexcept { return d_; }
  std::size_t size() const noexcept { return d_ == 0 ? 0 : coords_.size() / std::size_t(d_); }

  std::span<const double> point(std::size_t i) const noexcept {
    return {coords_.data() + i * std::size_t(d_), std::size_t(d_)};
  }
  std::span<double> point(std::size_t i) noexcept { return {coords_.data() + i * std::size_t(d_), std::size_t(d_)}; }

  const std::vector<double>& coords() const noexcept { return coords_; }
  std::vector<double>& mutable_coords() noexcept { return coords_; }

  bool operator==(const ParticleConfig&) const = default;

 private:
  int d_ = 0;
  std::vector<double> coords_;
};

/// Cell-centred periodic sampling of a function on the d-torus with M nodes
/// per axis. Node i sits at -1/2 + (i + 1/2)/M along each axis; the last axis
/// varies fastest.
class DensityField {
 public:
  DensityField() = default;
  DensityField(int d, std::size_t M, double fill = 0.0);
  DensityField(int d, std::size_t M, std::vector<double> values);

  /// Samples f at every node.
  static DensityField from_function(int d, std::size_t M, const std::function<double(std::span<const double>)>& f);
  static DensityField uniform(int d, std::size_t M) { return DensityField(d, M, 1.0); }

  int dimension() const noexcept { return d_; }
  std::size_t points_per_axis() const noexcept { return M_; }
  std::size_t size() const noexcept { return values_.size(); }
  double spacing() const noexcept { return 1.0 / double(M_); }
  /// h^d, the quadrature weight of one node.
  double cell_volume() const noexcept;

  double node_coordinate(std::size_t axis_index) const noexcept {
    return -0.5 + (double(axis_index) + 0.5) / double(M_);
  }
  /// Coordinates of flat node `flat`.
  Vec node(std::size_t flat) const noexcept;
  /// Flat index of a multi-index (components taken modulo M).
  std::size_t flat_index(std::span<const long> idx) const noexcept;

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  /// h^d * sum of values.
  double total_mass() const noexcept;
  double min_value() const noexcept;
  bool same_grid(const DensityField& o) const noexcept { return d_ == o.d_ && M_ == o.M_; }

  bool operator==(const DensityField&) const = default;

 private:
  int d_ = 0;
  std::size_t M_ = 0;
  std::vector<double> values_;
};

// Serialisation. CSV rows are "x1,...,xd,value" for fields and "x1,...,xd"
// for particles, with a header line. The binary field layout is
// int32 d, int64 M, then M^d little-endian doubles in flat-index order.
void write_field_csv(const DensityField& f, std::ostream& out);
void write_field_binary(const DensityField& f, std::ostream& out);
DensityField read_field_binary(std::istream& in);
void write_particles_csv(const ParticleConfig& p, std::ostream& out);
ParticleConfig read_particles_csv(std::istream& in);

void save_field(const DensityField& f, const std::filesystem::path& csv_or_bin);

}  // namespace modint
