#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "modint/field.hpp"
#include "modint/kernel.hpp"

namespace modint {

/// Raised when a grid is too coarse to resolve a kernel's support.
class GridResolutionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// n i.i.d. draws from the piecewise-constant density: a cell is chosen
/// with probability proportional to its value, the position is uniform in
/// the cell. Deterministic in `seed`.
ParticleConfig sample_iid(const DensityField& density, std::size_t n, std::uint64_t seed);

enum class MollifyMethod {
  /// (1/n) sum_i w^n(X^i - x) evaluated exactly at every node in the support.
  kDirect,
  /// Cloud-in-cell deposition followed by circular convolution with the
  /// sampled kernel. The linear deposition adds a smearing of variance h²/6
  /// per axis on top of the kernel's; it is exact for grid-commensurate shifts.
  kDeposition,
};

/// Throws GridResolutionError unless h <= support_halfwidth / 4.
void require_resolved(const KernelSpec& kernel, std::size_t M);

/// Smallest M with h <= support_halfwidth / 4, i.e. ceil(8 n^{beta/d}).
std::size_t min_resolving_points(const KernelSpec& kernel);

/// Grid sampling of the mollified empirical density mu * w^n.
DensityField mollify(const ParticleConfig& particles, const KernelSpec& kernel, std::size_t M,
                     MollifyMethod method = MollifyMethod::kDirect);

/// Multilinear periodic interpolation of the grid values.
double eval_field_at(const DensityField& field, std::span<const double> point);
std::vector<double> eval_field_at(const DensityField& field, const ParticleConfig& points);

enum class Metric { kL1, kL2, kW1 };

Metric parse_metric(const std::string& name);
std::string to_string(Metric m);

/// L1/L2: grid quadrature norms of f - g. W1 (d = 1 only): exact circle
/// 1-Wasserstein distance between the piecewise-constant densities.
double field_distance(const DensityField& f, const DensityField& g, Metric metric);

/// Ensemble record of a linear statistic <phi, mu_t> and its martingale part.
struct FluctuationRecord {
  std::string test_function;
  std::vector<double> times;
  /// values[member][k] = <phi, mu_{t_k}> for ensemble member `member`.
  std::vector<std::vector<double>> values;
  /// martingale[member][k] = <phi, mu_t> - <phi, mu_0> - int_0^t <L phi, mu_s> ds.
  std::vector<std::vector<double>> martingale;
  /// Predicted E[M_t²] at each time (the quadratic variation).
  std::vector<double> predicted_qv;

  /// Sample variance across members at time index k (unbiased).
  double value_variance(std::size_t k) const;
  double martingale_variance(std::size_t k) const;
};

}  // namespace modint
