#include "modint/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "modint/convolution.hpp"
#include "modint/measures.hpp"

namespace modint {

namespace {

// Flat index of the next node along `axis` (periodic).
struct AxisNeighbours {
  std::size_t M;
  std::size_t stride;
  std::size_t next(std::size_t flat) const noexcept {
    const std::size_t k = (flat / stride) % M;
    return k + 1 < M ? flat + stride : flat - (M - 1) * stride;
  }
};

AxisNeighbours axis(const DensityField& f, int j) {
  std::size_t stride = 1;
  for (int a = f.dimension() - 1; a > j; --a) stride *= f.points_per_axis();
  return {f.points_per_axis(), stride};
}

// sum over faces of (g(next) - g(here))² / h² times h^d
template <class G>
double dirichlet_sum(const DensityField& f, G&& g) {
  const double h = f.spacing();
  double s = 0.0;
  for (int j = 0; j < f.dimension(); ++j) {
    const AxisNeighbours nb = axis(f, j);
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double diff = g(nb.next(i)) - g(i);
      s += diff * diff;
    }
  }
  return s * f.cell_volume() / (h * h);
}

}  // namespace

double entropy(const DensityField& rho) {
  double s = 0.0;
  for (double v : rho.values())
    if (v > 0.0) s += v * std::log(std::max(v, 1e-300));
  return s * rho.cell_volume();
}

double fisher_information(const DensityField& rho) {
  std::vector<double> root(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) root[i] = std::sqrt(std::max(rho[i], 0.0));
  return 4.0 * dirichlet_sum(rho, [&](std::size_t i) { return root[i]; });
}

double fisher_information_ratio_form(const DensityField& rho, double floor) {
  const double h = rho.spacing();
  double s = 0.0;
  for (int j = 0; j < rho.dimension(); ++j) {
    const AxisNeighbours nb = axis(rho, j);
    for (std::size_t i = 0; i < rho.size(); ++i) {
      const std::size_t k = nb.next(i);
      const double diff = rho[k] - rho[i];
      s += diff * diff / std::max(0.5 * (rho[k] + rho[i]), floor);
    }
  }
  return s * rho.cell_volume() / (h * h);
}

double l2_norm_sq(const DensityField& rho) {
  double s = 0.0;
  for (double v : rho.values()) s += v * v;
  return s * rho.cell_volume();
}

double gradient_l2_sq(const DensityField& rho) {
  return dirichlet_sum(rho, [&](std::size_t i) { return rho[i]; });
}

double internal_energy(const DensityField& rho, const EnergyModel& em) {
  double s = 0.0;
  for (double v : rho.values()) s += em.F(std::max(v, 0.0));
  return s * rho.cell_volume();
}

double mollified_energy(const ParticleConfig& particles, const KernelSpec& kernel, const EnergyModel& em,
                        std::size_t M) {
  return internal_energy(mollify(particles, kernel, M), em);
}

double grad_energy_norm_from_field(const DensityField& mollified, const ParticleConfig& particles,
                                   const EnergyModel& em, CircularConvolution& conv, EnergyGradientPart part) {
  const int d = mollified.dimension();
  const std::size_t n = particles.size();
  if (n == 0) return 0.0;
  std::vector<double> potential(mollified.size());
  for (std::size_t i = 0; i < potential.size(); ++i) {
    const double z = std::max(mollified[i], 0.0);
    potential[i] = part == EnergyGradientPart::kFull ? em.dF(z) : em.du(z);
  }
  conv.load(potential);
  std::vector<DensityField> comps;
  for (int j = 0; j < d; ++j) {
    DensityField c(d, mollified.points_per_axis());
    conv.convolve_loaded(std::size_t(j), c.values());
    comps.push_back(std::move(c));
  }
  double s = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const auto x = particles.point(p);
    for (int j = 0; j < d; ++j) {
      const double g = eval_field_at(comps[std::size_t(j)], x);
      s += g * g;
    }
  }
  return s / double(n);
}

double grad_energy_norm(const ParticleConfig& particles, const KernelSpec& kernel, const EnergyModel& em,
                        std::size_t M, EnergyGradientPart part) {
  const int d = kernel.dimension();
  const DensityField mol = mollify(particles, kernel, M);
  CircularConvolution conv(d, M);
  for (int j = 0; j < d; ++j)
    conv.add_kernel(sample_displacement_kernel(d, M, [&](std::span<const double> x) { return kernel.grad(x)[j]; }));
  return grad_energy_norm_from_field(mol, particles, em, conv, part);
}

}  // namespace modint
