#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace modint {

/// Samples f at the lattice displacements m*h, m in [0, M)^d, mapped to the
/// minimal image. The layout matches DensityField flat indexing.
std::vector<double> sample_displacement_kernel(int d, std::size_t M,
                                               const std::function<double(std::span<const double>)>& f);

/// Discrete circular convolution on an M^d periodic grid, FFT based:
///   out_i = h^d * sum_j in_j * k_{i-j}
/// which is the midpoint-rule approximation of (k * f)(x_i).
///
/// Several kernels can be registered; an input is transformed once and then
/// combined with any of them. Not safe for concurrent use of one instance.
class CircularConvolution {
 public:
  CircularConvolution(int d, std::size_t M);
  ~CircularConvolution();
  CircularConvolution(CircularConvolution&&) noexcept;
  CircularConvolution& operator=(CircularConvolution&&) noexcept;
  CircularConvolution(const CircularConvolution&) = delete;
  CircularConvolution& operator=(const CircularConvolution&) = delete;

  /// Registers displacement samples (see sample_displacement_kernel) and
  /// returns the kernel's handle.
  std::size_t add_kernel(std::span<const double> samples);

  /// Transforms `in`; subsequent convolve_loaded() calls reuse it.
  void load(std::span<const double> in);
  void convolve_loaded(std::size_t kernel, std::span<double> out);

  void apply(std::span<const double> in, std::span<double> out, std::size_t kernel = 0) {
    load(in);
    convolve_loaded(kernel, out);
  }

  std::size_t grid_size() const noexcept { return n_real_; }

 private:
  struct Plans;
  int d_ = 0;
  std::size_t M_ = 0;
  std::size_t n_real_ = 0;
  std::size_t n_complex_ = 0;
  double weight_ = 1.0;
  std::unique_ptr<Plans> plans_;
  std::vector<std::vector<std::complex<double>>> spectra_;
};

}  // namespace modint
