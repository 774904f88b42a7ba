#include "modint/convolution.hpp"

#include <fftw3.h>

#include <array>
#include <cmath>
#include <cstring>
#include <mutex>
#include <stdexcept>

#include "modint/torus.hpp"

namespace modint {

namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace

std::vector<double> sample_displacement_kernel(int d, std::size_t M,
                                               const std::function<double(std::span<const double>)>& f) {
  std::size_t total = 1;
  for (int j = 0; j < d; ++j) total *= M;
  std::vector<double> out(total);
  std::array<double, kMaxDim> x{};
  const double h = 1.0 / double(M);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t r = flat;
    for (int j = d - 1; j >= 0; --j) {
      const std::size_t m = r % M;
      r /= M;
      x[j] = wrap(double(m) * h);
    }
    out[flat] = f(std::span<const double>(x.data(), std::size_t(d)));
  }
  return out;
}

struct CircularConvolution::Plans {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_complex* work = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  ~Plans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    fftw_free(real);
    fftw_free(spec);
    fftw_free(work);
  }
};

CircularConvolution::CircularConvolution(int d, std::size_t M) : d_(d), M_(M), plans_(std::make_unique<Plans>()) {
  if (d < 1 || d > int(kMaxDim) || M < 2) throw std::invalid_argument("convolution grid must have d in [1,3], M >= 2");
  n_real_ = 1;
  for (int j = 0; j < d; ++j) n_real_ *= M;
  n_complex_ = n_real_ / M * (M / 2 + 1);
  weight_ = std::pow(1.0 / double(M), d);
  std::array<int, kMaxDim> dims{};
  for (int j = 0; j < d; ++j) dims[j] = int(M);

  std::lock_guard<std::mutex> lock(planner_mutex());
  plans_->real = fftw_alloc_real(n_real_);
  plans_->spec = fftw_alloc_complex(n_complex_);
  plans_->work = fftw_alloc_complex(n_complex_);
  plans_->forward = fftw_plan_dft_r2c(d, dims.data(), plans_->real, plans_->spec, FFTW_ESTIMATE);
  plans_->backward = fftw_plan_dft_c2r(d, dims.data(), plans_->work, plans_->real, FFTW_ESTIMATE | FFTW_DESTROY_INPUT);
  if (!plans_->forward || !plans_->backward) throw std::runtime_error("FFTW planning failed");
}

CircularConvolution::~CircularConvolution() = default;
CircularConvolution::CircularConvolution(CircularConvolution&&) noexcept = default;
CircularConvolution& CircularConvolution::operator=(CircularConvolution&&) noexcept = default;

std::size_t CircularConvolution::add_kernel(std::span<const double> samples) {
  if (samples.size() != n_real_) throw std::invalid_argument("kernel sample count does not match grid");
  std::memcpy(plans_->real, samples.data(), n_real_ * sizeof(double));
  fftw_execute(plans_->forward);
  std::vector<std::complex<double>> s(n_complex_);
  // fold in the quadrature weight and the 1/N of the unnormalised inverse
  const double scale = weight_ / double(n_real_);
  for (std::size_t k = 0; k < n_complex_; ++k) s[k] = std::complex<double>(plans_->spec[k][0], plans_->spec[k][1]) * scale;
  spectra_.push_back(std::move(s));
  return spectra_.size() - 1;
}

void CircularConvolution::load(std::span<const double> in) {
  if (in.size() != n_real_) throw std::invalid_argument("input size does not match grid");
  std::memcpy(plans_->real, in.data(), n_real_ * sizeof(double));
  fftw_execute(plans_->forward);
}

void CircularConvolution::convolve_loaded(std::size_t kernel, std::span<double> out) {
  if (out.size() != n_real_) throw std::invalid_argument("output size does not match grid");
  const auto& s = spectra_.at(kernel);
  for (std::size_t k = 0; k < n_complex_; ++k) {
    const double ar = plans_->spec[k][0], ai = plans_->spec[k][1];
    const double br = s[k].real(), bi = s[k].imag();
    plans_->work[k][0] = ar * br - ai * bi;
    plans_->work[k][1] = ar * bi + ai * br;
  }
  fftw_execute(plans_->backward);
  std::memcpy(out.data(), plans_->real, n_real_ * sizeof(double));
}

}  // namespace modint
