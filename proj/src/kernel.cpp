#include "modint/kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace modint {

double base_kernel_eval(std::span<const double> x) noexcept {
  double v = 1.0;
  for (double c : x) {
    v *= bump_profile(c);
    if (v == 0.0) return 0.0;
  }
  return v;
}

Vec base_kernel_grad(std::span<const double> x) noexcept {
  Vec g{};
  const std::size_t d = x.size();
  std::array<double, kMaxDim> phi{};
  std::array<double, kMaxDim> dphi{};
  for (std::size_t j = 0; j < d; ++j) {
    phi[j] = bump_profile(x[j]);
    dphi[j] = bump_profile_derivative(x[j]);
  }
  for (std::size_t j = 0; j < d; ++j) {
    double p = dphi[j];
    for (std::size_t k = 0; k < d; ++k)
      if (k != j) p *= phi[k];
    g[j] = p;
  }
  return g;
}

namespace {

// Visits the midpoint nodes of the support cube of `spec`, passing the node
// and the cell volume.
template <class Fn>
void for_each_support_node(const KernelSpec& spec, Fn&& fn) {
  const int d = spec.dimension();
  const std::size_t q = support_quadrature_points(d);
  const double hw = spec.support_halfwidth();
  const double step = 2.0 * hw / double(q);
  const double vol = std::pow(step, d);
  std::array<std::size_t, kMaxDim> idx{};
  std::array<double, kMaxDim> x{};
  std::size_t total = 1;
  for (int j = 0; j < d; ++j) total *= q;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t r = flat;
    for (int j = d - 1; j >= 0; --j) {
      idx[j] = r % q;
      r /= q;
      x[j] = -hw + (double(idx[j]) + 0.5) * step;
    }
    fn(std::span<const double>(x.data(), std::size_t(d)), vol);
  }
}

double grad_ratio(const KernelSpec& spec, std::span<const double> x) {
  const double w = spec.eval(x);
  if (w <= 0.0) return 0.0;
  const Vec g = spec.grad(x);
  double g2 = 0.0;
  for (int j = 0; j < spec.dimension(); ++j) g2 += g[j] * g[j];
  return g2 / (spec.grad_bound_factor() * w);
}

double cached_base_grad_constant(int d) {
  static std::mutex mu;
  static std::array<double, kMaxDim + 1> cache{};
  std::lock_guard<std::mutex> lock(mu);
  if (cache[d] == 0.0) cache[d] = estimate_grad_constant(KernelSpec::make_uncalibrated(d, beta_upper_bound(d), 1));
  return cache[d];
}

}  // namespace

KernelSpec KernelSpec::make(int d, double beta, std::size_t n, bool allow_beta_beyond_bound) {
  KernelSpec s = make_uncalibrated(d, beta, n, allow_beta_beyond_bound);
  // the constant is n-independent, so it is estimated once on w^1
  s.grad_bound_c_ = cached_base_grad_constant(d);
  return s;
}

KernelSpec KernelSpec::make_uncalibrated(int d, double beta, std::size_t n, bool allow_beta_beyond_bound) {
  if (d < 1 || d > int(kMaxDim)) throw std::invalid_argument("kernel dimension must be in [1, 3]");
  if (n == 0) throw std::invalid_argument("kernel index n must be positive");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  const bool within = beta <= beta_upper_bound(d) * (1.0 + 1e-12);
  if (!within && !allow_beta_beyond_bound) {
    std::ostringstream os;
    os << "beta=" << beta << " exceeds d/(d+2)=" << beta_upper_bound(d)
       << " (pass the beta-bound override for exploratory runs)";
    throw std::invalid_argument(os.str());
  }
  KernelSpec s;
  s.d_ = d;
  s.beta_ = beta;
  s.n_ = n;
  s.within_bound_ = within;
  s.amplitude_ = std::pow(double(n), beta);
  s.scale_ = std::pow(double(n), beta / d);
  s.base_sup_ = std::pow(kBumpPrefactor, d);
  s.grad_factor_ = std::pow(double(n), beta * (2.0 / d + 1.0));
  return s;
}

double KernelSpec::eval(std::span<const double> x) const noexcept {
  double v = amplitude_;
  for (int j = 0; j < d_; ++j) {
    v *= bump_profile(scale_ * x[j]);
    if (v == 0.0) return 0.0;
  }
  return v;
}

Vec KernelSpec::grad(std::span<const double> x) const noexcept {
  std::array<double, kMaxDim> y{};
  for (int j = 0; j < d_; ++j) y[j] = scale_ * x[j];
  Vec g = base_kernel_grad(std::span<const double>(y.data(), std::size_t(d_)));
  const double f = amplitude_ * scale_;
  for (int j = 0; j < d_; ++j) g[j] *= f;
  return g;
}

std::string KernelSpec::describe() const {
  std::ostringstream os;
  os << "bump kernel d=" << d_ << " beta=" << beta_ << " n=" << n_ << " halfwidth=" << support_halfwidth()
     << " c=" << grad_bound_c_ << (within_bound_ ? "" : " [beta beyond d/(d+2)]");
  return os.str();
}

std::size_t support_quadrature_points(int d) noexcept {
  switch (d) {
    case 1: return 2049;
    case 2: return 1025;
    default: return 129;
  }
}

double kernel_norm(const KernelSpec& spec, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("kernel_norm requires p >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for_each_support_node(spec, [&](std::span<const double> x, double) { m = std::max(m, spec.eval(x)); });
    return m;
  }
  double s = 0.0;
  for_each_support_node(spec, [&](std::span<const double> x, double vol) {
    s += std::pow(std::abs(spec.eval(x)), p) * vol;
  });
  return p == 1.0 ? s : std::pow(s, 1.0 / p);
}

double kernel_grad_norm_sq(const KernelSpec& spec) {
  double s = 0.0;
  for_each_support_node(spec, [&](std::span<const double> x, double vol) {
    const Vec g = spec.grad(x);
    for (int j = 0; j < spec.dimension(); ++j) s += g[j] * g[j] * vol;
  });
  return s;
}

double kernel_grad_norm_l1(const KernelSpec& spec) {
  double s = 0.0;
  for_each_support_node(spec, [&](std::span<const double> x, double vol) {
    const Vec g = spec.grad(x);
    double g2 = 0.0;
    for (int j = 0; j < spec.dimension(); ++j) g2 += g[j] * g[j];
    s += std::sqrt(g2) * vol;
  });
  return s;
}

double estimate_grad_constant(const KernelSpec& spec) {
  const int d = spec.dimension();
  double best = -1.0;
  std::array<double, kMaxDim> arg{};
  for_each_support_node(spec, [&](std::span<const double> x, double) {
    const double r = grad_ratio(spec, x);
    if (r > best) {
      best = r;
      std::copy(x.begin(), x.end(), arg.begin());
    }
  });
  // zoom in on the maximiser with a shrinking local lattice
  double spacing = 2.0 * spec.support_halfwidth() / double(support_quadrature_points(d));
  constexpr int kHalf = 4;
  std::array<double, kMaxDim> y{};
  for (int iter = 0; iter < 60; ++iter) {
    std::array<double, kMaxDim> centre = arg;
    std::size_t side = 2 * kHalf + 1;
    std::size_t total = 1;
    for (int j = 0; j < d; ++j) total *= side;
    for (std::size_t flat = 0; flat < total; ++flat) {
      std::size_t r = flat;
      for (int j = d - 1; j >= 0; --j) {
        const int off = int(r % side) - kHalf;
        r /= side;
        y[j] = centre[j] + off * spacing / kHalf;
      }
      const double v = grad_ratio(spec, std::span<const double>(y.data(), std::size_t(d)));
      if (v > best) {
        best = v;
        arg = y;
      }
    }
    spacing *= 0.5;
  }
  return best;
}

KernelValidation validate_kernel(const KernelSpec& spec) {
  KernelValidation rep;
  const int d = spec.dimension();
  const double sup = spec.amplitude() * spec.base_sup();

  double mass = 0.0;
  double sym = 0.0;
  std::array<double, kMaxDim> neg{};
  for_each_support_node(spec, [&](std::span<const double> x, double vol) {
    const double w = spec.eval(x);
    mass += w * vol;
    for (int j = 0; j < d; ++j) neg[j] = -x[j];
    const double wm = spec.eval(std::span<const double>(neg.data(), std::size_t(d)));
    sym = std::max(sym, std::abs(w - wm));
  });
  rep.symmetry_residual = sym / sup;
  rep.normalization_residual = std::abs(mass - 1.0);

  // zero on and just beyond the support boundary, positive just inside
  bool support_ok = true;
  const double hw = spec.support_halfwidth();
  std::array<double, kMaxDim> p{};
  for (int j = 0; j < d; ++j) {
    for (double edge : {hw, -hw, hw * (1.0 + 1e-9), -hw * (1.0 + 1e-9)}) {
      p.fill(0.0);
      p[j] = std::clamp(edge, -0.5, 0.5);
      if (spec.eval(std::span<const double>(p.data(), std::size_t(d))) != 0.0) support_ok = false;
    }
    p.fill(0.0);
    p[j] = hw * (1.0 - 1e-3);
    if (!(spec.eval(std::span<const double>(p.data(), std::size_t(d))) > 0.0)) support_ok = false;
  }
  rep.support_ok = support_ok;

  rep.grad_bound_c = estimate_grad_constant(spec);
  double excess = -std::numeric_limits<double>::infinity();
  for_each_support_node(spec, [&](std::span<const double> x, double) {
    const Vec g = spec.grad(x);
    double g2 = 0.0;
    for (int j = 0; j < d; ++j) g2 += g[j] * g[j];
    excess = std::max(excess, g2 - (rep.grad_bound_c + 1e-9) * spec.grad_bound_factor() * spec.eval(x));
  });
  rep.grad_bound_excess = excess;
  rep.passed = rep.symmetry_residual <= 1e-14 && rep.normalization_residual <= 1e-8 && rep.support_ok &&
               rep.grad_bound_excess <= 0.0;
  return rep;
}

}  // namespace modint
