#include "modint/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace modint {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  std::vector<double> z(count);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i) z[i] = std::exp(a + (b - a) * double(i) / double(count - 1));
  return z;
}

// Worst (most negative) scaled second divided difference of f on the grid.
double worst_convexity(const std::vector<double>& x, const std::vector<double>& f) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    const double s1 = (f[i] - f[i - 1]) / (x[i] - x[i - 1]);
    const double s2 = (f[i + 1] - f[i]) / (x[i + 1] - x[i]);
    const double dd = 2.0 * (s2 - s1) / (x[i + 1] - x[i - 1]);
    const double scale = 1.0 + std::abs(s1) + std::abs(s2);
    worst = std::min(worst, dd / scale);
  }
  return worst;
}
}  // namespace

VelocityField::VelocityField(int d, std::vector<FourierTerm> terms) : d_(d), terms_(std::move(terms)) {
  if (d < 1 || d > int(kMaxDim)) throw std::invalid_argument("velocity field dimension must be in [1, 3]");
  for (const auto& t : terms_)
    if (t.component < 0 || t.component >= d) throw std::invalid_argument("Fourier term component out of range");
}

VelocityField VelocityField::sine(int d, double amplitude) {
  std::vector<FourierTerm> terms;
  for (int j = 0; j < d; ++j) {
    FourierTerm t;
    t.k[j] = 1;
    t.component = j;
    t.amplitude = amplitude;
    terms.push_back(t);
  }
  return VelocityField(d, std::move(terms));
}

VelocityField VelocityField::attraction(int d, double strength) {
  // V = -s sum_j cos(2 pi x_j)  =>  -dV/dx_j = -2 pi s sin(2 pi x_j)
  return sine(d, -kTwoPi * strength);
}

bool VelocityField::is_zero() const noexcept {
  return std::all_of(terms_.begin(), terms_.end(), [](const FourierTerm& t) { return t.amplitude == 0.0; });
}

Vec VelocityField::eval(std::span<const double> x) const noexcept {
  Vec v{};
  for (const auto& t : terms_) {
    double phase = 0.0;
    for (int j = 0; j < d_; ++j) phase += double(t.k[j]) * x[j];
    phase *= kTwoPi;
    v[t.component] += t.amplitude * (t.sine ? std::sin(phase) : std::cos(phase));
  }
  return v;
}

Vec VelocityField::mean() const noexcept {
  Vec m{};
  for (const auto& t : terms_) {
    const bool constant = std::all_of(t.k.begin(), t.k.begin() + d_, [](int k) { return k == 0; });
    if (constant && !t.sine) m[t.component] += t.amplitude;
  }
  return m;
}

double velocity_sup(const VelocityField& b) {
  const int d = b.dimension();
  if (b.is_zero()) return 0.0;
  const std::size_t per_axis = d == 1 ? 4096 : (d == 2 ? 256 : 48);
  auto norm_at = [&](std::span<const double> x) {
    const Vec v = b.eval(x);
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += v[j] * v[j];
    return std::sqrt(s);
  };
  std::size_t total = 1;
  for (int j = 0; j < d; ++j) total *= per_axis;
  std::array<double, kMaxDim> x{}, arg{};
  double best = -1.0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t r = flat;
    for (int j = d - 1; j >= 0; --j) {
      x[j] = -0.5 + double(r % per_axis) / double(per_axis);
      r /= per_axis;
    }
    const double v = norm_at(std::span<const double>(x.data(), std::size_t(d)));
    if (v > best) {
      best = v;
      arg = x;
    }
  }
  double spacing = 1.0 / double(per_axis);
  constexpr int kHalf = 3;
  const std::size_t side = 2 * kHalf + 1;
  std::size_t local = 1;
  for (int j = 0; j < d; ++j) local *= side;
  for (int iter = 0; iter < 50; ++iter) {
    const auto centre = arg;
    for (std::size_t flat = 0; flat < local; ++flat) {
      std::size_t r = flat;
      for (int j = d - 1; j >= 0; --j) {
        x[j] = centre[j] + (int(r % side) - kHalf) * spacing / kHalf;
        r /= side;
      }
      const double v = norm_at(std::span<const double>(x.data(), std::size_t(d)));
      if (v > best) {
        best = v;
        arg = x;
      }
    }
    spacing *= 0.5;
  }
  return best;
}

GFunction GFunction::truncated(double K) {
  if (!(K > 0.0)) throw std::invalid_argument("truncated g requires a positive cap K");
  return GFunction(Kind::kTruncated, K);
}

double GFunction::lipschitz() const noexcept { return kind_ == Kind::kZero ? 0.0 : 1.0; }

double GFunction::growth() const noexcept {
  switch (kind_) {
    case Kind::kZero: return 0.0;
    case Kind::kTruncated: return K_ / (1.0 + K_);  // attained at z = K
    case Kind::kSaturating: return 0.25;            // z/(1+z)² peaks at z = 1
  }
  return 0.0;
}

std::string GFunction::name() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::kZero: os << "zero"; break;
    case Kind::kTruncated: os << "min(z," << K_ << ")"; break;
    case Kind::kSaturating: os << "z/(1+z)"; break;
  }
  return os.str();
}

AdhesionVelocityModel build_velocity_model(const VelocitySpec& spec) {
  AdhesionVelocityModel vm;
  const int d = spec.dimension;
  if (spec.b_family == "sine")
    vm.b = VelocityField::sine(d, spec.b_amplitude);
  else if (spec.b_family == "attraction")
    vm.b = VelocityField::attraction(d, spec.b_amplitude);
  else if (spec.b_family == "fourier")
    vm.b = VelocityField(d, spec.b_terms);
  else if (spec.b_family == "zero")
    vm.b = VelocityField::zero(d);
  else
    throw std::invalid_argument("unknown velocity family '" + spec.b_family + "'");

  if (spec.g_family == "truncated")
    vm.g = GFunction::truncated(spec.g_cap);
  else if (spec.g_family == "saturating")
    vm.g = GFunction::saturating();
  else if (spec.g_family == "zero")
    vm.g = GFunction::zero();
  else
    throw std::invalid_argument("unknown g family '" + spec.g_family + "'");

  vm.b_sup = velocity_sup(vm.b);
  vm.lip_g = vm.g.lipschitz();
  vm.growth_c = vm.g.growth();
  return vm;
}

Report validate_velocity_model(const AdhesionVelocityModel& vm) {
  Report rep;
  rep.title = "velocity model b=" + std::to_string(vm.b.terms().size()) + " Fourier terms, g=" + vm.g.name();

  const auto z = log_grid(1e-6, 1e3, 600);
  double worst_lip = 0.0;
  double worst_growth = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < z.size(); ++i) {
    worst_growth = std::max(worst_growth, vm.g(z[i]) - vm.growth_c * (1.0 + z[i]));
    for (std::size_t j = i + 1; j < z.size(); j += 7) {
      const double ratio = std::abs(vm.g(z[i]) - vm.g(z[j])) / (z[j] - z[i]);
      worst_lip = std::max(worst_lip, ratio);
    }
  }
  worst_growth = std::max(worst_growth, vm.g(0.0) - vm.growth_c);
  rep.add("g_lipschitz", worst_lip <= vm.lip_g + 1e-9, worst_lip, vm.lip_g, "sampled difference quotient");
  rep.add("g_linear_growth", worst_growth <= 1e-12, worst_growth, 0.0, "max g(z) - c(1+z)");

  // resample |b| on a grid offset from the one used to compute b_sup
  const int d = vm.b.dimension();
  const std::size_t per_axis = d == 1 ? 10007 : (d == 2 ? 301 : 61);
  std::size_t total = 1;
  for (int j = 0; j < d; ++j) total *= per_axis;
  std::array<double, kMaxDim> x{};
  double sampled = 0.0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t r = flat;
    for (int j = d - 1; j >= 0; --j) {
      x[j] = -0.5 + (double(r % per_axis) + 0.37) / double(per_axis);
      r /= per_axis;
    }
    const Vec v = vm.b.eval(std::span<const double>(x.data(), std::size_t(d)));
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += v[j] * v[j];
    sampled = std::max(sampled, std::sqrt(s));
  }
  const double gap = vm.b_sup - sampled;
  const double tol = d == 1 ? 1e-6 : 1e-6 + 5e-3 * vm.b_sup;  // coarser resampling grid in d >= 2
  rep.add("b_sup_consistent", gap >= -1e-12 && gap <= tol, gap, tol, "stored ||b||_inf minus resampled sup");
  rep.add("b_bounded", std::isfinite(vm.b_sup), vm.b_sup, 0.0);
  return rep;
}

std::string EnergyModel::name() const {
  if (family_ == Family::kZero) return "zero";
  std::ostringstream os;
  os << "derouler(c=" << c_ << ")";
  return os.str();
}

double EnergyModel::u(double z) const noexcept {
  if (family_ == Family::kZero) return 0.0;
  return z <= 1.0 ? c_ * (0.5 * z * z - z * z * z / 6.0) : c_ / 3.0 + 0.5 * c_ * (z - 1.0);
}

double EnergyModel::du(double z) const noexcept {
  if (family_ == Family::kZero) return 0.0;
  return z <= 1.0 ? c_ * (z - 0.5 * z * z) : 0.5 * c_;
}

double EnergyModel::d2u(double z) const noexcept {
  if (family_ == Family::kZero) return 0.0;
  return z < 1.0 ? c_ * (1.0 - z) : 0.0;
}

double EnergyModel::F(double z) const noexcept { return u(z) + (z > 0.0 ? z * std::log(z) : 0.0); }

double EnergyModel::dF(double z, double floor) const noexcept { return du(z) + std::log(std::max(z, floor)) + 1.0; }

double EnergyModel::P(double z) const noexcept {
  if (family_ == Family::kZero) return z;
  return z <= 1.0 ? c_ * (0.5 * z * z - z * z * z / 3.0) + z : c_ / 6.0 + z;
}

EnergyModel build_energy_model(const EnergySpec& spec) {
  EnergyModel m;
  if (spec.family == "zero") {
    m.family_ = EnergyModel::Family::kZero;
  } else if (spec.family == "derouler") {
    m.family_ = EnergyModel::Family::kDerouler;
    m.c_ = spec.c;
    m.lambda_ = std::abs(spec.c) / 4.0;
    if (!(m.lambda_ < 1.0)) {
      std::ostringstream os;
      os << "derouler c=" << spec.c << " gives lambda=" << m.lambda_ << " >= 1";
      throw std::invalid_argument(os.str());
    }
  } else {
    throw std::invalid_argument("unknown energy family '" + spec.family + "'");
  }
  return m;
}

double default_alpha(int d) noexcept { return double(d) / double(d + 2) + 0.01; }

Report validate_energy_model(const EnergyModel& m, int d, double alpha) {
  Report rep;
  rep.title = "energy model " + m.name() + " (d=" + std::to_string(d) + ")";
  const auto z = log_grid(1e-6, 1e3, 1200);

  double sampled_lambda = 0.0;
  double worst_dp = 0.0;
  double pmin = std::numeric_limits<double>::infinity(), pmax = -pmin;
  std::vector<double> Fz(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    sampled_lambda = std::max(sampled_lambda, std::abs(z[i] * m.d2u(z[i])));
    Fz[i] = m.F(z[i]);
    const double dz = 1e-5 * z[i];
    const double fd = (m.P(z[i] + dz) - m.P(z[i] - dz)) / (2.0 * dz);
    worst_dp = std::max(worst_dp, std::abs(fd - m.dP(z[i])));
    pmin = std::min(pmin, m.dP(z[i]));
    pmax = std::max(pmax, m.dP(z[i]));
  }
  // the z(1-z) maximum sits at z = 1/2
  sampled_lambda = std::max(sampled_lambda, std::abs(0.5 * m.d2u(0.5)));
  rep.add("lambda_below_one", m.lambda() < 1.0, m.lambda(), 1.0, "sup |z u''(z)|");
  rep.add("lambda_matches_sampled", std::abs(sampled_lambda - m.lambda()) <= 1e-12, sampled_lambda, m.lambda());
  rep.add("lambda_margin", m.lambda() <= 0.95, m.lambda(), 0.95,
          m.lambda() > 0.95 ? "lambda is close to the admissible bound 1" : "", true);
  rep.add("pressure_derivative_consistent", worst_dp <= 1e-6, worst_dp, 1e-6, "|finite difference P' - (z u'' + 1)|");
  const bool in_range = pmin >= 1.0 - m.lambda() - 1e-12 && pmax <= 1.0 + m.lambda() + 1e-12;
  rep.add("pressure_slope_range", in_range, pmin, 1.0 - m.lambda(), "P' within [1-lambda, 1+lambda]");

  const double convex = worst_convexity(z, Fz);
  rep.add("F_convex", convex >= -1e-9, convex, -1e-9, "scaled second divided difference");
  const double f0 = m.F(1e-14);
  rep.add("F_zero_limit", std::abs(f0) <= 1e-9, f0, 1e-9, "F(1e-14)");

  double worst_super = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < z.size(); ++i)
    if (z[i] >= 10.0) worst_super = std::min(worst_super, Fz[i] / z[i] - Fz[i - 1] / z[i - 1]);
  rep.add("F_superlinear", worst_super > 0.0, worst_super, 0.0, "F(z)/z increasing on [10, 1e3]");

  const auto small = log_grid(1e-14, 1e-2, 300);
  double lower = std::numeric_limits<double>::infinity();
  for (double s : small) lower = std::min(lower, m.F(s) / std::pow(s, alpha));
  const double tail = m.F(small[0]) / std::pow(small[0], alpha) - m.F(small[1]) / std::pow(small[1], alpha);
  std::ostringstream alpha_note;
  alpha_note << "inf F(z)/z^alpha on [1e-14, 1e-2], alpha=" << alpha;
  rep.add("F_lower_power_bound", std::isfinite(lower) && tail >= 0.0, lower, alpha, alpha_note.str());

  // s -> s^d F(s^{-d}) over the s-range matching z in [1e-6, 1e3]
  const auto s = log_grid(std::pow(1e3, -1.0 / d), std::pow(1e-6, -1.0 / d), 1200);
  std::vector<double> hs(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) hs[i] = std::pow(s[i], d) * m.F(std::pow(s[i], -d));
  const double sconvex = worst_convexity(s, hs);
  rep.add("rescaled_F_convex", sconvex >= -1e-9, sconvex, -1e-9, "s^d F(s^-d)");
  double worst_rise = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < s.size(); ++i) worst_rise = std::max(worst_rise, hs[i] - hs[i - 1]);
  rep.add("rescaled_F_nonincreasing", worst_rise <= 1e-12, worst_rise, 1e-12, "max increment of s^d F(s^-d)");
  return rep;
}

}  // namespace modint
