#include "modint/sde.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "modint/measures.hpp"
#include "modint/rng.hpp"

namespace modint {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

std::string system_name(const ParticleSystem& sys) {
  return std::visit(overloaded{[](const NonlocalSystem&) { return std::string("nonlocal"); },
                               [](const LocalSystem&) { return std::string("local"); }},
                    sys);
}

DriftEvaluator::DriftEvaluator(ParticleSystem system, const KernelSpec& kernel, std::size_t M,
                               LocalDriftOrdering ordering)
    : system_(std::move(system)),
      kernel_(kernel),
      M_(M),
      d_(kernel.dimension()),
      ordering_(ordering),
      mollified_(kernel.dimension(), M),
      grad_conv_(kernel.dimension(), M),
      aux_conv_(kernel.dimension(), M) {
  require_resolved(kernel_, M_);
  for (int j = 0; j < d_; ++j)
    grad_conv_.add_kernel(
        sample_displacement_kernel(d_, M_, [&](std::span<const double> x) { return kernel_.grad(x)[j]; }));

  if (const auto* nl = std::get_if<NonlocalSystem>(&system_)) {
    if (nl->model.b.dimension() != d_) throw std::invalid_argument("velocity field dimension differs from kernel");
    zero_ = nl->model.is_zero();
    for (int j = 0; j < d_; ++j)
      aux_conv_.add_kernel(
          sample_displacement_kernel(d_, M_, [&](std::span<const double> x) { return nl->model.b.eval(x)[j]; }));
    drift_bound_ = nl->model.drift_bound();
  } else {
    const auto& em = std::get<LocalSystem>(system_).model;
    zero_ = em.is_zero();
    if (ordering_ == LocalDriftOrdering::kGradientField)
      aux_conv_.add_kernel(sample_displacement_kernel(d_, M_, [&](std::span<const double> x) { return kernel_.eval(x); }));
    // sup |u'| = |c|/2 for the derouler family
    drift_bound_ = zero_ ? 0.0 : kernel_grad_norm_l1(kernel_) * std::abs(em.coefficient()) / 2.0;
  }
  work_.resize(mollified_.size());
  comps_.assign(std::size_t(d_), std::vector<double>(mollified_.size()));
}

std::vector<std::vector<double>> DriftEvaluator::drift_field(const DensityField& mollified) {
  const std::size_t N = mollified.size();
  std::vector<std::vector<double>> out(std::size_t(d_), std::vector<double>(N, 0.0));
  if (zero_) return out;
  if (const auto* nl = std::get_if<NonlocalSystem>(&system_)) {
    for (std::size_t i = 0; i < N; ++i) work_[i] = nl->model.g(std::max(mollified[i], 0.0));
    aux_conv_.load(work_);
    for (int j = 0; j < d_; ++j) aux_conv_.convolve_loaded(std::size_t(j), out[std::size_t(j)]);
    return out;
  }
  const auto& em = std::get<LocalSystem>(system_).model;
  for (std::size_t i = 0; i < N; ++i) work_[i] = em.du(std::max(mollified[i], 0.0));
  if (ordering_ == LocalDriftOrdering::kGradientKernel) {
    grad_conv_.load(work_);
    for (int j = 0; j < d_; ++j) {
      auto& c = out[std::size_t(j)];
      grad_conv_.convolve_loaded(std::size_t(j), c);
      for (double& v : c) v = -v;
    }
    return out;
  }
  // centred difference of u'(mu~) along each axis, then smooth with w^n
  const double inv2h = 0.5 * double(M_);
  std::vector<double> grad(N);
  for (int j = 0; j < d_; ++j) {
    std::size_t stride = 1;
    for (int a = d_ - 1; a > j; --a) stride *= M_;
    for (std::size_t i = 0; i < N; ++i) {
      const std::size_t k = (i / stride) % M_;
      const std::size_t up = k + 1 < M_ ? i + stride : i - (M_ - 1) * stride;
      const std::size_t dn = k > 0 ? i - stride : i + (M_ - 1) * stride;
      grad[i] = -(work_[up] - work_[dn]) * inv2h;
    }
    aux_conv_.apply(grad, out[std::size_t(j)]);
  }
  return out;
}

void DriftEvaluator::evaluate(const ParticleConfig& particles, std::vector<double>& drift) {
  mollified_ = mollify(particles, kernel_, M_);
  evaluate_field(mollified_, particles, drift);
}

void DriftEvaluator::evaluate_field(const DensityField& mollified, const ParticleConfig& particles,
                                    std::vector<double>& drift) {
  const std::size_t n = particles.size();
  drift.assign(n * std::size_t(d_), 0.0);
  if (zero_) return;
  auto comps = drift_field(mollified);
  std::vector<DensityField> fields;
  fields.reserve(comps.size());
  for (auto& c : comps) fields.emplace_back(d_, M_, std::move(c));
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = particles.point(i);
    for (int j = 0; j < d_; ++j) drift[i * std::size_t(d_) + std::size_t(j)] = eval_field_at(fields[std::size_t(j)], x);
  }
}

std::vector<double> drift_nonlocal(const ParticleConfig& particles, const KernelSpec& kernel,
                                   const AdhesionVelocityModel& vm, std::size_t M) {
  DriftEvaluator ev(NonlocalSystem{vm}, kernel, M);
  std::vector<double> out;
  ev.evaluate(particles, out);
  return out;
}

std::vector<double> drift_local(const ParticleConfig& particles, const KernelSpec& kernel, const EnergyModel& em,
                                std::size_t M, LocalDriftOrdering ordering) {
  DriftEvaluator ev(LocalSystem{em}, kernel, M, ordering);
  std::vector<double> out;
  ev.evaluate(particles, out);
  return out;
}

void em_step_inplace(SimState& state, std::span<const double> drift, double dt) {
  if (dt < 0.0) throw std::invalid_argument("em_step: negative time step");
  auto& p = state.particles;
  const int d = p.dimension();
  const std::size_t n = p.size();
  if (drift.size() != n * std::size_t(d)) throw std::invalid_argument("em_step: drift size mismatch");
  const double noise = std::sqrt(2.0 * dt);
  auto& c = p.mutable_coords();
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < d; j += 2) {
      const auto xi = normal_pair(draw(state.seed, StreamTag::kBrownian, i, state.step, std::uint32_t(j / 2)));
      const std::size_t a = i * std::size_t(d) + std::size_t(j);
      c[a] = wrap(c[a] + drift[a] * dt + noise * xi[0]);
      if (j + 1 < d) c[a + 1] = wrap(c[a + 1] + drift[a + 1] * dt + noise * xi[1]);
    }
  }
  state.t += dt;
  ++state.step;
}

SimState em_step(SimState state, std::span<const double> drift, double dt) {
  em_step_inplace(state, drift, dt);
  return state;
}

std::string TestFunction::name() const {
  std::ostringstream os;
  bool constant = true;
  for (int v : k) constant = constant && v == 0;
  if (constant) return "one";
  os << "cos(2pi(";
  bool first = true;
  for (std::size_t j = 0; j < kMaxDim; ++j) {
    if (k[j] == 0) continue;
    if (!first) os << "+";
    os << k[j] << "x" << (j + 1);
    first = false;
  }
  os << "))";
  return os.str();
}

double TestFunction::value(std::span<const double> x) const noexcept {
  double ph = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) ph += double(k[j]) * x[j];
  return std::cos(kTwoPi * ph);
}

Vec TestFunction::gradient(std::span<const double> x) const noexcept {
  double ph = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) ph += double(k[j]) * x[j];
  const double s = -kTwoPi * std::sin(kTwoPi * ph);
  Vec g{};
  for (std::size_t j = 0; j < x.size(); ++j) g[j] = s * double(k[j]);
  return g;
}

double TestFunction::laplacian(std::span<const double> x) const noexcept {
  double k2 = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) k2 += double(k[j] * k[j]);
  return -kTwoPi * kTwoPi * k2 * value(x);
}

SimulationError::SimulationError(const std::string& what, double t, std::uint64_t step)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << what << " (t=" << t << ", step=" << step << ")";
        return os.str();
      }()),
      t_(t),
      step_(step) {}

double default_time_step(const KernelSpec& kernel, std::size_t M, double drift_bound) {
  const double h = 1.0 / double(M);
  double dt = 0.25 * h * h;
  if (drift_bound > 0.0) dt = std::min(dt, 0.1 * kernel.support_halfwidth() / drift_bound);
  return dt;
}

RunRecord simulate(const ParticleConfig& init, const ParticleSystem& system, const KernelSpec& kernel,
                   const SimOptions& opts) {
  SimState s;
  s.particles = init;
  s.seed = opts.seed;
  return simulate_from(s, system, kernel, opts);
}

namespace {

struct ObservableState {
  TestFunction f;
  std::vector<double> phi;  // at current positions
  double mean = 0.0;
  double martingale = 0.0;
};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / double(v.size());
}

}  // namespace

RunRecord simulate_from(const SimState& start, const ParticleSystem& system, const KernelSpec& kernel,
                        const SimOptions& opts) {
  const int d = kernel.dimension();
  if (start.particles.dimension() != d) throw std::invalid_argument("simulate: particle and kernel dimension differ");
  if (opts.T < start.t) throw std::invalid_argument("simulate: end time precedes start time");
  std::vector<double> targets = opts.record_times;
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  for (double t : targets)
    if (t < start.t - 1e-12 || t > opts.T + 1e-12)
      throw std::invalid_argument("simulate: record time outside [start, T]");
  if (opts.T > start.t && !(opts.dt > 0.0)) throw std::invalid_argument("simulate: dt must be positive");

  const std::size_t M = opts.M ? opts.M : std::max<std::size_t>(d == 1 ? 256 : 128, min_resolving_points(kernel));
  DriftEvaluator ev(system, kernel, M);
  const EnergyModel energy = opts.diagnostic_energy ? *opts.diagnostic_energy
                             : std::holds_alternative<LocalSystem>(system)
                                 ? std::get<LocalSystem>(system).model
                                 : build_energy_model({"zero", 0.0});

  RunRecord rec;
  rec.seed = start.seed;
  SimState state = start;
  const std::size_t n = state.particles.size();

  std::vector<ObservableState> obs;
  for (const auto& f : opts.observables) {
    ObservableState o{f, std::vector<double>(n), 0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) o.phi[i] = f.value(state.particles.point(i));
    o.mean = mean_of(o.phi);
    obs.push_back(std::move(o));
  }
  rec.observable_values.resize(obs.size());
  rec.observable_martingale.resize(obs.size());

  double fisher_int = 0.0, grad_int = 0.0;
  auto record = [&] {
    rec.times.push_back(state.t);
    if (opts.record_diagnostics || opts.keep_snapshots) {
      DensityField mol = mollify(state.particles, kernel, M);
      if (opts.record_diagnostics) {
        DiagnosticSample ds;
        ds.time = state.t;
        ds.entropy = entropy(mol);
        ds.fisher = fisher_information(mol);
        ds.l2sq = l2_norm_sq(mol);
        ds.energy_n = internal_energy(mol, energy);
        ds.grad_energy_sq = grad_energy_norm_from_field(mol, state.particles, energy, ev.gradient_kernel_convolution());
        rec.diagnostics.push_back(ds);
      }
      if (opts.keep_snapshots) rec.snapshots.push_back(std::move(mol));
    }
    rec.fisher_integral.push_back(fisher_int);
    rec.grad_l2_integral.push_back(grad_int);
    for (std::size_t o = 0; o < obs.size(); ++o) {
      rec.observable_values[o].push_back(obs[o].mean);
      rec.observable_martingale[o].push_back(obs[o].martingale);
    }
  };

  std::vector<double> drift(n * std::size_t(d), 0.0);
  auto step = [&](double dt) {
    const bool need_field = !ev.is_zero() || opts.track_integrals;
    if (!ev.is_zero()) {
      ev.evaluate(state.particles, drift);
      for (double v : drift) {
        if (!std::isfinite(v)) throw SimulationError("non-finite drift", state.t, state.step);
        rec.max_drift = std::max(rec.max_drift, std::abs(v));
      }
    }
    if (opts.track_integrals) {
      const DensityField& mol = need_field && !ev.is_zero() ? ev.mollified() : mollify(state.particles, kernel, M);
      fisher_int += dt * fisher_information(mol);
      grad_int += dt * gradient_l2_sq(mol);
    }
    std::vector<double> compensator(obs.size(), 0.0);
    for (std::size_t o = 0; o < obs.size(); ++o) {
      double k2 = 0.0;
      for (int j = 0; j < d; ++j) k2 += double(obs[o].f.k[j] * obs[o].f.k[j]);
      double gen = -kTwoPi * kTwoPi * k2 * obs[o].mean;
      if (!ev.is_zero() && k2 > 0.0) {
        double adv = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const Vec g = obs[o].f.gradient(state.particles.point(i));
          for (int j = 0; j < d; ++j) adv += g[j] * drift[i * std::size_t(d) + std::size_t(j)];
        }
        gen += adv / double(n);
      }
      compensator[o] = gen * dt;
    }
    em_step_inplace(state, drift, dt);
    for (std::size_t o = 0; o < obs.size(); ++o) {
      for (std::size_t i = 0; i < n; ++i) obs[o].phi[i] = obs[o].f.value(state.particles.point(i));
      const double m = mean_of(obs[o].phi);
      obs[o].martingale += m - obs[o].mean - compensator[o];
      obs[o].mean = m;
    }
  };

  std::size_t next = 0;
  while (next < targets.size() && targets[next] <= state.t + 1e-12) {
    record();
    ++next;
  }
  std::vector<double> stops(targets.begin() + std::ptrdiff_t(next), targets.end());
  if (stops.empty() || stops.back() < opts.T - 1e-12) stops.push_back(opts.T);
  for (double stop : stops) {
    const double span_t = stop - state.t;
    if (span_t > 1e-12) {
      const auto steps = std::uint64_t(std::ceil(span_t / opts.dt - 1e-9));
      const double dt = span_t / double(steps);
      for (std::uint64_t k = 0; k < steps; ++k) step(dt);
      state.t = stop;  // remove accumulated round-off
    }
    if (next < targets.size() && std::abs(targets[next] - stop) <= 1e-12) {
      record();
      ++next;
    }
  }
  rec.steps = state.step - start.step;
  rec.final_state = state;
  if (!opts.checkpoint_path.empty()) write_checkpoint(state, opts.checkpoint_path);
  return rec;
}

namespace {
constexpr char kMagic[8] = {'M', 'O', 'D', 'I', 'N', 'T', 'C', 'K'};
}

void write_checkpoint(const SimState& state, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  const std::int64_t n = std::int64_t(state.particles.size());
  const std::int32_t d = state.particles.dimension();
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&d), sizeof d);
  out.write(reinterpret_cast<const char*>(&state.t), sizeof state.t);
  out.write(reinterpret_cast<const char*>(&state.step), sizeof state.step);
  out.write(reinterpret_cast<const char*>(&state.seed), sizeof state.seed);
  const auto& c = state.particles.coords();
  out.write(reinterpret_cast<const char*>(c.data()), std::streamsize(c.size() * sizeof(double)));
}

SimState read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw std::runtime_error("not a checkpoint file");
  std::int64_t n = 0;
  std::int32_t d = 0;
  SimState s;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  in.read(reinterpret_cast<char*>(&d), sizeof d);
  in.read(reinterpret_cast<char*>(&s.t), sizeof s.t);
  in.read(reinterpret_cast<char*>(&s.step), sizeof s.step);
  in.read(reinterpret_cast<char*>(&s.seed), sizeof s.seed);
  if (!in || n < 0 || d < 1 || d > int(kMaxDim)) throw std::runtime_error("malformed checkpoint header");
  std::vector<double> c(std::size_t(n) * std::size_t(d));
  in.read(reinterpret_cast<char*>(c.data()), std::streamsize(c.size() * sizeof(double)));
  if (!in) throw std::runtime_error("truncated checkpoint");
  s.particles = ParticleConfig(d, std::move(c));
  return s;
}

}  // namespace modint
