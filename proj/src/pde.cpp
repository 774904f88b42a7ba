#include "modint/pde.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "modint/convolution.hpp"
#include "modint/measures.hpp"

namespace modint {

namespace {

constexpr double kMassDriftLimit = 1e-4;
constexpr double kNegativeLimit = -1e-6;
constexpr double kClampMassLimit = 1e-10;
constexpr double kLogFloor = 1e-12;

std::size_t axis_stride(int d, std::size_t M, int axis) {
  std::size_t s = 1;
  for (int a = d - 1; a > axis; --a) s *= M;
  return s;
}

// Index of the +1 neighbour along the axis with the given stride.
inline std::size_t up(std::size_t i, std::size_t stride, std::size_t M) {
  return (i / stride) % M + 1 < M ? i + stride : i - (M - 1) * stride;
}

// rho_i -= dt/h (flux(i, i+e) - flux(i-e, i)) summed over axes.
template <class Flux>
void divergence_update(std::vector<double>& rho, int d, std::size_t M, double dt, std::vector<double>& face,
                       Flux&& flux) {
  const std::size_t N = rho.size();
  const double r = dt * double(M);
  std::vector<double> next = rho;
  for (int j = 0; j < d; ++j) {
    const std::size_t st = axis_stride(d, M, j);
    for (std::size_t i = 0; i < N; ++i) face[i] = flux(j, i, up(i, st, M));
    for (std::size_t i = 0; i < N; ++i) {
      const std::size_t u = up(i, st, M);
      next[i] -= r * face[i];
      next[u] += r * face[i];
    }
  }
  rho.swap(next);
}

class Stepper {
 public:
  Stepper(const DensityField& rho0, const PdeOptions& opts, PdeRun& run)
      : d_(rho0.dimension()), M_(rho0.points_per_axis()), h_(rho0.spacing()), cell_(rho0.cell_volume()),
        rho_(rho0.values().begin(), rho0.values().end()), opts_(opts), run_(run) {
    mass0_ = rho0.total_mass();
    run_.dimension = d_;
    run_.M = M_;
    run_.T = opts.T;
    run_.min_value = rho0.min_value();
  }

  double h() const { return h_; }
  int d() const { return d_; }
  std::size_t M() const { return M_; }
  std::vector<double>& rho() { return rho_; }

  template <class Step>
  void run(double dt, Step&& step) {
    std::vector<double> targets = opts_.record_times;
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    for (double t : targets)
      if (t < -1e-12 || t > opts_.T + 1e-12) throw std::invalid_argument("pde: record time outside [0, T]");
    std::size_t next = 0;
    while (next < targets.size() && targets[next] <= 1e-12) {
      record();
      ++next;
    }
    std::vector<double> stops(targets.begin() + std::ptrdiff_t(next), targets.end());
    if (stops.empty() || stops.back() < opts_.T - 1e-12) stops.push_back(opts_.T);
    for (double stop : stops) {
      const double span_t = stop - t_;
      if (span_t > 1e-12) {
        const auto n = std::uint64_t(std::ceil(span_t / dt - 1e-9));
        const double sub = span_t / double(n);
        for (std::uint64_t k = 0; k < n; ++k) {
          l2int_ += sub * l2sq();
          step(rho_, sub);
          ++steps_;
          t_ += sub;
          police();
        }
        t_ = stop;
      }
      if (next < targets.size() && std::abs(targets[next] - stop) <= 1e-12) {
        record();
        ++next;
      }
    }
    run_.steps = steps_;
    run_.final_field = DensityField(d_, M_, rho_);
  }

 private:
  double l2sq() const {
    double s = 0.0;
    for (double v : rho_) s += v * v;
    return s * cell_;
  }

  void police() {
    double mass = 0.0, neg = 0.0, lo = std::numeric_limits<double>::infinity();
    for (double v : rho_) {
      if (!std::isfinite(v)) throw PdeInstability("non-finite density", t_, steps_);
      mass += v;
      lo = std::min(lo, v);
      if (v < 0.0) neg -= v;
    }
    mass *= cell_;
    neg *= cell_;
    run_.min_value = std::min(run_.min_value, lo);
    const double drift = std::abs(mass - mass0_);
    run_.max_mass_drift = std::max(run_.max_mass_drift, drift);
    if (drift > kMassDriftLimit) throw PdeInstability("mass drift " + std::to_string(drift), t_, steps_);
    if (lo < kNegativeLimit) throw PdeInstability("negative density " + std::to_string(lo), t_, steps_);
    if (neg > 0.0) {
      if (neg >= kClampMassLimit) throw PdeInstability("negative mass " + std::to_string(neg), t_, steps_);
      for (double& v : rho_) v = std::max(v, 0.0);
      const double scale = mass0_ / (mass + neg);
      for (double& v : rho_) v *= scale;
    }
  }

  void record() {
    run_.times.push_back(t_);
    DensityField f(d_, M_, rho_);
    run_.mass.push_back(f.total_mass());
    run_.l2_time_integral.push_back(l2int_);
    if (opts_.keep_snapshots) run_.snapshots.push_back(std::move(f));
  }

  int d_;
  std::size_t M_;
  double h_, cell_;
  std::vector<double> rho_;
  const PdeOptions& opts_;
  PdeRun& run_;
  double mass0_ = 1.0;
  double t_ = 0.0;
  double l2int_ = 0.0;
  std::uint64_t steps_ = 0;
};

double choose_dt(const PdeOptions& opts, double bound) {
  if (opts.dt < 0.0) throw std::invalid_argument("pde: negative dt");
  if (opts.T < 0.0) throw std::invalid_argument("pde: negative T");
  if (opts.dt == 0.0) return 0.5 * bound;
  if (opts.dt > bound * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "pde: dt " << opts.dt << " exceeds stability bound " << bound;
    throw std::invalid_argument(os.str());
  }
  return opts.dt;
}

void check_density(const DensityField& rho0) {
  if (rho0.size() == 0) throw std::invalid_argument("pde: empty initial field");
  if (rho0.min_value() < 0.0) throw std::invalid_argument("pde: negative initial density");
}

}  // namespace

std::string to_string(LocalForm f) { return f == LocalForm::kDiffusion ? "diffusion" : "transport"; }

LocalForm parse_local_form(const std::string& s) {
  if (s == "diffusion") return LocalForm::kDiffusion;
  if (s == "transport") return LocalForm::kTransport;
  throw std::invalid_argument("unknown local form '" + s + "'");
}

double PdeRun::dt_bound() const { return std::min(dt_advection_bound, dt_diffusion_bound); }

nlohmann::json PdeRun::manifest() const {
  auto finite = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return "inf";
  };
  return {{"scheme", scheme},
          {"dimension", dimension},
          {"M", M},
          {"T", T},
          {"dt", dt},
          {"steps", steps},
          {"stability_bounds", {{"advection", finite(dt_advection_bound)}, {"diffusion", finite(dt_diffusion_bound)}}},
          {"mass_drift", max_mass_drift},
          {"min_value", min_value},
          {"record_times", times}};
}

PdeInstability::PdeInstability(const std::string& what, double t, std::uint64_t step)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "pde instability: " << what << " (t=" << t << ", step=" << step << ")";
        return os.str();
      }()),
      t_(t),
      step_(step) {}

double advection_time_bound(std::size_t M, double velocity_sup) {
  if (!(velocity_sup > 0.0)) return std::numeric_limits<double>::infinity();
  return 1.0 / (2.0 * double(M) * velocity_sup);
}

double diffusion_time_bound(std::size_t M, int d, double diffusion_sup) {
  const double h = 1.0 / double(M);
  return h * h / (2.0 * double(d) * diffusion_sup);
}

PdeRun solve_nonlocal(const DensityField& rho0, const AdhesionVelocityModel& vm, const PdeOptions& opts) {
  check_density(rho0);
  const int d = rho0.dimension();
  if (vm.b.dimension() != d) throw std::invalid_argument("solve_nonlocal: dimension mismatch");
  const std::size_t M = rho0.points_per_axis();
  PdeRun run;
  run.scheme = "nonlocal/upwind";
  run.dt_advection_bound = advection_time_bound(M, vm.drift_bound());
  run.dt_diffusion_bound = diffusion_time_bound(M, d, 1.0);
  run.dt = choose_dt(opts, run.dt_bound());

  Stepper st(rho0, opts, run);
  const bool zero = vm.is_zero();
  CircularConvolution conv(d, M);
  if (!zero)
    for (int j = 0; j < d; ++j)
      conv.add_kernel(sample_displacement_kernel(d, M, [&](std::span<const double> x) { return vm.b.eval(x)[j]; }));
  const std::size_t N = rho0.size();
  std::vector<double> gval(N), face(N);
  std::vector<std::vector<double>> vel(std::size_t(d), std::vector<double>(N, 0.0));
  const double inv_h = double(M);

  st.run(run.dt, [&](std::vector<double>& rho, double dt) {
    if (!zero) {
      for (std::size_t i = 0; i < N; ++i) gval[i] = vm.g(std::max(rho[i], 0.0));
      conv.load(gval);
      for (int j = 0; j < d; ++j) {
        conv.convolve_loaded(std::size_t(j), vel[std::size_t(j)]);
      }
    }
    divergence_update(rho, d, M, dt, face, [&](int j, std::size_t i, std::size_t u) {
      const auto& v = vel[std::size_t(j)];
      const double vf = 0.5 * (v[i] + v[u]);
      const double adv = vf > 0.0 ? vf * rho[i] : vf * rho[u];
      return adv - (rho[u] - rho[i]) * inv_h;
    });
  });
  return run;
}

PdeRun solve_local(const DensityField& rho0, const EnergyModel& em, LocalForm form, const PdeOptions& opts) {
  check_density(rho0);
  if (!(em.lambda() < 1.0)) throw std::invalid_argument("solve_local: lambda must be below 1");
  const int d = rho0.dimension();
  const std::size_t M = rho0.points_per_axis();
  PdeRun run;
  run.scheme = "local/" + to_string(form);
  if (form == LocalForm::kTransport)
    run.scheme += opts.face == FaceAveraging::kUpwind ? "/upwind" : "/arithmetic";
  run.dt_advection_bound = std::numeric_limits<double>::infinity();
  run.dt_diffusion_bound = diffusion_time_bound(M, d, 1.0 + em.lambda());
  run.dt = choose_dt(opts, run.dt_bound());

  Stepper st(rho0, opts, run);
  const std::size_t N = rho0.size();
  std::vector<double> q(N), face(N);
  const double inv_h = double(M);

  if (form == LocalForm::kDiffusion) {
    st.run(run.dt, [&](std::vector<double>& rho, double dt) {
      for (std::size_t i = 0; i < N; ++i) q[i] = em.P(std::max(rho[i], 0.0));
      divergence_update(rho, d, M, dt, face,
                        [&](int, std::size_t i, std::size_t u) { return -(q[u] - q[i]) * inv_h; });
    });
  } else {
    const bool upwind = opts.face == FaceAveraging::kUpwind;
    st.run(run.dt, [&](std::vector<double>& rho, double dt) {
      for (std::size_t i = 0; i < N; ++i) q[i] = em.dF(std::max(rho[i], kLogFloor));
      divergence_update(rho, d, M, dt, face, [&](int, std::size_t i, std::size_t u) {
        const double vf = -(q[u] - q[i]) * inv_h;
        const double rf = upwind ? (vf > 0.0 ? rho[i] : rho[u]) : 0.5 * (rho[i] + rho[u]);
        return rf * vf;
      });
    });
  }
  return run;
}

GronwallGap gronwall_gap(const AdhesionVelocityModel& vm, const DensityField& rho0_a, const DensityField& rho0_b,
                         const PdeOptions& opts) {
  if (!rho0_a.same_grid(rho0_b)) throw std::invalid_argument("gronwall_gap: initial data on different grids");
  PdeOptions o = opts;
  o.keep_snapshots = true;
  if (o.record_times.empty()) {
    const int k = 20;
    for (int i = 0; i <= k; ++i) o.record_times.push_back(o.T * double(i) / k);
  }
  if (o.dt == 0.0) {
    const std::size_t M = rho0_a.points_per_axis();
    o.dt = 0.5 * std::min(advection_time_bound(M, vm.drift_bound()), diffusion_time_bound(M, rho0_a.dimension(), 1.0));
  }
  const PdeRun a = solve_nonlocal(rho0_a, vm, o);
  const PdeRun b = solve_nonlocal(rho0_b, vm, o);

  GronwallGap gap;
  gap.times = a.times;
  const double base = field_distance(rho0_a, rho0_b, Metric::kL2);
  const double base_sq = base * base;
  for (std::size_t k = 0; k < a.times.size(); ++k) {
    const double dk = field_distance(a.snapshots[k], b.snapshots[k], Metric::kL2);
    gap.ratios.push_back(base_sq > 0.0 ? dk * dk / base_sq : 0.0);
  }
  gap.sup_ratio = gap.ratios.empty() ? 0.0 : *std::max_element(gap.ratios.begin(), gap.ratios.end());

  // ||rho~||²_{L²L²} over [0,T] from the second trajectory, left Riemann sum
  const double l2l2 = b.l2_time_integral.empty() ? 0.0 : b.l2_time_integral.back();
  const double T = o.T;
  const double c = vm.growth_c;
  gap.bound = std::exp((T * c * c + vm.lip_g * vm.lip_g * l2l2) * vm.b_sup * vm.b_sup);
  const double grow = gap.sup_ratio > 1.0 ? std::log(gap.sup_ratio) : 0.0;
  gap.margin = grow > 0.0 ? std::log(gap.bound) / grow : std::numeric_limits<double>::infinity();

  std::ostringstream detail;
  detail << "T=" << T << " c=" << c << " Lip=" << vm.lip_g << " |b|=" << vm.b_sup << " L2L2=" << l2l2;
  gap.report.title = "gronwall_gap";
  gap.report.add("ratio_below_gronwall_factor", gap.sup_ratio <= gap.bound * (1.0 + 1e-12), gap.sup_ratio,
                 gap.bound, detail.str());
  if (vm.is_zero()) {
    bool contracts = true;
    for (std::size_t k = 1; k < gap.ratios.size(); ++k) contracts = contracts && gap.ratios[k] <= gap.ratios[k - 1] + 1e-12;
    gap.report.add("heat_contraction", gap.sup_ratio <= 1.0 + 1e-12 && contracts, gap.sup_ratio, 1.0,
                   "ratio non-increasing and at most 1");
  }
  return gap;
}

void write_pde_run(const PdeRun& run, const std::filesystem::path& dir, bool binary) {
  std::filesystem::create_directories(dir);
  for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
    std::ostringstream name;
    name << "snapshot_" << k << (binary ? ".bin" : ".csv");
    save_field(run.snapshots[k], dir / name.str());
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  out << run.manifest().dump(2) << "\n";
}

}  // namespace modint
