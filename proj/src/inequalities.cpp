#include "modint/inequalities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace modint {

EnsembleStat ensemble_stat(std::span<const double> samples) {
  EnsembleStat s;
  s.count = samples.size();
  if (s.count == 0) return s;
  double sum = 0.0;
  for (double v : samples) sum += v;
  s.mean = sum / double(s.count);
  if (s.count < 2) return s;
  double ss = 0.0;
  for (double v : samples) ss += (v - s.mean) * (v - s.mean);
  s.se = std::sqrt(ss / double(s.count - 1) / double(s.count));
  return s;
}

namespace {

void require_aligned(std::span<const RunRecord> runs, bool diagnostics) {
  if (runs.empty()) throw std::invalid_argument("ensemble check: no runs");
  const auto& t0 = runs.front().times;
  for (const auto& r : runs) {
    if (r.times != t0) throw std::invalid_argument("ensemble check: record times differ between runs");
    if (diagnostics && r.diagnostics.size() != t0.size())
      throw std::invalid_argument("ensemble check: diagnostics missing");
    if (r.fisher_integral.size() != t0.size()) throw std::invalid_argument("ensemble check: time integrals missing");
  }
}

std::size_t particle_count(std::span<const RunRecord> runs) { return runs.front().final_state.particles.size(); }

}  // namespace

Report check_energy_dissipation(std::span<const RunRecord> runs, const EnergyModel& em, const KernelSpec& kernel) {
  require_aligned(runs, true);
  const std::size_t n = particle_count(runs);
  const auto& times = runs.front().times;
  const double lam2 = em.lambda() * em.lambda();
  const int d = kernel.dimension();
  const double rate = kernel.grad_bound_c() * std::pow(double(n), kernel.beta() * (2.0 / d + 1.0) - 1.0);

  Report rep;
  rep.title = "energy_dissipation";
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t worst_k = 0;
  double max_lhs = -std::numeric_limits<double>::infinity();
  std::vector<double> buf(runs.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    for (std::size_t s = 0; s < runs.size(); ++s) {
      const auto& r = runs[s];
      buf[s] = r.diagnostics[k].entropy - r.diagnostics[0].entropy + 0.5 * (1.0 - lam2) * r.fisher_integral[k];
    }
    const auto st = ensemble_stat(buf);
    max_lhs = std::max(max_lhs, st.mean);
    const double excess = st.mean - (times[k] - times[0]) * rate - 3.0 * st.se;
    if (excess > worst) {
      worst = excess;
      worst_k = k;
    }
  }
  std::ostringstream os;
  os << "worst at t=" << times[worst_k] << ", largest mean lhs " << max_lhs << ", remainder rate c n^{beta(2/d+1)-1}=" << rate << ", seeds=" << runs.size();
  rep.add("entropy_dissipation", worst <= 0.0, worst, 0.0, os.str());

  // boundedness ratio of the full energy estimate
  double sup_e = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < times.size(); ++k) {
    for (std::size_t s = 0; s < runs.size(); ++s) buf[s] = runs[s].diagnostics[k].energy_n;
    sup_e = std::max(sup_e, ensemble_stat(buf).mean);
  }
  for (std::size_t s = 0; s < runs.size(); ++s) {
    const auto& r = runs[s];
    double e_int = 0.0;
    for (std::size_t k = 1; k < times.size(); ++k)
      e_int += 0.5 * (times[k] - times[k - 1]) * (r.diagnostics[k].energy_n + r.diagnostics[k - 1].energy_n);
    buf[s] = e_int + r.fisher_integral.back();
  }
  const double integral = ensemble_stat(buf).mean;
  for (std::size_t s = 0; s < runs.size(); ++s) buf[s] = runs[s].diagnostics[0].energy_n;
  const double e0 = ensemble_stat(buf).mean;
  const double ratio = (sup_e + integral) / (e0 + 1.0);
  rep.add("energy_estimate_bounded", std::isfinite(ratio), ratio, std::numeric_limits<double>::infinity(),
          "fitted constant of the full energy estimate");
  return rep;
}

Report check_l2_energy_inequality(std::span<const RunRecord> runs, const KernelSpec& kernel, double drift_bound) {
  require_aligned(runs, true);
  const std::size_t n = particle_count(runs);
  const auto& times = runs.front().times;
  const double T = times.back() - times.front();
  const double sigma = std::sqrt(2.0);
  const double noise = T * sigma * sigma * kernel_grad_norm_sq(kernel) / double(n);
  const double growth = std::exp(2.0 * drift_bound * T / sigma);

  std::vector<double> buf(runs.size());
  for (std::size_t s = 0; s < runs.size(); ++s) buf[s] = runs[s].diagnostics[0].l2sq;
  const auto init = ensemble_stat(buf);
  const double rhs = 2.0 * (init.mean + noise) * growth;

  double sup_lhs = -std::numeric_limits<double>::infinity();
  double se_at_sup = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    for (std::size_t s = 0; s < runs.size(); ++s)
      buf[s] = runs[s].diagnostics[k].l2sq + 0.5 * sigma * runs[s].grad_l2_integral[k];
    const auto st = ensemble_stat(buf);
    if (st.mean > sup_lhs) {
      sup_lhs = st.mean;
      se_at_sup = st.se;
    }
  }
  const double allowance = 3.0 * std::hypot(se_at_sup, 2.0 * growth * init.se);
  Report rep;
  rep.title = "l2_energy_inequality";
  std::ostringstream os;
  os << "rhs=" << rhs << " allowance=" << allowance << " noise term=" << noise << " seeds=" << runs.size();
  rep.add("l2_energy_inequality", sup_lhs <= rhs + allowance, sup_lhs, rhs + allowance, os.str());
  return rep;
}

}  // namespace modint
