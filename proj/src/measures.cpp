#include "modint/measures.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "modint/convolution.hpp"
#include "modint/rng.hpp"

namespace modint {

ParticleConfig sample_iid(const DensityField& density, std::size_t n, std::uint64_t seed) {
  const int d = density.dimension();
  std::vector<double> cumulative(density.size());
  double total = 0.0;
  for (std::size_t i = 0; i < density.size(); ++i) {
    if (density[i] < 0.0) throw std::invalid_argument("sample_iid: density has negative values");
    total += density[i];
    cumulative[i] = total;
  }
  if (!(total > 0.0)) throw std::invalid_argument("sample_iid: density has zero total mass");

  const double h = density.spacing();
  std::vector<double> coords(n * std::size_t(d));
  std::array<double, 2 * kMaxDim> u{};
  for (std::size_t i = 0; i < n; ++i) {
    // one uniform for the cell, d for the position inside it
    for (std::uint32_t block = 0; 2 * block < std::uint32_t(d) + 1; ++block) {
      const auto pair = uniform_pair(draw(seed, StreamTag::kInitialSample, i, 0, block));
      u[2 * block] = pair[0];
      u[2 * block + 1] = pair[1];
    }
    const double target = u[0] * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    std::size_t cell = std::size_t(it - cumulative.begin());
    if (cell >= density.size()) cell = density.size() - 1;
    while (density[cell] == 0.0 && cell > 0) --cell;  // guard against the target landing on a flat step
    const Vec centre = density.node(cell);
    for (int j = 0; j < d; ++j) coords[i * std::size_t(d) + std::size_t(j)] = centre[j] + (u[1 + j] - 0.5) * h;
  }
  return ParticleConfig(d, std::move(coords));
}

std::size_t min_resolving_points(const KernelSpec& kernel) {
  const double m = 8.0 * kernel.scale();
  // tolerate round-off in n^{beta/d} so that exact integers are not bumped
  return std::size_t(std::ceil(m * (1.0 - 1e-12)));
}

void require_resolved(const KernelSpec& kernel, std::size_t M) {
  const double h = 1.0 / double(M);
  if (h > kernel.support_halfwidth() / 4.0 * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "grid M=" << M << " does not resolve kernel support (halfwidth " << kernel.support_halfwidth()
       << "); need M >= " << min_resolving_points(kernel);
    throw GridResolutionError(os.str());
  }
}

namespace {

struct AxisStencil {
  std::vector<long> index;
  std::vector<double> weight;
};

// Nodes along one axis within the kernel support of coordinate x, with the
// one-dimensional profile values phi(scale * (x - node)).
void axis_stencil(double x, std::size_t M, const KernelSpec& kernel, AxisStencil& st) {
  st.index.clear();
  st.weight.clear();
  const double h = 1.0 / double(M);
  const double hw = kernel.support_halfwidth();
  const long r = long(std::ceil(hw / h));
  if (2 * r + 2 >= long(M)) {
    for (long k = 0; k < long(M); ++k) {
      const double w = bump_profile(kernel.scale() * wrap(x - (-0.5 + (double(k) + 0.5) * h)));
      if (w != 0.0) {
        st.index.push_back(k);
        st.weight.push_back(w);
      }
    }
    return;
  }
  const long k0 = long(std::floor((x + 0.5) / h - 0.5));
  for (long k = k0 - r; k <= k0 + r + 1; ++k) {
    const double w = bump_profile(kernel.scale() * wrap(x - (-0.5 + (double(k) + 0.5) * h)));
    if (w != 0.0) {
      st.index.push_back(((k % long(M)) + long(M)) % long(M));
      st.weight.push_back(w);
    }
  }
}

// Cloud-in-cell / multilinear weights along one axis.
struct LinearWeights {
  std::array<long, 2> index;
  std::array<double, 2> weight;
};

LinearWeights linear_weights(double x, std::size_t M) {
  const double s = (x + 0.5) * double(M) - 0.5;
  const double fl = std::floor(s);
  const double frac = s - fl;
  const long m = long(M);
  long k = long(fl) % m;
  if (k < 0) k += m;
  return {{k, (k + 1) % m}, {1.0 - frac, frac}};
}

DensityField mollify_direct(const ParticleConfig& particles, const KernelSpec& kernel, std::size_t M) {
  const int d = particles.dimension();
  DensityField out(d, M);
  const std::size_t n = particles.size();
  if (n == 0) return out;
  auto vals = out.values();
  const double amp = kernel.amplitude() / double(n);
  std::array<AxisStencil, kMaxDim> st;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = particles.point(i);
    for (int j = 0; j < d; ++j) axis_stencil(x[j], M, kernel, st[j]);
    if (d == 1) {
      for (std::size_t a = 0; a < st[0].index.size(); ++a) vals[std::size_t(st[0].index[a])] += amp * st[0].weight[a];
    } else if (d == 2) {
      for (std::size_t a = 0; a < st[0].index.size(); ++a) {
        const std::size_t row = std::size_t(st[0].index[a]) * M;
        const double wa = amp * st[0].weight[a];
        for (std::size_t b = 0; b < st[1].index.size(); ++b) vals[row + std::size_t(st[1].index[b])] += wa * st[1].weight[b];
      }
    } else {
      for (std::size_t a = 0; a < st[0].index.size(); ++a)
        for (std::size_t b = 0; b < st[1].index.size(); ++b) {
          const std::size_t row = (std::size_t(st[0].index[a]) * M + std::size_t(st[1].index[b])) * M;
          const double wab = amp * st[0].weight[a] * st[1].weight[b];
          for (std::size_t c = 0; c < st[2].index.size(); ++c) vals[row + std::size_t(st[2].index[c])] += wab * st[2].weight[c];
        }
    }
  }
  return out;
}

DensityField deposit_cic(const ParticleConfig& particles, std::size_t M) {
  const int d = particles.dimension();
  DensityField hist(d, M);
  const std::size_t n = particles.size();
  if (n == 0) return hist;
  const double unit = 1.0 / (double(n) * hist.cell_volume());
  std::array<LinearWeights, kMaxDim> lw{};
  std::array<long, kMaxDim> idx{};
  const std::size_t corners = std::size_t(1) << d;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = particles.point(i);
    for (int j = 0; j < d; ++j) lw[j] = linear_weights(x[j], M);
    for (std::size_t c = 0; c < corners; ++c) {
      double w = unit;
      for (int j = 0; j < d; ++j) {
        const int bit = int((c >> j) & 1u);
        idx[j] = lw[j].index[bit];
        w *= lw[j].weight[bit];
      }
      hist[hist.flat_index(std::span<const long>(idx.data(), std::size_t(d)))] += w;
    }
  }
  return hist;
}

}  // namespace

DensityField mollify(const ParticleConfig& particles, const KernelSpec& kernel, std::size_t M, MollifyMethod method) {
  if (particles.dimension() != kernel.dimension()) throw std::invalid_argument("mollify: dimension mismatch");
  require_resolved(kernel, M);
  if (method == MollifyMethod::kDirect) return mollify_direct(particles, kernel, M);

  const int d = particles.dimension();
  DensityField hist = deposit_cic(particles, M);
  CircularConvolution conv(d, M);
  conv.add_kernel(sample_displacement_kernel(d, M, [&](std::span<const double> x) { return kernel.eval(x); }));
  DensityField out(d, M);
  conv.apply(hist.values(), out.values());
  return out;
}

double eval_field_at(const DensityField& field, std::span<const double> point) {
  const int d = field.dimension();
  const std::size_t M = field.points_per_axis();
  std::array<LinearWeights, kMaxDim> lw{};
  std::array<long, kMaxDim> idx{};
  for (int j = 0; j < d; ++j) lw[j] = linear_weights(wrap(point[j]), M);
  double v = 0.0;
  const std::size_t corners = std::size_t(1) << d;
  for (std::size_t c = 0; c < corners; ++c) {
    double w = 1.0;
    for (int j = 0; j < d; ++j) {
      const int bit = int((c >> j) & 1u);
      idx[j] = lw[j].index[bit];
      w *= lw[j].weight[bit];
    }
    if (w != 0.0) v += w * field[field.flat_index(std::span<const long>(idx.data(), std::size_t(d)))];
  }
  return v;
}

std::vector<double> eval_field_at(const DensityField& field, const ParticleConfig& points) {
  std::vector<double> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = eval_field_at(field, points.point(i));
  return out;
}

Metric parse_metric(const std::string& name) {
  if (name == "L1") return Metric::kL1;
  if (name == "L2") return Metric::kL2;
  if (name == "W1" || name == "W1_1d") return Metric::kW1;
  throw std::invalid_argument("unknown metric '" + name + "'");
}

std::string to_string(Metric m) {
  switch (m) {
    case Metric::kL1: return "L1";
    case Metric::kL2: return "L2";
    case Metric::kW1: return "W1";
  }
  return "?";
}

namespace {

// Circle W1 = min_m int |D(x) - m| dx where D is the running integral of
// f - g, piecewise linear between cell edges; the minimiser is a median of D.
double circle_w1(const DensityField& f, const DensityField& g) {
  const std::size_t M = f.points_per_axis();
  const double h = f.spacing();
  std::vector<double> D(M + 1, 0.0);
  for (std::size_t i = 0; i < M; ++i) D[i + 1] = D[i] + h * (f[i] - g[i]);
  if (std::abs(D[M]) > 1e-6) throw std::invalid_argument("W1: fields carry different total mass");
  // remove the residual so D is exactly periodic
  for (std::size_t i = 0; i <= M; ++i) D[i] -= D[M] * double(i) / double(M);

  auto below = [&](double m) {
    double len = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
      const double a = D[i], b = D[i + 1];
      if (a == b)
        len += a < m ? h : 0.0;
      else
        len += h * std::clamp((m - std::min(a, b)) / std::abs(b - a), 0.0, 1.0);
    }
    return len;
  };
  double lo = *std::min_element(D.begin(), D.end());
  double hi = *std::max_element(D.begin(), D.end());
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (below(mid) < 0.5)
      lo = mid;
    else
      hi = mid;
  }
  const double m = 0.5 * (lo + hi);
  double total = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    const double a = D[i] - m, b = D[i + 1] - m;
    if (a * b >= 0.0)
      total += h * std::abs(0.5 * (a + b));
    else
      total += h * (a * a + b * b) / (2.0 * std::abs(b - a));
  }
  return total;
}

}  // namespace

double field_distance(const DensityField& f, const DensityField& g, Metric metric) {
  if (!f.same_grid(g)) throw std::invalid_argument("field_distance: fields live on different grids");
  switch (metric) {
    case Metric::kL1: {
      double s = 0.0;
      for (std::size_t i = 0; i < f.size(); ++i) s += std::abs(f[i] - g[i]);
      return s * f.cell_volume();
    }
    case Metric::kL2: {
      double s = 0.0;
      for (std::size_t i = 0; i < f.size(); ++i) s += (f[i] - g[i]) * (f[i] - g[i]);
      return std::sqrt(s * f.cell_volume());
    }
    case Metric::kW1:
      if (f.dimension() != 1) throw std::invalid_argument("W1 distance is only available in d = 1");
      return circle_w1(f, g);
  }
  return 0.0;
}

namespace {
double sample_variance(const std::vector<std::vector<double>>& rows, std::size_t k) {
  const std::size_t m = rows.size();
  if (m < 2) return 0.0;
  double mean = 0.0;
  for (const auto& r : rows) mean += r[k];
  mean /= double(m);
  double s = 0.0;
  for (const auto& r : rows) s += (r[k] - mean) * (r[k] - mean);
  return s / double(m - 1);
}
}  // namespace

double FluctuationRecord::value_variance(std::size_t k) const { return sample_variance(values, k); }
double FluctuationRecord::martingale_variance(std::size_t k) const { return sample_variance(martingale, k); }

}  // namespace modint
