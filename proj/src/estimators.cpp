#include "stochchain/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "stochchain/errors.hpp"

namespace stochchain::est {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::uint64_t kHistogramBlock = 1ULL << 18;

double wrap_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  return r >= kTwoPi ? 0.0 : r;
}

double standard_normal(Substream& stream) {
  std::normal_distribution<double> normal;
  return normal(stream);
}

double uniform_in(Substream& stream, double lo, double hi) {
  return lo + (hi - lo) * stream.uniform();
}

// ln(1 + x) - x / (1 + x) without cancellation for small x.
double log1p_minus_ratio(double x) {
  if (x < 1e-3) {
    double term = x * x;
    double sum = 0.0;
    for (int j = 2; j <= 8; ++j) {
      sum += (j % 2 == 0 ? 1.0 : -1.0) * term * (1.0 - 1.0 / j);
      term *= x;
    }
    return sum;
  }
  return std::log1p(x) - x / (1.0 + x);
}

struct MultiStats {
  std::vector<RunningStats> stats;
  void merge(const MultiStats& other) {
    for (std::size_t i = 0; i < stats.size(); ++i) stats[i].merge(other.stats[i]);
  }
};

// --- Gaussian mean --------------------------------------------------------

ChainDraw draw_gaussian(const GaussianMeanProcess& g, int k, Substream& stream) {
  const auto params = g.params();
  const auto cur = gaussian::level_algebra(params, k, g.ratio);
  const auto prev = gaussian::level_algebra(params, k - 1, g.ratio);
  const double mean_sd = g.sigma / std::sqrt(static_cast<double>(g.n));
  const double w = g.mu + mean_sd * standard_normal(stream);
  const double noise_k = std::sqrt(cur.sigma_k_sq) * standard_normal(stream);
  const double step = std::sqrt(prev.sigma_k_sq - cur.sigma_k_sq) * standard_normal(stream);
  const double u = w - g.mu + noise_k;
  const double w_k = g.mu + cur.alpha_k * u;
  const double w_km1 = g.mu + prev.alpha_k * (u + step);
  // gen(w_k) - gen(w_{k-1}) = 2 (w_k - w_{k-1}) (Zbar - mu), and Zbar = W.
  return {w, w, w_k, w_km1, 2.0 * (w_k - w_km1) * (w - g.mu)};
}

// Population risk sigma^2 + (w - mu)^2 minus the empirical risk on z.
double gaussian_gen(const GaussianMeanProcess& g, const std::vector<double>& z, double w) {
  double empirical = 0.0;
  for (double zi : z) empirical += (w - zi) * (w - zi);
  empirical /= static_cast<double>(z.size());
  return g.sigma * g.sigma + (w - g.mu) * (w - g.mu) - empirical;
}

std::vector<double> gaussian_data(const GaussianMeanProcess& g, Substream& stream) {
  std::vector<double> z(static_cast<std::size_t>(g.n));
  for (auto& zi : z) zi = g.mu + g.sigma * standard_normal(stream);
  return z;
}

// --- Phase retrieval ------------------------------------------------------

struct PhaseData {
  double g1;
  double g2;
  double phase;
  double w;
};

PhaseData phase_data(const PhaseRetrievalProcess& p, Substream& stream) {
  const double g1 = standard_normal(stream);
  const double g2 = standard_normal(stream);
  const double phase = wrap_angle(std::atan2(g2, g1));
  const double zeta = stream.uniform() < p.epsilon ? 0.0 : kTwoPi * stream.uniform();
  return {g1, g2, phase, wrap_angle(phase + zeta)};
}

double inner(double angle, double g1, double g2) {
  return std::cos(angle) * g1 + std::sin(angle) * g2;
}

ChainDraw draw_phase(const PhaseRetrievalProcess& p, int k, Substream& stream) {
  if (k < 0) throw PreconditionError("phase chain levels start at k = 0");
  const auto d = phase_data(p, stream);
  // N_k = sum_{i > k} N'_i, stopped once the arcs are below double resolution.
  double noise = 0.0;
  for (int i = k + 1;; ++i) {
    const double half = std::pow(p.gamma, -i) * std::numbers::pi;
    if (half < 1e-13) break;
    noise += uniform_in(stream, -half, half);
  }
  const double half_k = std::pow(p.gamma, -k) * std::numbers::pi;
  const double w_k = wrap_angle(d.w + noise);
  const double w_km1 = wrap_angle(w_k + uniform_in(stream, -half_k, half_k));
  return {d.phase, d.w, w_k, w_km1, inner(w_k, d.g1, d.g2) - inner(w_km1, d.g1, d.g2)};
}

template <typename... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <typename... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

}  // namespace

McEstimate to_estimate(const RunningStats& stats, std::uint64_t seed) {
  return {stats.mean, stats.std_error(), static_cast<std::uint64_t>(stats.count), seed};
}

std::string describe(const ProcessSampler& sampler) {
  return std::visit(Overloaded{
                        [](const GaussianMeanProcess& g) {
                          return "gaussian_mean(mu=" + std::to_string(g.mu) +
                                 ", sigma=" + std::to_string(g.sigma) +
                                 ", n=" + std::to_string(g.n) + ")";
                        },
                        [](const PhaseRetrievalProcess& p) {
                          return "phase_retrieval(epsilon=" + std::to_string(p.epsilon) +
                                 ", gamma=" + std::to_string(p.gamma) + ")";
                        },
                    },
                    sampler);
}

ChainDraw draw_chain(const ProcessSampler& sampler, int k, Substream& stream) {
  return std::visit(
      Overloaded{
          [&](const GaussianMeanProcess& g) { return draw_gaussian(g, k, stream); },
          [&](const PhaseRetrievalProcess& p) { return draw_phase(p, k, stream); },
      },
      sampler);
}

double draw_generalization(const ProcessSampler& sampler, Substream& stream) {
  return std::visit(Overloaded{
                        [&](const GaussianMeanProcess& g) {
                          const auto z = gaussian_data(g, stream);
                          double w = 0.0;
                          for (double zi : z) w += zi;
                          w /= static_cast<double>(z.size());
                          return gaussian_gen(g, z, w);
                        },
                        [&](const PhaseRetrievalProcess& p) {
                          // Population risk is 0; gen = -empirical = <t(W), Z>.
                          const auto d = phase_data(p, stream);
                          return inner(d.w, d.g1, d.g2);
                        },
                    },
                    sampler);
}

McEstimate mc_generalization(const ProcessSampler& sampler, std::uint64_t trials,
                             std::uint64_t seed, unsigned threads) {
  if (trials < 100) throw PreconditionError("mc_generalization: needs at least 100 trials");
  std::visit(Overloaded{[](const GaussianMeanProcess& g) { gaussian::validate(g.params()); },
                        [](const PhaseRetrievalProcess& p) { phase::validate(p.params()); }},
             sampler);
  const auto stats = run_trials(
      trials, seed, RunningStats{},
      [&](Substream& s, RunningStats& acc) { acc.add(draw_generalization(sampler, s)); },
      threads);
  return to_estimate(stats, seed);
}

// --- Histograms -----------------------------------------------------------

int Axis::index(double v) const {
  const double t = (v - lo) / (hi - lo) * bins;
  if (!(t >= 0.0)) return 0;
  return std::min(bins - 1, static_cast<int>(t));
}

JointHistogram::JointHistogram(Axis x, Axis y)
    : x_(x), y_(y), counts_(static_cast<std::size_t>(x.bins) * y.bins, 0) {
  if (x.bins < 1 || y.bins < 1 || !(x.hi > x.lo) || !(y.hi > y.lo)) {
    throw PreconditionError("histogram axes need bins >= 1 and hi > lo");
  }
}

void JointHistogram::add(double x, double y) {
  ++counts_[static_cast<std::size_t>(x_.index(x)) * y_.bins + y_.index(y)];
  ++total_;
}

void JointHistogram::merge(const JointHistogram& other) {
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  total_ += other.total_;
}

double JointHistogram::mutual_information() const {
  if (total_ == 0) return 0.0;
  const double n = static_cast<double>(total_);
  std::vector<double> px(static_cast<std::size_t>(x_.bins), 0.0);
  std::vector<double> py(static_cast<std::size_t>(y_.bins), 0.0);
  for (int i = 0; i < x_.bins; ++i) {
    for (int j = 0; j < y_.bins; ++j) {
      const double c = static_cast<double>(counts_[static_cast<std::size_t>(i) * y_.bins + j]);
      px[i] += c;
      py[j] += c;
    }
  }
  double mi = 0.0;
  for (int i = 0; i < x_.bins; ++i) {
    for (int j = 0; j < y_.bins; ++j) {
      const double c = static_cast<double>(counts_[static_cast<std::size_t>(i) * y_.bins + j]);
      if (c == 0.0) continue;
      mi += c / n * std::log(c * n / (px[i] * py[j]));
    }
  }
  return std::max(0.0, mi);
}

double histogram_mi(std::span<const double> x, std::span<const double> y, Axis ax, Axis ay) {
  if (x.size() != y.size()) throw DomainError("histogram_mi: sample lengths differ");
  if (x.size() < 10000) throw PreconditionError("histogram_mi: needs at least 10^4 pairs");
  if (ax.bins < 8 || ay.bins < 8) throw PreconditionError("histogram_mi: needs bins >= 8");
  JointHistogram hist(ax, ay);
  for (std::size_t i = 0; i < x.size(); ++i) hist.add(x[i], y[i]);
  return hist.mutual_information();
}

double histogram_mi(std::span<const double> x, std::span<const double> y, int bins) {
  if (x.size() != y.size()) throw DomainError("histogram_mi: sample lengths differ");
  if (x.empty()) throw PreconditionError("histogram_mi: needs at least 10^4 pairs");
  auto axis_of = [bins](std::span<const double> v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double pad = *hi > *lo ? 1e-9 * (*hi - *lo) : 0.5;
    return Axis{*lo, *hi + pad, bins};
  };
  return histogram_mi(x, y, axis_of(x), axis_of(y));
}

double histogram_entropy(std::span<const double> samples, Axis axis) {
  if (samples.empty()) throw PreconditionError("histogram_entropy: no samples");
  std::vector<double> counts(static_cast<std::size_t>(axis.bins), 0.0);
  for (double v : samples) counts[static_cast<std::size_t>(axis.index(v))] += 1.0;
  const double n = static_cast<double>(samples.size());
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) h -= c / n * std::log(c / (n * axis.width()));
  }
  return h;
}

double level_mi_estimate(const ProcessSampler& sampler, int k, MiPair pair,
                         std::uint64_t samples, std::uint64_t seed, int bins, unsigned threads) {
  const auto [data_axis, level_axis] = std::visit(
      Overloaded{
          [&](const GaussianMeanProcess& g) {
            const double sd = g.sigma / std::sqrt(static_cast<double>(g.n));
            const double level_sd = sd * std::sqrt(gaussian::level_algebra(g.params(), k, g.ratio).alpha_k);
            return std::pair{Axis{g.mu - 6.0 * sd, g.mu + 6.0 * sd, bins},
                             Axis{g.mu - 6.0 * level_sd, g.mu + 6.0 * level_sd, bins}};
          },
          [&](const PhaseRetrievalProcess&) {
            return std::pair{Axis{0.0, kTwoPi, bins}, Axis{0.0, kTwoPi, bins}};
          },
      },
      sampler);
  const auto hist = run_trials(
      samples, seed, JointHistogram(data_axis, level_axis),
      [&](Substream& s, JointHistogram& acc) {
        const auto d = draw_chain(sampler, k, s);
        acc.add(pair == MiPair::data_vs_level ? d.data : d.w, d.w_k);
      },
      threads, kHistogramBlock);
  return hist.mutual_information();
}

// --- MGF ------------------------------------------------------------------

std::string_view to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::inconclusive: return "inconclusive";
  }
  return "unknown";
}

double process_metric(const ProcessSampler& sampler, double w, double v) {
  return std::visit(Overloaded{
                        [&](const GaussianMeanProcess& g) {
                          return std::sqrt(gaussian::metric_sq(g.params(), w, v));
                        },
                        [&](const PhaseRetrievalProcess&) {
                          const double diff = wrap_angle(w - v);
                          return std::min(diff, kTwoPi - diff);
                        },
                    },
                    sampler);
}

std::vector<MgfCheck> mgf_subgaussian_check(const ProcessSampler& sampler,
                                            std::pair<double, double> pair,
                                            std::span<const double> lambda_grid,
                                            std::uint64_t trials, std::uint64_t seed,
                                            unsigned threads) {
  const auto [w, v] = pair;
  const double d = process_metric(sampler, w, v);
  if (!(d > 0.0)) throw PreconditionError("mgf check: d(w, v) must be positive");
  if (trials < 10000) throw PreconditionError("mgf check: needs at least 10^4 trials");
  for (double l : lambda_grid) {
    if (!(l >= 0.0)) throw PreconditionError("mgf check: lambda must be >= 0");
  }

  auto increment = [&](Substream& s) {
    return std::visit(Overloaded{
                          [&](const GaussianMeanProcess& g) {
                            const auto z = gaussian_data(g, s);
                            return gaussian_gen(g, z, w) - gaussian_gen(g, z, v);
                          },
                          [&](const PhaseRetrievalProcess& p) {
                            const auto data = phase_data(p, s);
                            return inner(w, data.g1, data.g2) - inner(v, data.g1, data.g2);
                          },
                      },
                      sampler);
  };
  MultiStats empty{std::vector<RunningStats>(lambda_grid.size())};
  const auto stats = run_trials(
      trials, seed, empty,
      [&](Substream& s, MultiStats& acc) {
        const double x = increment(s);
        for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
          acc.stats[i].add(std::exp(lambda_grid[i] * x));
        }
      },
      threads);

  std::vector<MgfCheck> out;
  out.reserve(lambda_grid.size());
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    const double l = lambda_grid[i];
    const double empirical = stats.stats[i].mean;
    const double se = stats.stats[i].std_error();
    const double ceiling = std::exp(0.5 * l * l * d * d);
    CheckStatus status;
    if (se > 0.5 * empirical) {
      status = CheckStatus::inconclusive;
    } else {
      status = empirical <= ceiling + 5.0 * se ? CheckStatus::pass : CheckStatus::fail;
    }
    out.push_back({l, empirical, se, ceiling, status});
  }
  return out;
}

// --- DV direction ---------------------------------------------------------

DvReport dv_check(int k, double link_dist_sq, double mi,
                  const std::function<double(Substream&)>& increment, std::uint64_t trials,
                  std::uint64_t seed, unsigned threads) {
  if (trials < 100) throw PreconditionError("dv check: needs at least 100 trials");
  const auto stats = run_trials(
      trials, seed, RunningStats{},
      [&](Substream& s, RunningStats& acc) { acc.add(increment(s)); }, threads);
  const double rhs = std::sqrt(link_dist_sq) * std::sqrt(2.0 * mi);
  const auto estimate = to_estimate(stats, seed);
  return {k, estimate, link_dist_sq, mi, rhs,
          estimate.value <= rhs + 5.0 * estimate.std_error};
}

DvReport dv_direction_check(const ProcessSampler& sampler, int level_k, std::uint64_t trials,
                            std::uint64_t seed, unsigned threads) {
  const auto [link_sq, mi] = std::visit(
      Overloaded{
          [&](const GaussianMeanProcess& g) {
            const auto params = g.params();
            const double link = g.ratio == 2.0 ? gaussian::link_dist_sq_bound(params, level_k)
                                               : gaussian::link_dist_sq_exact(params, level_k, g.ratio);
            return std::pair{link, gaussian::mi_level(level_k, g.ratio)};
          },
          [&](const PhaseRetrievalProcess& p) {
            if (level_k < 0) throw PreconditionError("phase chain levels start at k = 0");
            const double arc = phase::link_length(p.params(), level_k);
            return std::pair{arc * arc, phase::mi_level_upper(p.params(), level_k)};
          },
      },
      sampler);
  return dv_check(
      level_k, link_sq, mi,
      [&](Substream& s) { return draw_chain(sampler, level_k, s).increment; }, trials, seed,
      threads);
}

// --- Kolmogorov-Smirnov ---------------------------------------------------

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw PreconditionError("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  // Asymptotic Kolmogorov distribution with the Stephens small-sample correction.
  const double ne = std::sqrt(na * nb / (na + nb));
  const double lambda = (ne + 0.12 + 0.11 / ne) * d;
  double p = 0.0;
  if (lambda < 0.2) {
    p = 1.0;
  } else {
    for (int k = 1; k <= 100; ++k) {
      const double term = std::exp(-2.0 * k * k * lambda * lambda);
      p += (k % 2 == 1 ? 2.0 : -2.0) * term;
      if (term < 1e-16) break;
    }
    p = std::clamp(p, 0.0, 1.0);
  }
  return {d, p};
}

KsResult gaussian_chain_marginal_ks(const GaussianMeanProcess& process, int k,
                                    std::uint64_t samples, std::uint64_t seed) {
  const auto params = process.params();
  const auto cur = gaussian::level_algebra(params, k, process.ratio);
  const auto prev = gaussian::level_algebra(params, k - 1, process.ratio);
  const double mean_sd = process.sigma / std::sqrt(static_cast<double>(process.n));
  std::vector<double> via_chain(samples);
  std::vector<double> direct(samples);
  for (std::uint64_t i = 0; i < samples; ++i) {
    Substream chain_stream(seed, 2 * i);
    const double w = process.mu + mean_sd * standard_normal(chain_stream);
    const double noise_k = std::sqrt(cur.sigma_k_sq) * standard_normal(chain_stream);
    const double w_k = process.mu + cur.alpha_k * (w - process.mu + noise_k);
    const double step = std::sqrt(prev.sigma_k_sq - cur.sigma_k_sq) * standard_normal(chain_stream);
    via_chain[i] = process.mu + prev.alpha_k / cur.alpha_k * (w_k - process.mu) + prev.alpha_k * step;

    Substream direct_stream(seed, 2 * i + 1);
    const double w2 = process.mu + mean_sd * standard_normal(direct_stream);
    const double noise_km1 = std::sqrt(prev.sigma_k_sq) * standard_normal(direct_stream);
    direct[i] = process.mu + prev.alpha_k * (w2 - process.mu + noise_km1);
  }
  return ks_two_sample(std::move(via_chain), std::move(direct));
}

// --- KL-form terms --------------------------------------------------------

KlChainEstimate gaussian_kl_chain(const gaussian::GaussianParams& params,
                                  std::uint64_t trials_per_level, std::uint64_t seed,
                                  unsigned threads) {
  if (trials_per_level < 100) throw PreconditionError("gaussian_kl_chain: needs >= 100 trials");
  const auto window = gaussian::bound_thm1(params);
  const double mean_var = params.sigma * params.sigma / params.n;
  const GaussianMeanProcess process{params.mu, params.sigma, params.n, 2.0};

  KlChainEstimate out;
  out.chain.k_start = std::nullopt;
  out.chain.truncation = gaussian::default_truncation(params);
  out.chain.label = "gaussian_mean/kl";
  double var_sum = 0.0;
  for (const auto& [k, contribution] : window.per_level) {
    const auto algebra = gaussian::level_algebra(params, k);
    const double x = std::ldexp(1.0, k);
    const double base = log1p_minus_ratio(x);
    const std::uint64_t level_seed = seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(k + 4096));
    const auto stats = run_trials(
        trials_per_level, level_seed, RunningStats{},
        [&](Substream& s, RunningStats& acc) {
          const auto draw = draw_gaussian(process, k, s);
          const double u = (draw.w_k - params.mu) / algebra.alpha_k;
          // D(N(alpha U, s^2 (1 - alpha)) || N(0, s^2)) for the centred mean.
          const double kl =
              std::max(0.0, 0.5 * (base + algebra.alpha_k * algebra.alpha_k * u * u / mean_var));
          const double d = std::sqrt(gaussian::metric_sq(params, draw.w_k, draw.w_km1));
          acc.add(d * std::sqrt(2.0 * kl));
        },
        threads);
    out.chain.levels.push_back(
        {k, gaussian::link_dist_sq_bound(params, k), gaussian::mi_level(k), stats.mean});
    out.std_errors.push_back(stats.std_error());
    var_sum += stats.variance() / stats.count;
  }
  out.total_std_error = std::sqrt(var_sum);
  return out;
}

}  // namespace stochchain::est
