#pragma once

// Monte Carlo and histogram estimators that check the closed-form quantities
// of the example modules from samples.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "stochchain/chain_core.hpp"
#include "stochchain/gaussian_mean.hpp"
#include "stochchain/phase_retrieval.hpp"
#include "stochchain/rng.hpp"

namespace stochchain::est {

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
};

McEstimate to_estimate(const RunningStats& stats, std::uint64_t seed);

struct GaussianMeanProcess {
  double mu = 0.0;
  double sigma = 1.0;
  int n = 10;
  // Noise-variance ratio between consecutive chain levels.
  double ratio = 2.0;

  gaussian::GaussianParams params() const { return {mu, sigma, n}; }
};

struct PhaseRetrievalProcess {
  double epsilon = 0.05;
  double gamma = 3.75;

  phase::PhaseParams params() const { return {epsilon, gamma}; }
};

using ProcessSampler = std::variant<GaussianMeanProcess, PhaseRetrievalProcess>;

std::string describe(const ProcessSampler& sampler);

/// One draw of the chain at level k together with the learned hypothesis.
/// `data` is the statistic the hypothesis is learned from (the sample mean,
/// or the phase of Z); `increment` is X_{W_k} - X_{W_{k-1}}.
struct ChainDraw {
  double data;
  double w;
  double w_k;
  double w_km1;
  double increment;
};

ChainDraw draw_chain(const ProcessSampler& sampler, int k, Substream& stream);

/// gen_Z(W) for one simulated data set.
double draw_generalization(const ProcessSampler& sampler, Substream& stream);

/// Average of gen_Z(W) over independent trials (trials >= 100).
McEstimate mc_generalization(const ProcessSampler& sampler, std::uint64_t trials,
                             std::uint64_t seed, unsigned threads = 0);

// ---------------------------------------------------------------------------
// Histograms.

struct Axis {
  double lo;
  double hi;
  int bins;

  int index(double v) const;
  double width() const { return (hi - lo) / bins; }
};

class JointHistogram {
 public:
  JointHistogram(Axis x, Axis y);

  void add(double x, double y);
  void merge(const JointHistogram& other);
  std::uint64_t total() const { return total_; }

  /// Plug-in mutual information in nats; empty cells contribute nothing.
  double mutual_information() const;

 private:
  Axis x_;
  Axis y_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

/// Plug-in MI of paired samples on a bins x bins grid spanning the data range.
/// Needs >= 10^4 pairs and bins >= 8.
double histogram_mi(std::span<const double> x, std::span<const double> y, int bins = 64);
double histogram_mi(std::span<const double> x, std::span<const double> y, Axis ax, Axis ay);

/// Differential entropy estimate -sum p log(p / width) from a 1-D histogram.
double histogram_entropy(std::span<const double> samples, Axis axis);

/// Which pair a level-MI estimate is taken over: (data, W_k) or (W, W_k).
enum class MiPair { data_vs_level, learned_vs_level };

/// Histogram estimate of the MI between W_k and the data statistic (or W),
/// streamed over `samples` chain draws.
double level_mi_estimate(const ProcessSampler& sampler, int k, MiPair pair,
                         std::uint64_t samples, std::uint64_t seed, int bins = 64,
                         unsigned threads = 0);

// ---------------------------------------------------------------------------
// Sub-Gaussian MGF check.

enum class CheckStatus { pass, fail, inconclusive };
std::string_view to_string(CheckStatus s);

struct MgfCheck {
  double lambda;
  double empirical;
  double std_error;
  double ceiling;
  CheckStatus status;
};

/// Distance used by the sub-Gaussian hypothesis of each process: the scaled
/// Euclidean metric for the Gaussian mean, arc length on the circle for phase.
double process_metric(const ProcessSampler& sampler, double w, double v);

/// Empirical E[exp(lambda (X_w - X_v))] against exp(lambda^2 d^2(w, v) / 2)
/// for each lambda. Passes at empirical <= ceiling + 5 standard errors;
/// relative standard error above 0.5 is inconclusive.
std::vector<MgfCheck> mgf_subgaussian_check(const ProcessSampler& sampler,
                                            std::pair<double, double> pair,
                                            std::span<const double> lambda_grid,
                                            std::uint64_t trials, std::uint64_t seed,
                                            unsigned threads = 0);

// ---------------------------------------------------------------------------
// Per-level Donsker-Varadhan direction check.

struct DvReport {
  int k;
  McEstimate increment;  // mean of X_{W_k} - X_{W_{k-1}}
  double link_dist_sq;
  double mi;
  double rhs;  // sqrt(link_dist_sq) * sqrt(2 mi)
  bool pass;
};

/// Core check on an arbitrary increment sampler.
DvReport dv_check(int k, double link_dist_sq, double mi,
                  const std::function<double(Substream&)>& increment, std::uint64_t trials,
                  std::uint64_t seed, unsigned threads = 0);

/// Uses the closed-form level quantities of the process: the Gaussian link
/// bound and 0.5 ln(1 + 2^k), or the squared arc length and the phase bracket.
DvReport dv_direction_check(const ProcessSampler& sampler, int level_k, std::uint64_t trials,
                            std::uint64_t seed, unsigned threads = 0);

// ---------------------------------------------------------------------------
// Two-sample Kolmogorov-Smirnov.

struct KsResult {
  double statistic;
  double p_value;
};

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Compares W_{k-1} reached through one step of the chain recursion from W_k
/// against W_{k-1} built directly from W and N_{k-1}.
KsResult gaussian_chain_marginal_ks(const GaussianMeanProcess& process, int k,
                                    std::uint64_t samples, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Monte Carlo per-level KL terms for the Gaussian chain.

struct KlChainEstimate {
  ChainSpec chain;  // levels of the mean-level window with kl_term filled in
  std::vector<double> std_errors;
  double total_std_error;
};

/// E[d(W_k, W_{k-1}) sqrt(2 D(P_{Zbar | W_k} || P_{Zbar}))] per level over the
/// window used by the mean-level bound; trials draws per level.
KlChainEstimate gaussian_kl_chain(const gaussian::GaussianParams& params,
                                  std::uint64_t trials_per_level, std::uint64_t seed,
                                  unsigned threads = 0);

}  // namespace stochchain::est
