#pragma once

// Gaussian mean estimation: W is the sample mean of n draws from N(mu, sigma^2)
// and the chain perturbs W with cumulative Gaussian noise whose variance
// shrinks geometrically with the level index.

#include "stochchain/chain_core.hpp"

namespace stochchain::gaussian {

struct GaussianParams {
  double mu = 0.0;
  double sigma = 1.0;
  int n = 2;
};

/// sigma > 0 and n >= 1. Operations that need n >= 2 check it themselves.
void validate(const GaussianParams& p);

/// Per-level algebra of the chain W_k - mu = alpha_k (W - mu + N_k) with
/// Var(N_k) = sigma^2 / (ratio^k n).
struct LevelAlgebra {
  int k;
  double alpha_k;
  double sigma_k_sq;
};

LevelAlgebra level_algebra(const GaussianParams& p, int k, double ratio = 2.0);

/// Closed-form upper bound (sigma^4 / n^2) * 3 / (2^(k-1) + 1) on
/// E[d^2(W_k, W_{k-1})] with d^2(w, v) = 4 sigma^2 (w - v)^2 / n.
double link_dist_sq_bound(const GaussianParams& p, int k);

/// Exact E[d^2(W_k, W_{k-1})] for an arbitrary noise ratio.
double link_dist_sq_exact(const GaussianParams& p, int k, double ratio = 2.0);

/// I(W; W_k) = 0.5 ln(1 + ratio^k), an upper bound on I(Z_[n]; W_k).
double mi_level(int k, double ratio = 2.0);

/// Metric of the mean-level process: d^2(w, v) = 4 sigma^2 (w - v)^2 / n.
double metric_sq(const GaussianParams& p, double w, double v);

/// Sum over k in Z of sqrt(E d^2) sqrt(2 I); guarantee below 13 sigma^2 / n.
BoundReport bound_thm1(const GaussianParams& p);

/// Single-sample information I(Z_i; W_{i,k}) together with its two
/// closed-form upper bounds.
struct IndividualMi {
  double exact;          // -0.5 ln(1 - 1 / (n (1 + 2^-k)))
  double log_bound;      // ln(1 + 2^k) / (2n)
  double uniform_bound;  // ln(2) / n

  double min_bound() const { return log_bound < uniform_bound ? log_bound : uniform_bound; }
};

IndividualMi mi_individual(const GaussianParams& p, int k);

/// Individual-sample series with per-sample metric 4 sigma^2 (w - v)^2;
/// guarantee below 11 sigma^2 / n and never above bound_thm1.
BoundReport bound_thm2(const GaussianParams& p);

/// Exact expected generalization error 2 sigma^2 / n.
double true_generalization(const GaussianParams& p);

/// Window and tolerance used by the bound evaluators: k in [-60, 60] at
/// least, extended until the geometric tail is below 1e-10 sigma^2 / n.
TruncationPolicy default_truncation(const GaussianParams& p);

}  // namespace stochchain::gaussian
