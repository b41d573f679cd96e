#include "stochchain/gaussian_mean.hpp"

#include <algorithm>
#include <cmath>

#include "stochchain/errors.hpp"

namespace stochchain::gaussian {

namespace {

// ln(1 + 2^k) without overflow or cancellation at either end.
double log1p_pow(double ratio, int k) {
  const double x = std::pow(ratio, k);
  return std::isfinite(x) ? std::log1p(x) : k * std::log(ratio);
}

void require_two_samples(const GaussianParams& p, const char* what) {
  if (p.n < 2) throw PreconditionError(std::string(what) + ": needs n >= 2");
}

}  // namespace

void validate(const GaussianParams& p) {
  if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) {
    throw PreconditionError("gaussian: sigma must be positive");
  }
  if (p.n < 1) throw PreconditionError("gaussian: n must be >= 1");
  if (!std::isfinite(p.mu)) throw PreconditionError("gaussian: mu must be finite");
}

LevelAlgebra level_algebra(const GaussianParams& p, int k, double ratio) {
  validate(p);
  if (!(ratio > 1.0)) throw PreconditionError("gaussian: noise ratio must exceed 1");
  const double mean_var = p.sigma * p.sigma / p.n;
  const double sigma_k_sq = mean_var * std::pow(ratio, -k);
  return {k, mean_var / (mean_var + sigma_k_sq), sigma_k_sq};
}

double link_dist_sq_bound(const GaussianParams& p, int k) {
  validate(p);
  const double s2n = p.sigma * p.sigma / p.n;
  return s2n * s2n * 3.0 / (std::ldexp(1.0, k - 1) + 1.0);
}

double link_dist_sq_exact(const GaussianParams& p, int k, double ratio) {
  // W_k - W_{k-1} = (alpha_k - alpha_{k-1}) U_k - alpha_{k-1} N'_k with
  // U_k = W - mu + N_k independent of N'_k.
  const auto cur = level_algebra(p, k, ratio);
  const auto prev = level_algebra(p, k - 1, ratio);
  const double mean_var = p.sigma * p.sigma / p.n;
  const double var_u = mean_var + cur.sigma_k_sq;
  const double var_step = prev.sigma_k_sq - cur.sigma_k_sq;
  const double da = cur.alpha_k - prev.alpha_k;
  const double e_diff_sq = da * da * var_u + prev.alpha_k * prev.alpha_k * var_step;
  return 4.0 * p.sigma * p.sigma / p.n * e_diff_sq;
}

double mi_level(int k, double ratio) { return 0.5 * log1p_pow(ratio, k); }

double metric_sq(const GaussianParams& p, double w, double v) {
  return 4.0 * p.sigma * p.sigma * (w - v) * (w - v) / p.n;
}

TruncationPolicy default_truncation(const GaussianParams& p) {
  TruncationPolicy policy;
  policy.abs_tol = 1e-10 * p.sigma * p.sigma / p.n;
  policy.min_levels_each_side = 60;
  policy.max_levels_each_side = 200;
  return policy;
}

BoundReport bound_thm1(const GaussianParams& p) {
  validate(p);
  auto source = [&p](int k) {
    return ChainLevel{k, link_dist_sq_bound(p, k), mi_level(k), std::nullopt};
  };
  const auto chain =
      expand_chain(source, std::nullopt, default_truncation(p), "gaussian_mean/thm1");
  return evaluate_mi_bound(chain);
}

IndividualMi mi_individual(const GaussianParams& p, int k) {
  validate(p);
  require_two_samples(p, "mi_individual");
  const double n = p.n;
  const double exact = -0.5 * std::log1p(-1.0 / (n * (1.0 + std::ldexp(1.0, -k))));
  return {exact, log1p_pow(2.0, k) / (2.0 * n), std::log(2.0) / n};
}

BoundReport bound_thm2(const GaussianParams& p) {
  validate(p);
  require_two_samples(p, "bound_thm2");
  const double s2 = p.sigma * p.sigma;
  auto source = [&p, s2](int k) {
    // Per-sample metric 4 sigma^2 (w - v)^2 scales the link bound by n.
    const double link = s2 * s2 / p.n * 3.0 / (std::ldexp(1.0, k - 1) + 1.0);
    return ChainLevel{k, link, mi_individual(p, k).min_bound(), std::nullopt};
  };
  const auto chain =
      expand_chain(source, std::nullopt, default_truncation(p), "gaussian_mean/thm2");
  auto report = evaluate_mi_bound(chain);
  if (report.total > bound_thm1(p).total) {
    throw InvariantViolation("individual-sample bound exceeds the mean-level bound");
  }
  return report;
}

double true_generalization(const GaussianParams& p) {
  validate(p);
  return 2.0 * p.sigma * p.sigma / p.n;
}

}  // namespace stochchain::gaussian
