#include "stochchain/phase_retrieval.hpp"

#include <cmath>
#include <numbers>

#include "stochchain/errors.hpp"
#include "stochchain/golden.hpp"

namespace stochchain::phase {

namespace {

constexpr double kPi = std::numbers::pi;

void validate_epsilon(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw PreconditionError("phase: epsilon must lie in [0, 1]");
  }
}

TruncationPolicy series_policy() {
  TruncationPolicy policy;
  policy.abs_tol = 1e-300;
  policy.rel_tol = 1e-12;
  policy.min_levels_each_side = 2;
  policy.max_levels_each_side = 5000;
  return policy;
}

}  // namespace

void validate(const PhaseParams& p) {
  validate_epsilon(p.epsilon);
  if (!(p.gamma > 1.0) || !std::isfinite(p.gamma)) {
    throw PreconditionError("phase: gamma must exceed 1");
  }
}

double link_length(const PhaseParams& p, int k, LinkLength kind) {
  validate(p);
  const double arc = std::pow(p.gamma, -k) * kPi;
  return kind == LinkLength::arc ? arc : 2.0 * std::sin(0.5 * arc);
}

double mi_level_upper(const PhaseParams& p, int k) {
  validate(p);
  const double eps = p.epsilon;
  if (eps == 0.0) return 0.0;
  const double log_a = (k + 1) * std::log(p.gamma);
  const double inv_a = std::exp(-log_a);
  // Outside the arc: (1 - eps)(1 - 1/a) log(1 - eps); 0 log 0 = 0 at eps = 1.
  const double outside = eps < 1.0 ? (1.0 - eps) * (1.0 - inv_a) * std::log1p(-eps) : 0.0;
  // Inside: [eps + (1 - eps)/a] log(a eps + 1 - eps).
  const double a = std::exp(log_a);
  const double log_inside = std::isfinite(a) && a < 1e300
                                ? std::log1p(eps * (a - 1.0))
                                : log_a + std::log(eps + (1.0 - eps) * inv_a);
  const double inside = (eps + (1.0 - eps) * inv_a) * log_inside;
  return std::max(0.0, outside + inside);
}

BoundReport bound(const PhaseParams& p, LinkLength kind) {
  validate(p);
  auto source = [&p, kind](int k) {
    const double link = link_length(p, k, kind);
    return ChainLevel{k, link * link, mi_level_upper(p, k), std::nullopt};
  };
  const auto chain = expand_chain(source, -1, series_policy(), "phase_retrieval/stochastic", 0);
  return evaluate_mi_bound(chain);
}

BoundReport baseline_report(double epsilon) {
  validate_epsilon(epsilon);
  // Partition level k' carries 3 * 2^-k' sqrt(2 I), which is the k = k' + 1
  // term of 6 sqrt(2) 2^-k sqrt(I).
  auto chain = partition_chain(2.0, -2, 128);
  const PhaseParams dyadic{epsilon, 2.0};
  for (auto& level : chain.levels) level.mi_upper = mi_level_upper(dyadic, level.k + 1);
  chain.label = "phase_retrieval/baseline";
  return evaluate_partition_bound(chain);
}

double baseline_bound(double epsilon) { return baseline_report(epsilon).total; }

double true_value(double epsilon) {
  validate_epsilon(epsilon);
  return epsilon * std::sqrt(kPi / 2.0);
}

GammaOptimum optimize_gamma(double epsilon, std::pair<double, double> bracket) {
  validate_epsilon(epsilon);
  const auto [lo, hi] = bracket;
  if (!(lo > 1.0) || !(hi > lo) || !std::isfinite(hi)) {
    throw PreconditionError("optimize_gamma: bracket must satisfy 1 < lo < hi");
  }
  auto value = [epsilon](double gamma) { return bound({epsilon, gamma}).total; };

  constexpr double kStep = 0.01;
  GammaOptimum best{lo, value(lo)};
  const int steps = static_cast<int>(std::floor((hi - lo) / kStep + 1e-9));
  for (int i = 1; i <= steps + 1; ++i) {
    const double gamma = i <= steps ? lo + i * kStep : hi;
    const double v = value(gamma);
    if (v < best.bound_at_star) best = {gamma, v};
  }
  const double left = std::max(lo, best.gamma_star - kStep);
  const double right = std::min(hi, best.gamma_star + kStep);
  const auto refined = golden_section_minimize(value, left, right, 1e-8);
  if (refined.value < best.bound_at_star) best = {refined.arg, refined.value};
  return best;
}

}  // namespace stochchain::phase
