#include "stochchain/chain_core.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "stochchain/errors.hpp"
#include "stochchain/golden.hpp"

namespace stochchain {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool nonneg_finite(double v) { return std::isfinite(v) && v >= 0.0; }

double mi_contribution(const ChainLevel& level) {
  return std::sqrt(level.link_dist_sq) * std::sqrt(2.0 * *level.mi_upper);
}

void require_mi(const ChainSpec& chain) {
  for (const auto& level : chain.levels) {
    if (!level.mi_upper) {
      throw DomainError("chain level " + std::to_string(level.k) + " has no mi_upper");
    }
  }
}

double tail_certificate(const ChainSpec& chain, const std::vector<double>& terms) {
  if (chain.truncation.tail_majorant == TailMajorant::none) return 0.0;
  const std::size_t n = terms.size();
  double tail = n >= 2 ? geometric_tail(terms[n - 2], terms[n - 1]) : kInf;
  if (!chain.k_start) tail += n >= 2 ? geometric_tail(terms[1], terms[0]) : kInf;
  return tail;
}

BoundReport assemble(const ChainSpec& chain, BoundVariant variant,
                     const std::vector<double>& terms) {
  BoundReport report;
  report.variant = variant;
  report.label = chain.label;
  report.per_level.reserve(terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    report.per_level.emplace_back(chain.levels[i].k, terms[i]);
    report.total += terms[i];
  }
  report.tail_bound = tail_certificate(chain, terms);
  return report;
}

}  // namespace

std::string_view to_string(BoundVariant v) {
  switch (v) {
    case BoundVariant::mi_form: return "mi_form";
    case BoundVariant::kl_form: return "kl_form";
    case BoundVariant::cgf_form: return "cgf_form";
    case BoundVariant::partition_form: return "partition_form";
  }
  return "unknown";
}

void validate_chain(const ChainSpec& chain) {
  if (chain.levels.empty()) throw DomainError("chain has no levels");
  const auto& policy = chain.truncation;
  if (!(policy.abs_tol > 0.0) || policy.rel_tol < 0.0 || policy.max_levels_each_side < 1) {
    throw InvariantViolation("truncation policy needs abs_tol > 0, rel_tol >= 0, max_levels >= 1");
  }
  if (chain.k_start && chain.levels.front().k != *chain.k_start + 1) {
    throw InvariantViolation("first level must be k_start + 1");
  }
  for (std::size_t i = 0; i < chain.levels.size(); ++i) {
    const auto& level = chain.levels[i];
    if (!nonneg_finite(level.link_dist_sq)) {
      throw InvariantViolation("link_dist_sq must be finite and >= 0 at level " +
                               std::to_string(level.k));
    }
    if (level.mi_upper && !nonneg_finite(*level.mi_upper)) {
      throw InvariantViolation("mi_upper must be finite and >= 0 at level " +
                               std::to_string(level.k));
    }
    if (level.kl_term && !nonneg_finite(*level.kl_term)) {
      throw InvariantViolation("kl_term must be finite and >= 0 at level " +
                               std::to_string(level.k));
    }
    if (i > 0 && level.k <= chain.levels[i - 1].k) {
      throw InvariantViolation("level indices must be strictly increasing");
    }
  }
}

double geometric_tail(double previous, double last) {
  if (last == 0.0 && previous == 0.0) return 0.0;
  if (!(previous > 0.0)) return kInf;
  const double ratio = last / previous;
  if (!(ratio < 1.0)) return kInf;
  return last * ratio / (1.0 - ratio);
}

BoundReport evaluate_mi_bound(const ChainSpec& chain) {
  validate_chain(chain);
  require_mi(chain);
  std::vector<double> terms;
  terms.reserve(chain.levels.size());
  for (const auto& level : chain.levels) terms.push_back(mi_contribution(level));
  return assemble(chain, BoundVariant::mi_form, terms);
}

BoundReport evaluate_kl_bound(const ChainSpec& chain) {
  validate_chain(chain);
  std::vector<double> terms;
  terms.reserve(chain.levels.size());
  for (const auto& level : chain.levels) {
    if (!level.kl_term) {
      throw DomainError("chain level " + std::to_string(level.k) + " has no kl_term");
    }
    terms.push_back(*level.kl_term);
  }
  return assemble(chain, BoundVariant::kl_form, terms);
}

ChainSpec partition_chain(double diam, int k0, int depth) {
  if (!(diam > 0.0)) throw PreconditionError("partition_chain: diam must be positive");
  if (depth < 1) throw PreconditionError("partition_chain: depth must be >= 1");
  if (std::ldexp(1.0, -k0) < diam) {
    throw PreconditionError("partition_chain: 2^-k0 must cover the diameter");
  }
  ChainSpec chain;
  chain.k_start = k0;
  chain.label = "partition";
  chain.levels.reserve(static_cast<std::size_t>(depth));
  for (int k = k0 + 1; k <= k0 + depth; ++k) {
    const double link = 3.0 * std::ldexp(1.0, -k);
    chain.levels.push_back({k, link * link, std::nullopt, std::nullopt});
  }
  return chain;
}

BoundReport evaluate_partition_bound(const ChainSpec& chain) {
  validate_chain(chain);
  for (const auto& level : chain.levels) {
    const double link = 3.0 * std::ldexp(1.0, -level.k);
    if (level.link_dist_sq != link * link) {
      throw InvariantViolation("level " + std::to_string(level.k) +
                               " is not a partition level (3 * 2^-k)^2");
    }
  }
  auto report = evaluate_mi_bound(chain);
  report.variant = BoundVariant::partition_form;
  return report;
}

ChainSpec expand_chain(const LevelSource& source, std::optional<int> k_start,
                       const TruncationPolicy& policy, std::string label, int center) {
  if (k_start) center = std::max(center, *k_start + 1);
  std::deque<ChainLevel> levels;
  std::deque<double> terms;
  auto term_of = [](const ChainLevel& level) {
    if (!level.mi_upper) throw DomainError("level source must provide mi_upper");
    return mi_contribution(level);
  };
  levels.push_back(source(center));
  terms.push_back(term_of(levels.back()));
  double running = terms.back();

  const bool geometric = policy.tail_majorant == TailMajorant::geometric;
  auto side_done = [&](int count, double previous, double last) {
    if (count >= policy.max_levels_each_side) return true;
    if (!geometric || count < policy.min_levels_each_side) return false;
    const double tol = std::max(policy.abs_tol, policy.rel_tol * running);
    return geometric_tail(previous, last) <= tol;
  };

  int up = 0;
  int down = 0;
  bool up_done = false;
  bool down_done = k_start.has_value();
  while (!up_done || !down_done) {
    if (!up_done) {
      ++up;
      levels.push_back(source(center + up));
      terms.push_back(term_of(levels.back()));
      running += terms.back();
      up_done = side_done(up, terms[terms.size() - 2], terms.back());
    }
    if (!down_done) {
      ++down;
      levels.push_front(source(center - down));
      terms.push_front(term_of(levels.front()));
      running += terms.front();
      down_done = side_done(down, terms[1], terms.front());
    }
  }

  ChainSpec chain;
  chain.levels.assign(levels.begin(), levels.end());
  chain.k_start = k_start;
  chain.truncation = policy;
  chain.label = std::move(label);
  return chain;
}

// ---------------------------------------------------------------------------

CgfSpec quadratic_cgf(double variance) {
  return {[variance](double l) { return 0.5 * variance * l * l; }, kInf};
}

CgfSpec sub_gamma_cgf(double variance, double scale) {
  return {[variance, scale](double l) { return variance * l * l / (2.0 * (1.0 - scale * l)); },
          1.0 / scale};
}

void validate_cgf(const CgfSpec& cgf) {
  if (!cgf.psi) throw InvariantViolation("cgf has no psi");
  if (!(cgf.b > 0.0)) throw InvariantViolation("cgf domain endpoint b must be positive");
  const auto& psi = cgf.psi;
  if (std::abs(psi(0.0)) > 1e-12) throw InvariantViolation("cgf: psi(0) != 0");

  // Richardson-extrapolated right derivative at 0.
  const double h = 1e-4 * std::min(1.0, cgf.b);
  const double slope = 2.0 * psi(h) / h - psi(2.0 * h) / (2.0 * h);
  if (!(std::abs(slope) <= 1e-6)) throw InvariantViolation("cgf: psi'(0+) != 0");

  constexpr int kSamples = 64;
  const double span = std::isfinite(cgf.b) ? cgf.b * (1.0 - 1e-3) : 8.0;
  const double step = span / kSamples;
  double prev = psi(0.0);
  double cur = psi(step);
  for (int i = 2; i <= kSamples; ++i) {
    const double next = psi(i * step);
    if (!std::isfinite(next)) throw InvariantViolation("cgf: psi not finite inside [0, b)");
    const double scale = std::abs(prev) + std::abs(cur) + std::abs(next) + 1e-300;
    if (next - 2.0 * cur + prev < -1e-10 * scale) {
      throw InvariantViolation("cgf: psi is not convex (negative second difference)");
    }
    prev = cur;
    cur = next;
  }
}

double legendre_dual(const CgfSpec& cgf, double x) {
  if (!(x >= 0.0)) throw PreconditionError("legendre_dual: x must be >= 0");
  validate_cgf(cgf);
  if (x == 0.0) return 0.0;
  auto negated = [&](double l) { return cgf.psi(l) - l * x; };

  double hi;
  if (std::isfinite(cgf.b)) {
    hi = cgf.b * (1.0 - 1e-9);
  } else {
    hi = 1.0;
    while (negated(2.0 * hi) <= negated(hi)) {
      hi *= 2.0;
      if (hi > 1e12) return kInf;
    }
    hi *= 2.0;
  }
  const auto best = golden_section_minimize(negated, 0.0, hi, 1e-10 * std::max(1.0, hi));
  return std::max(0.0, -best.value);
}

double legendre_dual_inverse(const CgfSpec& cgf, double y) {
  if (!(y >= 0.0)) throw PreconditionError("legendre_dual_inverse: y must be >= 0");
  validate_cgf(cgf);
  if (y == 0.0) return 0.0;
  // Search over t = log(lambda) so the tolerance is relative in lambda.
  auto objective = [&](double t) {
    const double l = std::exp(t);
    return (y + cgf.psi(l)) / l;
  };
  const double t_max = std::isfinite(cgf.b) ? std::log(cgf.b) + std::log1p(-1e-9) : 700.0;
  double t = std::min(0.0, t_max - 1.0);
  double step = 1.0;
  double lo, hi;
  if (objective(std::min(t + step, t_max)) < objective(t)) {
    // Walk up until the objective turns.
    while (true) {
      const double next = std::min(t + step, t_max);
      if (next == t_max || objective(next) >= objective(t)) {
        lo = t - step;
        hi = next;
        break;
      }
      t = next;
      step *= 2.0;
    }
  } else {
    while (true) {
      const double next = t - step;
      if (next < -700.0 || objective(next) >= objective(t)) {
        lo = next;
        hi = std::min(t + step, t_max);
        break;
      }
      t = next;
      step *= 2.0;
    }
  }
  return golden_section_minimize(objective, lo, hi, 1e-10).value;
}

BoundReport evaluate_cgf_bound(const ChainSpec& chain, const CgfSpec& cgf,
                               const std::function<double(int)>& sigma_k) {
  validate_chain(chain);
  require_mi(chain);
  validate_cgf(cgf);
  std::vector<double> terms;
  terms.reserve(chain.levels.size());
  for (const auto& level : chain.levels) {
    terms.push_back(sigma_k(level.k) * legendre_dual_inverse(cgf, *level.mi_upper));
  }
  return assemble(chain, BoundVariant::cgf_form, terms);
}

}  // namespace stochchain
