#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace stochchain {

/// One link of a stochastic chain.
///
/// `link_dist_sq` is E[d^2(W_k, W_{k-1})], `mi_upper` an upper bound on the
/// information the level-k approximation carries about the process (nats),
/// `kl_term` the per-level expectation E[d * sqrt(2 KL)] used by the
/// conditional-KL bound.
struct ChainLevel {
  int k = 0;
  double link_dist_sq = 0.0;
  std::optional<double> mi_upper;
  std::optional<double> kl_term;
};

enum class TailMajorant { geometric, none };

struct TruncationPolicy {
  double abs_tol = 1e-10;
  // Relative stopping tolerance against the running total; 0 disables it.
  double rel_tol = 0.0;
  int min_levels_each_side = 2;
  int max_levels_each_side = 200;
  TailMajorant tail_majorant = TailMajorant::geometric;
};

/// Ordered chain levels. `k_start` is the root index k0; std::nullopt stands
/// for k0 = -infinity, in which case the supplied levels are a finite window
/// of a two-sided series.
struct ChainSpec {
  std::vector<ChainLevel> levels;
  std::optional<int> k_start;
  TruncationPolicy truncation;
  std::string label;
};

enum class BoundVariant { mi_form, kl_form, cgf_form, partition_form };

std::string_view to_string(BoundVariant v);

struct BoundReport {
  BoundVariant variant = BoundVariant::mi_form;
  double total = 0.0;
  // Certified bound on the omitted tail; +inf when no certificate exists.
  double tail_bound = 0.0;
  std::vector<std::pair<int, double>> per_level;
  std::string label;

  double guarantee() const { return total + tail_bound; }
};

/// Throws InvariantViolation if levels break ChainLevel/ChainSpec invariants,
/// DomainError if the chain is empty.
void validate_chain(const ChainSpec& chain);

/// Sum over levels of sqrt(link_dist_sq) * sqrt(2 * mi_upper).
BoundReport evaluate_mi_bound(const ChainSpec& chain);

/// Sum over levels of kl_term.
BoundReport evaluate_kl_bound(const ChainSpec& chain);

/// Deterministic-partition levels k0+1 .. k0+depth with link distance
/// 3 * 2^-k; mi_upper is left for the caller. Requires 2^-k0 >= diam.
ChainSpec partition_chain(double diam, int k0, int depth);

/// MI-form evaluation of a chain built by partition_chain. Checks that each
/// link distance is the partition coefficient (3 * 2^-k)^2.
BoundReport evaluate_partition_bound(const ChainSpec& chain);

using LevelSource = std::function<ChainLevel(int k)>;

/// Builds a chain window from a level generator. Expands symmetrically from
/// `center` (upward only when k_start is finite) until the geometric tail
/// estimate of the MI-form terms on each open side drops below the policy
/// tolerance or the side reaches max_levels_each_side.
ChainSpec expand_chain(const LevelSource& source, std::optional<int> k_start,
                       const TruncationPolicy& policy, std::string label, int center = 0);

/// Geometric tail certificate for a sequence of nonnegative terms ordered away
/// from the window: last * r / (1 - r) with r = last / previous. Returns +inf
/// when r >= 1 or fewer than two terms are available, 0 when both are zero.
double geometric_tail(double previous, double last);

// ---------------------------------------------------------------------------
// Cumulant generating functions and their Legendre duals.

struct CgfSpec {
  std::function<double(double)> psi;
  // Domain is [0, b); +inf allowed.
  double b = 0.0;
};

CgfSpec quadratic_cgf(double variance = 1.0);
/// psi(l) = v l^2 / (2 (1 - c l)) on [0, 1/c).
CgfSpec sub_gamma_cgf(double variance = 1.0, double scale = 1.0);

/// psi(0) = 0, psi'(0+) = 0 and convexity on sampled points.
/// Throws InvariantViolation.
void validate_cgf(const CgfSpec& cgf);

/// sup over lambda in [0, b) of lambda * x - psi(lambda).
double legendre_dual(const CgfSpec& cgf, double x);

/// inf over lambda in (0, b) of (y + psi(lambda)) / lambda.
double legendre_dual_inverse(const CgfSpec& cgf, double y);

/// Sum over levels of sigma_k(k) * legendre_dual_inverse(cgf, mi_upper(k)).
/// sigma_k(k) must dominate d(W_k, W_{k-1}); that is not checked.
BoundReport evaluate_cgf_bound(const ChainSpec& chain, const CgfSpec& cgf,
                               const std::function<double(int)>& sigma_k);

}  // namespace stochchain
