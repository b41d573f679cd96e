#pragma once

// Toy phase retrieval on the unit circle: Z ~ N(0, I_2), the learner outputs
// the phase of Z rotated by an independent zeta that is 0 with probability
// epsilon and uniform otherwise. The chain adds uniform noise on arcs of
// half-width gamma^-k pi.

#include <utility>

#include "stochchain/chain_core.hpp"

namespace stochchain::phase {

struct PhaseParams {
  double epsilon = 0.05;
  double gamma = 3.75;
};

void validate(const PhaseParams& p);

/// How d(W_k, W_{k-1}) is bounded: by the arc gamma^-k pi, or by the chord
/// 2 sin(gamma^-k pi / 2).
enum class LinkLength { arc, chord };

double link_length(const PhaseParams& p, int k, LinkLength kind = LinkLength::arc);

/// log(2 pi) minus the entropy of the two-piece density of N'_{k+1} + zeta,
/// an upper bound on I(W_k; X_T) in nats.
double mi_level_upper(const PhaseParams& p, int k);

/// sqrt(2) pi * sum_{k>=0} gamma^-k sqrt(mi_level_upper(p, k)) with a
/// certified geometric tail.
BoundReport bound(const PhaseParams& p, LinkLength kind = LinkLength::arc);

/// 6 sqrt(2) * sum_{k>=0} 2^-k sqrt(mi_level_upper({epsilon, 2}, k)): the
/// deterministic-partition chain over the circle (diameter 2, k0 = -2).
BoundReport baseline_report(double epsilon);
double baseline_bound(double epsilon);

/// Exact E[X_W] = epsilon * sqrt(pi / 2).
double true_value(double epsilon);

struct GammaOptimum {
  double gamma_star;
  double bound_at_star;
};

/// Grid scan at 0.01 over [lo, hi] followed by golden-section refinement
/// around the best grid point.
GammaOptimum optimize_gamma(double epsilon, std::pair<double, double> bracket);

}  // namespace stochchain::phase
