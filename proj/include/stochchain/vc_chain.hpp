#pragma once

// Deterministic chaining over a finite binary hypothesis class under the
// empirical (symmetrized) metric, at desk scale.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "stochchain/chain_core.hpp"
#include "stochchain/estimators.hpp"
#include "stochchain/rng.hpp"

namespace stochchain::vc {

/// Hypotheses are label vectors over a finite instance domain {0, ..., m-1}.
/// Instances are drawn uniformly; the label is target[x], flipped with
/// probability label_noise. `n` is the sample size of each of Z+ and Z-.
struct FiniteClass {
  std::vector<std::vector<std::uint8_t>> hypotheses;
  std::vector<std::uint8_t> target;
  double label_noise = 0.0;
  int n = 16;

  std::size_t domain_size() const { return target.size(); }
  std::size_t size() const { return hypotheses.size(); }
};

/// Validates shapes and labels and removes duplicate hypotheses, keeping the
/// first occurrence.
FiniteClass make_class(std::vector<std::vector<std::uint8_t>> hypotheses,
                       std::vector<std::uint8_t> target, double label_noise, int n);

/// 1[x >= t] for t = 0..m; target is the threshold at m / 2.
FiniteClass threshold_class(int domain_size, int n, double label_noise = 0.1);
/// 1[a <= x < b] for 0 <= a <= b <= m; target is [m/4, 3m/4).
FiniteClass interval_class(int domain_size, int n, double label_noise = 0.1);
/// JSON file {"hypotheses": [[0,1,...], ...], "target": [...], "label_noise": p}.
FiniteClass load_class(const std::filesystem::path& path, int n);

/// Exhaustive shattering search; domain must have at most 20 instances.
int vc_dimension(const FiniteClass& cls);

struct Instance {
  int x;
  std::uint8_t y;
};

struct EmpiricalMetricContext {
  std::vector<Instance> z_plus;
  std::vector<Instance> z_minus;
};

EmpiricalMetricContext draw_context(const FiniteClass& cls, est::Substream& stream);

int loss(const FiniteClass& cls, std::size_t h, const Instance& z);

/// Symmetric matrix of pairwise distances.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(std::size_t size) : size_(size), d_(size * size, 0.0) {}

  std::size_t size() const { return size_; }
  double operator()(std::size_t i, std::size_t j) const { return d_[i * size_ + j]; }
  void set(std::size_t i, std::size_t j, double v) {
    d_[i * size_ + j] = v;
    d_[j * size_ + i] = v;
  }

 private:
  std::size_t size_;
  std::vector<double> d_;
};

/// d^2(w, u) = (2/n) sum (l(w, z+_i) - l(u, z+_i))^2 + (2/n) sum (l(w, z-_i) - l(u, z-_i))^2.
DistanceMatrix empirical_distances(const FiniteClass& cls, const EmpiricalMetricContext& ctx);

/// Greedy radius cover: start from `seed_centers`, then repeatedly add the
/// lowest-index uncovered point. Returned centers are sorted.
std::vector<std::size_t> greedy_cover(const DistanceMatrix& d, double radius,
                                      std::span<const std::size_t> seed_centers = {});
std::vector<std::size_t> greedy_cover(const FiniteClass& cls, const EmpiricalMetricContext& ctx,
                                      double radius);

struct NetLevel {
  int k;
  std::vector<std::size_t> net;      // sorted center indices, a 2^-k cover
  std::vector<std::size_t> nearest;  // hypothesis -> nearest center (lowest index on ties)
  std::vector<std::size_t> chain;    // hypothesis -> W_k reached from W_{k+1}
};

struct NetHierarchy {
  int k0 = 0;
  int k1 = 0;
  std::vector<NetLevel> levels;  // levels[i].k == k0 + i

  const NetLevel& at(int k) const { return levels.at(static_cast<std::size_t>(k - k0)); }
};

/// Nets at radius 2^-k for k = k0..k1, each seeded with the previous one so
/// that they are nested. k0 is the largest k with a single-center net and k1
/// the first k with 2^-k below the smallest positive distance.
NetHierarchy build_hierarchy(const DistanceMatrix& d);
NetHierarchy build_hierarchy(const FiniteClass& cls, const EmpiricalMetricContext& ctx);

/// sum_{k=k0+1}^{k1} 2^{-k+1} sqrt(2 ln |P_k|), evaluated as an MI-form chain.
BoundReport covering_report(const NetHierarchy& h);
double covering_bound(const NetHierarchy& h);

/// X_w = n^{-1/2} sum_i R_i (l(w, z+_i) - l(w, z-_i)) where the training point
/// is z-_i when R_i = +1 and z+_i otherwise, so E[X_W] = sqrt(n) gen.
struct RademacherDraw {
  std::size_t erm;
  double x_w;
};

RademacherDraw draw_rademacher(const FiniteClass& cls, const EmpiricalMetricContext& ctx,
                               est::Substream& stream);

/// Monte Carlo E[X_W | Z+-] for fixed Z+- with ERM selection.
est::McEstimate conditional_gen(const FiniteClass& cls, const EmpiricalMetricContext& ctx,
                                std::uint64_t trials, std::uint64_t seed, unsigned threads = 0);

struct ScalingRow {
  int n;
  double covering_bound_over_sqrt_n;  // averaged over Z+- draws
  est::McEstimate mc_gen;             // X_W / sqrt(n) averaged over fresh Z+-, R
};

ScalingRow simulate_scaling(const FiniteClass& cls, std::uint64_t trials, std::uint64_t seed,
                            unsigned threads = 0);

}  // namespace stochchain::vc
