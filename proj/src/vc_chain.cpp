#include "stochchain/vc_chain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "stochchain/errors.hpp"

namespace stochchain::vc {

FiniteClass make_class(std::vector<std::vector<std::uint8_t>> hypotheses,
                       std::vector<std::uint8_t> target, double label_noise, int n) {
  if (hypotheses.empty()) throw PreconditionError("finite class: no hypotheses");
  if (target.empty()) throw PreconditionError("finite class: empty domain");
  if (n < 1) throw PreconditionError("finite class: n must be >= 1");
  if (!(label_noise >= 0.0 && label_noise <= 1.0)) {
    throw PreconditionError("finite class: label_noise must lie in [0, 1]");
  }
  auto binary = [](const std::vector<std::uint8_t>& v) {
    return std::all_of(v.begin(), v.end(), [](std::uint8_t b) { return b <= 1; });
  };
  if (!binary(target)) throw PreconditionError("finite class: labels must be 0 or 1");
  FiniteClass cls;
  cls.target = std::move(target);
  cls.label_noise = label_noise;
  cls.n = n;
  std::set<std::vector<std::uint8_t>> seen;
  for (auto& h : hypotheses) {
    if (h.size() != cls.target.size()) {
      throw PreconditionError("finite class: hypothesis length differs from the domain");
    }
    if (!binary(h)) throw PreconditionError("finite class: labels must be 0 or 1");
    if (seen.insert(h).second) cls.hypotheses.push_back(std::move(h));
  }
  return cls;
}

FiniteClass threshold_class(int domain_size, int n, double label_noise) {
  if (domain_size < 1) throw PreconditionError("threshold_class: empty domain");
  const auto m = static_cast<std::size_t>(domain_size);
  std::vector<std::vector<std::uint8_t>> hyps;
  for (std::size_t t = 0; t <= m; ++t) {
    std::vector<std::uint8_t> h(m);
    for (std::size_t x = 0; x < m; ++x) h[x] = x >= t ? 1 : 0;
    hyps.push_back(std::move(h));
  }
  std::vector<std::uint8_t> target(m);
  for (std::size_t x = 0; x < m; ++x) target[x] = x >= m / 2 ? 1 : 0;
  return make_class(std::move(hyps), std::move(target), label_noise, n);
}

FiniteClass interval_class(int domain_size, int n, double label_noise) {
  if (domain_size < 1) throw PreconditionError("interval_class: empty domain");
  const auto m = static_cast<std::size_t>(domain_size);
  std::vector<std::vector<std::uint8_t>> hyps;
  for (std::size_t a = 0; a <= m; ++a) {
    for (std::size_t b = a; b <= m; ++b) {
      std::vector<std::uint8_t> h(m);
      for (std::size_t x = 0; x < m; ++x) h[x] = (a <= x && x < b) ? 1 : 0;
      hyps.push_back(std::move(h));
    }
  }
  std::vector<std::uint8_t> target(m);
  for (std::size_t x = 0; x < m; ++x) target[x] = (m / 4 <= x && x < 3 * m / 4) ? 1 : 0;
  return make_class(std::move(hyps), std::move(target), label_noise, n);
}

FiniteClass load_class(const std::filesystem::path& path, int n) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open class file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    return make_class(j.at("hypotheses").get<std::vector<std::vector<std::uint8_t>>>(),
                      j.at("target").get<std::vector<std::uint8_t>>(),
                      j.value("label_noise", 0.0), n);
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError("malformed class file " + path.string() + ": " + e.what());
  }
}

int vc_dimension(const FiniteClass& cls) {
  const std::size_t m = cls.domain_size();
  if (m > 20) throw PreconditionError("vc_dimension: domain larger than 20 instances");
  int best = 0;
  for (std::size_t s = 1; s <= m; ++s) {
    bool any = false;
    // Enumerate size-s subsets in lexicographic bitmask order (Gosper's hack).
    for (std::uint32_t mask = (1u << s) - 1; mask < (1u << m);) {
      std::set<std::uint32_t> patterns;
      for (const auto& h : cls.hypotheses) {
        std::uint32_t p = 0;
        int bit = 0;
        for (std::size_t x = 0; x < m; ++x) {
          if (mask >> x & 1u) p |= static_cast<std::uint32_t>(h[x]) << bit++;
        }
        patterns.insert(p);
      }
      if (patterns.size() == (std::size_t{1} << s)) {
        any = true;
        break;
      }
      const std::uint32_t c = mask & -mask;
      const std::uint32_t r = mask + c;
      mask = (((r ^ mask) >> 2) / c) | r;
    }
    if (!any) break;
    best = static_cast<int>(s);
  }
  return best;
}

EmpiricalMetricContext draw_context(const FiniteClass& cls, est::Substream& stream) {
  const double m = static_cast<double>(cls.domain_size());
  auto draw = [&] {
    const int x = std::min(static_cast<int>(stream.uniform() * m), static_cast<int>(m) - 1);
    std::uint8_t y = cls.target[static_cast<std::size_t>(x)];
    if (stream.uniform() < cls.label_noise) y ^= 1u;
    return Instance{x, y};
  };
  EmpiricalMetricContext ctx;
  ctx.z_plus.reserve(static_cast<std::size_t>(cls.n));
  ctx.z_minus.reserve(static_cast<std::size_t>(cls.n));
  for (int i = 0; i < cls.n; ++i) ctx.z_plus.push_back(draw());
  for (int i = 0; i < cls.n; ++i) ctx.z_minus.push_back(draw());
  return ctx;
}

int loss(const FiniteClass& cls, std::size_t h, const Instance& z) {
  return cls.hypotheses[h][static_cast<std::size_t>(z.x)] != z.y ? 1 : 0;
}

DistanceMatrix empirical_distances(const FiniteClass& cls, const EmpiricalMetricContext& ctx) {
  // The squared loss difference is 1 exactly when the two hypotheses disagree
  // on x, whatever the label, so only the instance multiplicities matter.
  std::vector<double> mult(cls.domain_size(), 0.0);
  for (const auto& z : ctx.z_plus) mult[static_cast<std::size_t>(z.x)] += 1.0;
  for (const auto& z : ctx.z_minus) mult[static_cast<std::size_t>(z.x)] += 1.0;
  std::vector<std::size_t> support;
  for (std::size_t x = 0; x < mult.size(); ++x) {
    if (mult[x] > 0.0) support.push_back(x);
  }
  const double scale = 2.0 / cls.n;
  DistanceMatrix d(cls.size());
  for (std::size_t i = 0; i < cls.size(); ++i) {
    for (std::size_t j = i + 1; j < cls.size(); ++j) {
      double disagreements = 0.0;
      for (std::size_t x : support) {
        if (cls.hypotheses[i][x] != cls.hypotheses[j][x]) disagreements += mult[x];
      }
      d.set(i, j, std::sqrt(scale * disagreements));
    }
  }
  return d;
}

std::vector<std::size_t> greedy_cover(const DistanceMatrix& d, double radius,
                                      std::span<const std::size_t> seed_centers) {
  if (!(radius > 0.0)) throw PreconditionError("greedy_cover: radius must be positive");
  std::vector<bool> covered(d.size(), false);
  std::vector<std::size_t> centers;
  auto add_center = [&](std::size_t c) {
    centers.push_back(c);
    for (std::size_t j = 0; j < d.size(); ++j) {
      if (d(c, j) <= radius) covered[j] = true;
    }
  };
  for (std::size_t c : seed_centers) add_center(c);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!covered[i]) add_center(i);
  }
  std::sort(centers.begin(), centers.end());
  centers.erase(std::unique(centers.begin(), centers.end()), centers.end());
  return centers;
}

std::vector<std::size_t> greedy_cover(const FiniteClass& cls, const EmpiricalMetricContext& ctx,
                                      double radius) {
  return greedy_cover(empirical_distances(cls, ctx), radius);
}

namespace {

std::vector<std::size_t> nearest_centers(const DistanceMatrix& d,
                                         const std::vector<std::size_t>& net) {
  std::vector<std::size_t> nearest(d.size());
  for (std::size_t h = 0; h < d.size(); ++h) {
    std::size_t best = net.front();
    for (std::size_t c : net) {
      if (d(h, c) < d(h, best)) best = c;
    }
    nearest[h] = best;
  }
  return nearest;
}

}  // namespace

NetHierarchy build_hierarchy(const DistanceMatrix& d) {
  if (d.size() == 0) throw PreconditionError("build_hierarchy: empty class");
  double max_from_first = 0.0;
  double min_positive = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d.size(); ++i) {
    max_from_first = std::max(max_from_first, d(0, i));
    for (std::size_t j = i + 1; j < d.size(); ++j) {
      if (d(i, j) > 0.0) min_positive = std::min(min_positive, d(i, j));
    }
  }

  NetHierarchy h;
  if (max_from_first == 0.0 && !std::isfinite(min_positive)) {
    h.k0 = h.k1 = 0;
  } else {
    // Largest k whose ball of radius 2^-k around hypothesis 0 holds everything.
    int k0 = static_cast<int>(std::floor(-std::log2(max_from_first)));
    while (std::ldexp(1.0, -k0) < max_from_first) --k0;
    while (std::ldexp(1.0, -(k0 + 1)) >= max_from_first) ++k0;
    // First k with 2^-k strictly below the smallest positive distance.
    int k1 = static_cast<int>(std::floor(-std::log2(min_positive))) + 1;
    while (std::ldexp(1.0, -k1) >= min_positive) ++k1;
    while (std::ldexp(1.0, -(k1 - 1)) < min_positive) --k1;
    h.k0 = k0;
    h.k1 = std::max(k0, k1);
  }

  std::vector<std::size_t> net{0};
  for (int k = h.k0; k <= h.k1; ++k) {
    if (k > h.k0) net = greedy_cover(d, std::ldexp(1.0, -k), net);
    h.levels.push_back({k, net, nearest_centers(d, net), {}});
  }
  // W_{k1} is the nearest finest-level center; W_k the nearest level-k center to W_{k+1}.
  h.levels.back().chain = h.levels.back().nearest;
  for (int i = static_cast<int>(h.levels.size()) - 2; i >= 0; --i) {
    auto& level = h.levels[static_cast<std::size_t>(i)];
    const auto& finer = h.levels[static_cast<std::size_t>(i) + 1].chain;
    level.chain.resize(d.size());
    for (std::size_t w = 0; w < d.size(); ++w) level.chain[w] = level.nearest[finer[w]];
  }
  return h;
}

NetHierarchy build_hierarchy(const FiniteClass& cls, const EmpiricalMetricContext& ctx) {
  return build_hierarchy(empirical_distances(cls, ctx));
}

BoundReport covering_report(const NetHierarchy& h) {
  if (h.k1 == h.k0) {
    BoundReport empty;
    empty.label = "vc/covering";
    return empty;
  }
  ChainSpec chain;
  chain.k_start = h.k0;
  chain.truncation.tail_majorant = TailMajorant::none;
  chain.label = "vc/covering";
  for (int k = h.k0 + 1; k <= h.k1; ++k) {
    const double link = std::ldexp(1.0, -k + 1);
    const double net_size = static_cast<double>(h.at(k).net.size());
    chain.levels.push_back({k, link * link, std::log(net_size), std::nullopt});
  }
  return evaluate_mi_bound(chain);
}

double covering_bound(const NetHierarchy& h) { return covering_report(h).total; }

RademacherDraw draw_rademacher(const FiniteClass& cls, const EmpiricalMetricContext& ctx,
                               est::Substream& stream) {
  const std::size_t n = ctx.z_plus.size();
  std::vector<int> signs(n);
  for (auto& r : signs) r = (stream() >> 63) ? 1 : -1;
  std::size_t erm = 0;
  int best_loss = std::numeric_limits<int>::max();
  std::vector<int> train_loss(cls.size(), 0);
  for (std::size_t w = 0; w < cls.size(); ++w) {
    int total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      total += loss(cls, w, signs[i] > 0 ? ctx.z_minus[i] : ctx.z_plus[i]);
    }
    if (total < best_loss) {
      best_loss = total;
      erm = w;
    }
  }
  double x = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x += signs[i] * (loss(cls, erm, ctx.z_plus[i]) - loss(cls, erm, ctx.z_minus[i]));
  }
  return {erm, x / std::sqrt(static_cast<double>(n))};
}

est::McEstimate conditional_gen(const FiniteClass& cls, const EmpiricalMetricContext& ctx,
                                std::uint64_t trials, std::uint64_t seed, unsigned threads) {
  if (trials < 100) throw PreconditionError("conditional_gen: needs at least 100 trials");
  const auto stats = est::run_trials(
      trials, seed, est::RunningStats{},
      [&](est::Substream& s, est::RunningStats& acc) { acc.add(draw_rademacher(cls, ctx, s).x_w); },
      threads);
  return est::to_estimate(stats, seed);
}

namespace {

struct ScalingAcc {
  est::RunningStats bound;
  est::RunningStats gen;
  void merge(const ScalingAcc& o) {
    bound.merge(o.bound);
    gen.merge(o.gen);
  }
};

}  // namespace

ScalingRow simulate_scaling(const FiniteClass& cls, std::uint64_t trials, std::uint64_t seed,
                            unsigned threads) {
  if (trials < 2) throw PreconditionError("simulate_scaling: needs at least 2 trials");
  const double root_n = std::sqrt(static_cast<double>(cls.n));
  const auto acc = est::run_trials(
      trials, seed, ScalingAcc{},
      [&](est::Substream& s, ScalingAcc& a) {
        const auto ctx = draw_context(cls, s);
        a.bound.add(covering_bound(build_hierarchy(cls, ctx)) / root_n);
        a.gen.add(draw_rademacher(cls, ctx, s).x_w / root_n);
      },
      threads, 64);
  return {cls.n, acc.bound.mean, est::to_estimate(acc.gen, seed)};
}

}  // namespace stochchain::vc
