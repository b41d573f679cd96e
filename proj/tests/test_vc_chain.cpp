#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "stochchain/errors.hpp"
#include "stochchain/vc_chain.hpp"

using namespace stochchain;
using namespace stochchain::vc;

namespace {

// Smallest subset of points whose radius balls cover everything, by exhaustive search.
std::size_t brute_force_cover(const DistanceMatrix& d, double radius) {
  const std::size_t m = d.size();
  std::size_t best = m;
  for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
    const auto size = static_cast<std::size_t>(std::popcount(mask));
    if (size >= best) continue;
    bool ok = true;
    for (std::size_t j = 0; j < m && ok; ++j) {
      bool hit = false;
      for (std::size_t c = 0; c < m && !hit; ++c) hit = (mask >> c & 1u) && d(c, j) <= radius;
      ok = hit;
    }
    if (ok) best = size;
  }
  return best;
}

// ln-approximation factor of greedy set cover: H(largest ball size).
double harmonic_factor(const DistanceMatrix& d, double radius) {
  std::size_t largest = 1;
  for (std::size_t c = 0; c < d.size(); ++c) {
    std::size_t ball = 0;
    for (std::size_t j = 0; j < d.size(); ++j) ball += d(c, j) <= radius;
    largest = std::max(largest, ball);
  }
  double h = 0.0;
  for (std::size_t i = 1; i <= largest; ++i) h += 1.0 / static_cast<double>(i);
  return h;
}

DistanceMatrix line_metric(const std::vector<double>& positions) {
  DistanceMatrix d(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i)
    for (std::size_t j = i + 1; j < positions.size(); ++j)
      d.set(i, j, std::abs(positions[i] - positions[j]));
  return d;
}

void check_hierarchy(const NetHierarchy& h, const DistanceMatrix& d) {
  REQUIRE(h.levels.size() == static_cast<std::size_t>(h.k1 - h.k0 + 1));
  CHECK(h.at(h.k0).net.size() == 1);
  std::size_t previous = 1;
  for (const auto& level : h.levels) {
    CHECK(level.net.size() >= previous);
    previous = level.net.size();
    const double radius = std::ldexp(1.0, -level.k);
    const std::set<std::size_t> centers(level.net.begin(), level.net.end());
    for (std::size_t w = 0; w < d.size(); ++w) {
      CHECK(d(w, level.nearest[w]) <= radius);
      CHECK(centers.count(level.chain[w]) == 1);
    }
  }
  // Every chain ends at the same root; each level is a function of the next.
  for (std::size_t w = 0; w < d.size(); ++w) CHECK(h.at(h.k0).chain[w] == h.at(h.k0).chain[0]);
  for (int k = h.k0; k < h.k1; ++k) {
    for (std::size_t a = 0; a < d.size(); ++a) {
      for (std::size_t b = 0; b < d.size(); ++b) {
        if (h.at(k + 1).chain[a] == h.at(k + 1).chain[b]) CHECK(h.at(k).chain[a] == h.at(k).chain[b]);
      }
    }
  }
}

}  // namespace

TEST_CASE("class construction") {
  const auto cls = make_class({{0, 1, 1}, {0, 1, 1}, {1, 1, 1}}, {0, 1, 1}, 0.0, 4);
  CHECK(cls.size() == 2);
  CHECK(threshold_class(16, 8).size() == 17);
  CHECK(interval_class(4, 8).size() == 11);
  CHECK_THROWS_AS(make_class({{0, 1}}, {0, 1, 1}, 0.0, 4), PreconditionError);
  CHECK_THROWS_AS(make_class({{0, 2, 1}}, {0, 1, 1}, 0.0, 4), PreconditionError);
  CHECK_THROWS_AS(make_class({}, {0, 1, 1}, 0.0, 4), PreconditionError);
}

TEST_CASE("class file loading") {
  const auto path = std::filesystem::temp_directory_path() / "stochchain_class_test.json";
  {
    std::ofstream out(path);
    out << R"({"hypotheses": [[0,0,1],[0,1,1],[0,0,1]], "target": [0,1,1], "label_noise": 0.2})";
  }
  const auto cls = load_class(path, 6);
  CHECK(cls.size() == 2);
  CHECK(cls.label_noise == 0.2);
  CHECK(cls.n == 6);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_class(path, 6), PreconditionError);
}

TEST_CASE("vc dimension") {
  CHECK(vc_dimension(threshold_class(12, 4)) == 1);
  CHECK(vc_dimension(interval_class(10, 4)) == 2);
  CHECK(vc_dimension(make_class({{0, 0, 0}}, {0, 0, 0}, 0.0, 4)) == 0);
  CHECK_THROWS_AS(vc_dimension(threshold_class(21, 4)), PreconditionError);
}

TEST_CASE("empirical distance is a pseudometric") {
  const auto cls = interval_class(12, 10);
  est::Substream s(5, 0);
  const auto ctx = draw_context(cls, s);
  CHECK(ctx.z_plus.size() == 10);
  CHECK(ctx.z_minus.size() == 10);
  const auto d = empirical_distances(cls, ctx);
  for (std::size_t a = 0; a < d.size(); ++a) {
    CHECK(d(a, a) == 0.0);
    for (std::size_t b = 0; b < d.size(); ++b) {
      CHECK(d(a, b) == d(b, a));
      for (std::size_t c = 0; c < d.size(); ++c) CHECK(d(a, c) <= d(a, b) + d(b, c) + 1e-12);
    }
  }
  // Direct evaluation of the definition for one pair.
  double sum = 0.0;
  for (const auto& z : ctx.z_plus) sum += std::pow(loss(cls, 3, z) - loss(cls, 7, z), 2);
  for (const auto& z : ctx.z_minus) sum += std::pow(loss(cls, 3, z) - loss(cls, 7, z), 2);
  CHECK(d(3, 7) == doctest::Approx(std::sqrt(2.0 / 10.0 * sum)).epsilon(1e-14));
}

TEST_CASE("greedy cover trivial cases") {
  DistanceMatrix same(3);
  CHECK(greedy_cover(same, 0.1).size() == 1);
  const auto d = line_metric({0.0, 0.4, 1.0, 1.7});
  CHECK(greedy_cover(d, 1.7).size() == 1);
  CHECK(greedy_cover(d, 0.1).size() == 4);
  CHECK_THROWS_AS(greedy_cover(d, 0.0), PreconditionError);
}

TEST_CASE("greedy cover against exhaustive minimum covers") {
  const auto d = line_metric({0.0, 0.3, 0.45, 1.0, 1.2, 1.9, 2.6, 2.65});
  const std::size_t greedy = greedy_cover(d, 0.5).size();
  const std::size_t optimum = brute_force_cover(d, 0.5);
  CHECK(optimum == 4);
  CHECK(greedy >= optimum);
  CHECK(static_cast<double>(greedy) <= optimum * harmonic_factor(d, 0.5));

  // Thresholds over 16 points, n = 16: every level of the hierarchy.
  const auto cls = threshold_class(16, 16);
  est::Substream s(17, 0);
  const auto ctx = draw_context(cls, s);
  const auto dist = empirical_distances(cls, ctx);
  const auto h = build_hierarchy(dist);
  check_hierarchy(h, dist);
  for (const auto& level : h.levels) {
    const double radius = std::ldexp(1.0, -level.k);
    const std::size_t best = brute_force_cover(dist, radius);
    CAPTURE(level.k);
    CHECK(level.net.size() >= best);
    CHECK(static_cast<double>(level.net.size()) <= best * harmonic_factor(dist, radius));
  }
}

TEST_CASE("hierarchy edge cases") {
  const auto single = make_class({{0, 1, 0}}, {0, 1, 0}, 0.0, 4);
  est::Substream s(1, 0);
  const auto h = build_hierarchy(single, draw_context(single, s));
  CHECK(h.k0 == h.k1);
  CHECK(covering_bound(h) == 0.0);

  // Two points at distance sqrt(2/n), n = 16: first k with 2^-k < sqrt(1/8) is 2.
  DistanceMatrix pair(2);
  pair.set(0, 1, std::sqrt(2.0 / 16.0));
  const auto hp = build_hierarchy(pair);
  CHECK(hp.k1 == 2);
  CHECK(hp.k0 == 1);
  check_hierarchy(hp, pair);
  // n = 8 puts sqrt(2/n) exactly on 2^-1; strict separation needs k = 2.
  pair.set(0, 1, std::sqrt(2.0 / 8.0));
  CHECK(build_hierarchy(pair).k1 == 2);
}

TEST_CASE("covering bound examples") {
  NetHierarchy flat;
  flat.k0 = 0;
  flat.k1 = 2;
  for (int k = 0; k <= 2; ++k) flat.levels.push_back({k, {0}, {0}, {0}});
  CHECK(covering_bound(flat) == 0.0);

  NetHierarchy one;
  one.k0 = 1;
  one.k1 = 2;
  one.levels.push_back({1, {0}, {0, 0, 0, 0}, {0, 0, 0, 0}});
  one.levels.push_back({2, {0, 1, 2, 3}, {0, 1, 2, 3}, {0, 1, 2, 3}});
  CHECK(covering_bound(one) == doctest::Approx(0.5 * std::sqrt(2.0 * std::log(4.0))).epsilon(1e-15));
  const auto report = covering_report(one);
  REQUIRE(report.per_level.size() == 1);
  CHECK(report.per_level[0].first == 2);
}

TEST_CASE("rademacher process and bound dominance") {
  const auto cls = threshold_class(64, 32, 0.1);
  for (std::uint64_t draw = 0; draw < 3; ++draw) {
    est::Substream s(100 + draw, 0);
    const auto ctx = draw_context(cls, s);
    const auto h = build_hierarchy(cls, ctx);
    const auto gen = conditional_gen(cls, ctx, 2000, 200 + draw, 1);
    CHECK(gen.value <= covering_bound(h) + 5.0 * gen.std_error);
    CHECK(gen.value >= -5.0 * gen.std_error);
  }
  const auto a = simulate_scaling(cls, 64, 9, 1);
  const auto b = simulate_scaling(cls, 64, 9, 3);
  CHECK(a.mc_gen.value == b.mc_gen.value);
  CHECK(a.covering_bound_over_sqrt_n == b.covering_bound_over_sqrt_n);
  CHECK(a.n == 32);
}
