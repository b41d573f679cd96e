#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "stochchain/chain_core.hpp"
#include "stochchain/errors.hpp"
#include "stochchain/report_json.hpp"

using namespace stochchain;

namespace {

TruncationPolicy complete_chain() {
  TruncationPolicy p;
  p.tail_majorant = TailMajorant::none;
  return p;
}

ChainSpec single_level(double link_sq, double mi) {
  ChainSpec c;
  c.k_start = 0;
  c.truncation = complete_chain();
  c.levels.push_back({1, link_sq, mi, std::nullopt});
  return c;
}

// Term of the Gaussian mean-level series at sigma = n = 1.
ChainLevel gaussian_level(int k) {
  return {k, 3.0 / (std::ldexp(1.0, k - 1) + 1.0), 0.5 * std::log1p(std::ldexp(1.0, k)),
          std::nullopt};
}

// Oracle: extended-precision summation of sqrt(3 ln(1+2^k) / (2^(k-1)+1)) over
// k in [-200, 200]; the omitted tails are below 2^-99 on both sides.
long double gaussian_series_oracle() {
  long double sum = 0.0L;
  for (int k = -200; k <= 200; ++k) {
    const long double p = std::ldexp(1.0L, k);
    sum += std::sqrt(3.0L * std::log1p(p) / (p / 2.0L + 1.0L));
  }
  return sum;
}

ChainSpec random_chain(std::mt19937_64& rng, int levels) {
  std::uniform_real_distribution<double> link(0.0, 4.0);
  std::uniform_real_distribution<double> mi(0.0, 3.0);
  ChainSpec c;
  c.k_start = -1;
  c.truncation = complete_chain();
  for (int k = 0; k < levels; ++k) c.levels.push_back({k, link(rng), mi(rng), std::nullopt});
  return c;
}

}  // namespace

TEST_CASE("mi bound of a single level is sqrt(link) sqrt(2 mi)") {
  const auto r = evaluate_mi_bound(single_level(2.0, 1.0));
  CHECK(r.total == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(r.tail_bound == 0.0);
  CHECK(r.variant == BoundVariant::mi_form);
  REQUIRE(r.per_level.size() == 1);
  CHECK(r.per_level[0].first == 1);
}

TEST_CASE("mi bound error paths") {
  ChainSpec empty;
  CHECK_THROWS_AS(evaluate_mi_bound(empty), DomainError);

  CHECK_THROWS_AS(evaluate_mi_bound(single_level(-1.0, 1.0)), InvariantViolation);
  CHECK_THROWS_AS(evaluate_mi_bound(single_level(1.0, -0.1)), InvariantViolation);

  auto missing = single_level(1.0, 1.0);
  missing.levels[0].mi_upper.reset();
  CHECK_THROWS_AS(evaluate_mi_bound(missing), DomainError);

  auto unordered = single_level(1.0, 1.0);
  unordered.levels.push_back({1, 1.0, 1.0, std::nullopt});
  CHECK_THROWS_AS(evaluate_mi_bound(unordered), InvariantViolation);

  auto misplaced = single_level(1.0, 1.0);
  misplaced.k_start = 3;
  CHECK_THROWS_AS(evaluate_mi_bound(misplaced), InvariantViolation);

  auto bad_policy = single_level(1.0, 1.0);
  bad_policy.truncation.abs_tol = 0.0;
  CHECK_THROWS_AS(evaluate_mi_bound(bad_policy), InvariantViolation);
}

TEST_CASE("report total is the in-order sum of the per-level contributions") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto r = evaluate_mi_bound(random_chain(rng, 1 + trial));
    double sum = 0.0;
    for (const auto& [k, c] : r.per_level) sum += c;
    CHECK(r.total == sum);
  }
}

TEST_CASE("gaussian series over k in [-60, 60]") {
  ChainSpec chain;
  chain.label = "window";
  for (int k = -60; k <= 60; ++k) chain.levels.push_back(gaussian_level(k));
  const auto r = evaluate_mi_bound(chain);
  CHECK(r.total < 13.0);
  CHECK(std::isfinite(r.tail_bound));
  CHECK(r.tail_bound > 0.0);

  // Independent extended-precision oracle; also frozen to 12 digits
  // (12.9085718021067 from a 30-digit summation).
  const double oracle = static_cast<double>(gaussian_series_oracle());
  CHECK(oracle == doctest::Approx(12.9085718021067).epsilon(1e-12));
  CHECK(r.total <= oracle);
  CHECK(r.total + r.tail_bound >= oracle);
  CHECK(r.total == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("adaptive expansion certifies the gaussian tail") {
  TruncationPolicy policy;
  const auto chain = expand_chain(gaussian_level, std::nullopt, policy, "adaptive");
  const auto r = evaluate_mi_bound(chain);
  const double oracle = static_cast<double>(gaussian_series_oracle());
  CHECK(r.tail_bound <= 2e-10);
  CHECK(std::abs(r.total - oracle) <= r.tail_bound + 1e-12);
  CHECK(r.guarantee() >= oracle - 1e-12);
}

TEST_CASE("truncation soundness: 60-level window versus 200") {
  TruncationPolicy narrow;
  narrow.max_levels_each_side = 60;
  TruncationPolicy wide;
  wide.max_levels_each_side = 200;
  const auto r60 = evaluate_mi_bound(expand_chain(gaussian_level, std::nullopt, narrow, "60"));
  const auto r200 = evaluate_mi_bound(expand_chain(gaussian_level, std::nullopt, wide, "200"));
  CHECK(r60.tail_bound > 0.0);
  CHECK(std::abs(r200.total - r60.total) < r60.tail_bound);
}

TEST_CASE("geometric tail certificate") {
  CHECK(geometric_tail(1.0, 0.5) == doctest::Approx(0.5));
  CHECK(geometric_tail(0.0, 0.0) == 0.0);
  CHECK(std::isinf(geometric_tail(1.0, 1.0)));
  CHECK(std::isinf(geometric_tail(0.0, 1.0)));

  ChainSpec open_top = single_level(1.0, 1.0);
  open_top.truncation.tail_majorant = TailMajorant::geometric;
  CHECK(std::isinf(evaluate_mi_bound(open_top).tail_bound));
}

TEST_CASE("kl bound sums the supplied terms") {
  ChainSpec c;
  c.k_start = 0;
  c.truncation = complete_chain();
  c.levels.push_back({1, 1.0, std::nullopt, 0.0});
  c.levels.push_back({2, 1.0, std::nullopt, 0.0});
  CHECK(evaluate_kl_bound(c).total == 0.0);

  c.levels[0].kl_term = 0.5;
  c.levels[1].kl_term = 0.25;
  const auto r = evaluate_kl_bound(c);
  CHECK(r.total == 0.75);
  CHECK(r.variant == BoundVariant::kl_form);

  c.levels[1].kl_term.reset();
  CHECK_THROWS_AS(evaluate_kl_bound(c), DomainError);
}

TEST_CASE("partition chain levels") {
  const auto c = partition_chain(1.0, 0, 2);
  REQUIRE(c.levels.size() == 2);
  CHECK(c.levels[0].k == 1);
  CHECK(c.levels[0].link_dist_sq == 2.25);
  CHECK(c.levels[1].link_dist_sq == 0.5625);
  CHECK_FALSE(c.levels[0].mi_upper.has_value());
  CHECK(*c.k_start == 0);

  CHECK_NOTHROW(partition_chain(0.5, 1, 3));
  CHECK_THROWS_AS(partition_chain(0.5, 2, 3), PreconditionError);
  CHECK(partition_chain(1.0, 0, 1).levels.size() == 1);

  auto filled = partition_chain(1.0, 0, 2);
  for (auto& l : filled.levels) l.mi_upper = 1.0;
  filled.truncation = complete_chain();
  const auto r = evaluate_partition_bound(filled);
  CHECK(r.variant == BoundVariant::partition_form);
  CHECK(r.total == doctest::Approx((1.5 + 0.75) * std::sqrt(2.0)));

  filled.levels[0].link_dist_sq = 1.0;
  CHECK_THROWS_AS(evaluate_partition_bound(filled), InvariantViolation);
}

TEST_CASE("legendre dual of quadratic cgf") {
  const auto q = quadratic_cgf();
  CHECK(legendre_dual(q, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(legendre_dual(q, 0.0) == 0.0);
  CHECK_THROWS_AS(legendre_dual(q, -1.0), PreconditionError);

  // sigma = 2: oracle by dense lambda-grid maximization.
  const auto q4 = quadratic_cgf(4.0);
  double grid_best = 0.0;
  for (int i = 0; i <= 200000; ++i) {
    const double l = i * 1e-5;
    grid_best = std::max(grid_best, l * 2.0 - 2.0 * l * l);
  }
  CHECK(grid_best == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(legendre_dual(q4, 2.0) == doctest::Approx(grid_best).epsilon(1e-9));
}

TEST_CASE("legendre dual inverse of quadratic cgf") {
  const auto q = quadratic_cgf();
  CHECK(legendre_dual_inverse(q, 2.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(legendre_dual_inverse(q, 0.0) == 0.0);
  CHECK(legendre_dual_inverse(q, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
  for (double y : {1e-12, 1e-6, 0.1, 1.0, 10.0, 1e6}) {
    CHECK(std::abs(legendre_dual_inverse(q, y) / std::sqrt(2.0 * y) - 1.0) < 1e-9);
  }
}

TEST_CASE("sub-gamma cgf inverse against a dense grid") {
  const auto sg = sub_gamma_cgf();
  // Oracle: minimize (1 + psi(l)) / l over 10^6 interior grid points of (0, 1).
  double grid_best = std::numeric_limits<double>::infinity();
  const int points = 1000000;
  for (int i = 1; i <= points; ++i) {
    const double l = static_cast<double>(i) / (points + 1);
    grid_best = std::min(grid_best, (1.0 + l * l / (2.0 * (1.0 - l))) / l);
  }
  const double value = legendre_dual_inverse(sg, 1.0);
  CHECK(value <= grid_best + 1e-12);
  CHECK(value == doctest::Approx(grid_best).epsilon(1e-9));
  CHECK(value == doctest::Approx(std::sqrt(2.0) + 1.0).epsilon(1e-10));
  CHECK(legendre_dual(sg, value) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("cgf validation") {
  CgfSpec concave_tail{[](double l) { return l * l - l * l * l * l; }, 1e300};
  concave_tail.b = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(legendre_dual(concave_tail, 1.0), InvariantViolation);

  CgfSpec sloped{[](double l) { return l + l * l; }, std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(validate_cgf(sloped), InvariantViolation);

  CgfSpec shifted{[](double l) { return 1.0 + l * l; }, std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(validate_cgf(shifted), InvariantViolation);

  CHECK_NOTHROW(validate_cgf(quadratic_cgf(3.0)));
  CHECK_NOTHROW(validate_cgf(sub_gamma_cgf(2.0, 0.5)));
}

TEST_CASE("cgf bound") {
  auto c = single_level(1.0, 2.0);
  const auto r = evaluate_cgf_bound(c, quadratic_cgf(), [](int) { return 1.0; });
  CHECK(r.total == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.variant == BoundVariant::cgf_form);
}

TEST_CASE("property: cgf bound with quadratic psi reduces to the mi bound") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const auto chain = random_chain(rng, 1 + trial % 9);
    const auto mi = evaluate_mi_bound(chain);
    const auto cgf = evaluate_cgf_bound(chain, quadratic_cgf(), [&](int k) {
      return std::sqrt(chain.levels[static_cast<std::size_t>(k)].link_dist_sq);
    });
    CHECK(std::abs(cgf.total - mi.total) <= 1e-9 * std::max(1.0, mi.total));
  }
}

TEST_CASE("property: monotonicity and scaling") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  for (int trial = 0; trial < 25; ++trial) {
    auto chain = random_chain(rng, 1 + trial % 7);
    const auto base = evaluate_mi_bound(chain);

    auto longer = chain;
    longer.levels.push_back({chain.levels.back().k + 1, 0.25, 0.5, std::nullopt});
    CHECK(evaluate_mi_bound(longer).total > base.total);

    const double c = scale(rng);
    auto scaled = chain;
    for (auto& l : scaled.levels) l.link_dist_sq *= c * c;
    CHECK(evaluate_mi_bound(scaled).total == doctest::Approx(c * base.total).epsilon(1e-13));
  }
}

TEST_CASE("property: partition chain dominates smaller link distances") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    auto partition = partition_chain(1.0, 0, 8);
    partition.truncation = complete_chain();
    auto other = partition;
    for (std::size_t i = 0; i < partition.levels.size(); ++i) {
      const double mi = 3.0 * frac(rng);
      partition.levels[i].mi_upper = mi;
      other.levels[i].mi_upper = mi;
      other.levels[i].link_dist_sq *= frac(rng);
    }
    CHECK(evaluate_mi_bound(other).total <= evaluate_partition_bound(partition).total);
  }
}

TEST_CASE("property: legendre dual and its inverse") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  const auto q = quadratic_cgf();
  for (int trial = 0; trial < 50; ++trial) {
    const double x = u(rng);
    const double y = u(rng);
    CHECK(legendre_dual_inverse(q, legendre_dual(q, x)) <= x + 1e-6);
    CHECK(legendre_dual(q, legendre_dual_inverse(q, y)) >= y - 1e-6);
  }
}

TEST_CASE("bound report json layout") {
  BoundReport r;
  r.variant = BoundVariant::cgf_form;
  r.total = 1.0 / 3.0;
  r.tail_bound = std::numeric_limits<double>::infinity();
  r.per_level = {{-1, 2.0 / 3.0}, {0, 0.125}};
  r.label = "demo";
  const std::string text = to_json(r).dump();
  CHECK(text ==
        R"({"variant":"cgf_form","total":0.333333333333,"tail_bound":null,)"
        R"("per_level":[[-1,0.666666666667],[0,0.125]],"label":"demo"})");
  CHECK(format_real(12.9085718021067) == "12.9085718021");
}
