#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "compprobe/errors.h"
#include "compprobe/random.h"
#include "compprobe/stats.h"
#include "oracles.h"

using namespace compprobe;
using namespace compprobe::testing;

namespace {

// Two-sided Student t tail by Simpson integration of the density.
double OracleTwoSidedT(double t, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) /
                   std::sqrt(df * 3.141592653589793);
  auto pdf = [&](double x) { return c * std::pow(1 + x * x / df, -(df + 1) / 2); };
  const int steps = 200000;
  const double h = std::abs(t) / steps;
  double area = pdf(0) + pdf(std::abs(t));
  for (int i = 1; i < steps; ++i) area += (i % 2 ? 4 : 2) * pdf(i * h);
  return 1 - 2 * area * h / 3;
}

}  // namespace

TEST_CASE("spearman on small examples") {
  const std::vector<double> x = {1, 2, 3};
  CHECK(Spearman(x, std::vector<double>{10, 20, 30}).rho == 1.0);
  CHECK(Spearman(x, std::vector<double>{3, 2, 1}).rho == -1.0);
  const std::vector<double> tx = {1, 2, 2, 4}, ty = {1, 3, 2, 4};
  CHECK(std::abs(Spearman(tx, ty).rho - OracleSpearman(tx, ty)) <= 1e-12);
  CHECK_THROWS_AS(Spearman(x, std::vector<double>{5, 5, 5}), UndefinedCorrelation);
  CHECK_THROWS_AS(Spearman(std::vector<double>{1, 2}, std::vector<double>{1, 2}),
                  TooSmall);
  CHECK_THROWS_AS(Spearman(x, std::vector<double>{1, 2}), DimError);
  CHECK(AverageRanks(std::vector<double>{3, 1, 3, 2}) ==
        std::vector<double>{3.5, 1, 3.5, 2});
}

TEST_CASE("oracle: spearman with ties over random instances") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng.Below(25);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng.Below(6));  // heavy ties
      y[i] = rng.Uniform() < 0.5 ? static_cast<double>(rng.Below(4)) : rng.Normal();
    }
    if (std::adjacent_find(x.begin(), x.end(), std::not_equal_to<>()) == x.end() ||
        std::adjacent_find(y.begin(), y.end(), std::not_equal_to<>()) == y.end()) {
      continue;
    }
    SpearmanOptions o;
    o.method = PValueMethod::kAsymptotic;
    REQUIRE(std::abs(Spearman(x, y, o).rho - OracleSpearman(x, y)) <= 1e-9);
  }
}

TEST_CASE("property: spearman is invariant to increasing transforms") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(20), y(20), fx(20), gy(20);
    for (std::size_t i = 0; i < 20; ++i) {
      x[i] = rng.Normal();
      y[i] = x[i] + rng.Normal();
      fx[i] = std::exp(3 * x[i]);
      gy[i] = y[i] * y[i] * y[i] + 5;
    }
    SpearmanOptions o;
    o.method = PValueMethod::kAsymptotic;
    REQUIRE(std::abs(Spearman(x, y, o).rho - Spearman(fx, gy, o).rho) <= 1e-12);
  }
}

TEST_CASE("asymptotic p-value matches the t distribution") {
  for (auto [rho, n] : {std::pair{0.5, 30u}, {0.1, 100u}, {-0.3, 40u}, {0.9, 5u}}) {
    const double df = n - 2.0;
    const double t = rho * std::sqrt(df / (1 - rho * rho));
    CHECK(AsymptoticCorrelationPValue(rho, n) ==
          doctest::Approx(OracleTwoSidedT(t, df)).epsilon(1e-7));
  }
  CHECK(AsymptoticCorrelationPValue(1.0, 10) == 0.0);
  CHECK(AsymptoticCorrelationPValue(0.0, 10) == doctest::Approx(1.0));
}

TEST_CASE("permutation p-value agrees with a Monte Carlo oracle") {
  std::mt19937 oracle_rng(12345);
  Rng data(8);
  for (std::size_t n : {6u, 8u, 12u, 20u}) {
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = data.Normal();
      y[i] = 0.4 * x[i] + data.Normal();
    }
    SpearmanOptions o;
    o.method = PValueMethod::kPermutation;
    o.seed = 99;
    o.permutations = 20000;
    const auto r = Spearman(x, y, o);

    const int draws = 20000;
    int hits = 0;
    std::vector<double> shuffled = y;
    for (int k = 0; k < draws; ++k) {
      std::shuffle(shuffled.begin(), shuffled.end(), oracle_rng);
      hits += std::abs(OracleSpearman(x, shuffled)) >= std::abs(r.rho) - 1e-12;
    }
    const double p = static_cast<double>(hits) / draws;
    const double sigma = std::sqrt(std::max(p * (1 - p), 1e-4) * (2.0 / draws));
    CHECK(std::abs(r.p_raw - p) <= 3 * sigma);
  }
}

TEST_CASE("auto method switches at the threshold") {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < kPermutationThreshold; ++i) {
    x.push_back(static_cast<double>(i));
    y.push_back(static_cast<double>((i * 7) % kPermutationThreshold));
  }
  const auto above = Spearman(x, y);
  CHECK(above.p_raw == AsymptoticCorrelationPValue(above.rho, above.n));
  x.pop_back();
  y.pop_back();
  SpearmanOptions perm;
  perm.method = PValueMethod::kPermutation;
  CHECK(Spearman(x, y).p_raw == Spearman(x, y, perm).p_raw);
}

TEST_CASE("holm examples") {
  CHECK(HolmBonferroni(std::vector<double>{0.01, 0.04}) ==
        std::vector<double>{0.02, 0.04});
  CHECK(HolmBonferroni(std::vector<double>{0.5}) == std::vector<double>{0.5});
  CHECK(HolmBonferroni(std::vector<double>{0.9, 0.9, 0.9}) ==
        std::vector<double>{1.0, 1.0, 1.0});
  CHECK(HolmBonferroni(std::vector<double>{}).empty());
  CHECK_THROWS_AS(HolmBonferroni(std::vector<double>{0.1, 1.5}), DomainError);
  CHECK_THROWS_AS(HolmBonferroni(std::vector<double>{NAN}), DomainError);
}

TEST_CASE("oracle and properties: holm over random instances") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(1 + rng.Below(12));
    for (auto& v : p) v = rng.Uniform() < 0.2 ? 0.05 : rng.Uniform() * rng.Uniform();
    const auto adj = HolmBonferroni(p);
    const auto oracle = OracleHolm(p);
    for (std::size_t i = 0; i < p.size(); ++i) {
      REQUIRE(std::abs(adj[i] - oracle[i]) <= 1e-9);
      REQUIRE(adj[i] >= p[i]);
      REQUIRE(adj[i] <= 1.0);
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (p[i] < p[j]) REQUIRE(adj[i] <= adj[j]);
      }
    }
  }
}

TEST_CASE("adjust holm fills the adjusted field") {
  std::vector<CorrelationResult> r(2);
  r[0].p_raw = 0.01;
  r[1].p_raw = 0.04;
  AdjustHolm(r);
  CHECK(r[0].p_adjusted == 0.02);
  CHECK(r[1].p_adjusted == 0.04);
}

TEST_CASE("krippendorff alpha examples") {
  const std::vector<std::string> units = {"u1", "u2", "u3", "u4"}, ann = {"a", "b"};
  const std::vector<std::vector<double>> same = {{1, 1}, {2, 2}, {3, 3}, {2, 2}};
  CHECK(KrippendorffAlpha(ToTable(same, units, ann)) == 1.0);

  const std::vector<std::vector<double>> mixed = {{1, 1}, {2, 2}, {3, 3}, {1, 3}};
  CHECK(std::abs(KrippendorffAlpha(ToTable(mixed, units, ann)) -
                 OracleOrdinalAlpha(mixed)) <= 1e-9);

  CHECK_THROWS_AS(KrippendorffAlpha(ToTable({{1, 2}}, {"u"}, ann)), Undefined);
  CHECK_THROWS_AS(KrippendorffAlpha(ToTable({{1}, {2}, {3}}, {"x", "y", "z"}, ann)),
                  Undefined);
  // One value everywhere: no disagreement of either kind.
  CHECK(KrippendorffAlpha(ToTable({{2, 2}, {2, 2}}, {"x", "y"}, ann)) == 1.0);
}

TEST_CASE("krippendorff nominal and interval on a known table") {
  // Two coders, units (1,1) (1,2) (2,2) (2,2): n = 8, o_12 = o_21 = 1,
  // n_1 = 3, n_2 = 5. D_o = 2 / 8; D_e = 2 * 3 * 5 / (8 * 7).
  const std::vector<std::vector<double>> data = {{1, 1}, {1, 2}, {2, 2}, {2, 2}};
  const auto t = ToTable(data, {"a", "b", "c", "d"}, {"x", "y"});
  const double expected = 1 - (2.0 / 8) / (30.0 / 56);
  CHECK(KrippendorffAlpha(t, AlphaLevel::kNominal) == doctest::Approx(expected).epsilon(1e-12));
  // Values one apart make the interval metric coincide with nominal.
  CHECK(KrippendorffAlpha(t, AlphaLevel::kInterval) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("oracle: ordinal alpha over random instances") {
  Rng rng(5150);
  std::size_t compared = 0;
  while (compared < 200) {
    const std::size_t n_units = 2 + rng.Below(8);
    std::vector<std::vector<double>> units(n_units);
    for (auto& u : units) {
      const double center = static_cast<double>(1 + rng.Below(3));
      for (std::size_t a = 0, m = 1 + rng.Below(4); a < m; ++a) {
        u.push_back(rng.Uniform() < 0.6 ? center : static_cast<double>(1 + rng.Below(3)));
      }
    }
    std::vector<std::string> names, annotators = {"a", "b", "c", "d"};
    for (std::size_t i = 0; i < n_units; ++i) names.push_back("u" + std::to_string(i));
    double got;
    try {
      got = KrippendorffAlpha(ToTable(units, names, annotators));
    } catch (const Undefined&) {
      continue;
    }
    REQUIRE(std::abs(got - OracleOrdinalAlpha(units)) <= 1e-9);
    ++compared;
  }
  CHECK(compared == 200);
}

TEST_CASE("property: alpha is invariant to unit order and annotator labels") {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<double>> units(6);
    for (auto& u : units) {
      for (int a = 0; a < 3; ++a) u.push_back(static_cast<double>(1 + rng.Below(3)));
    }
    const std::vector<std::string> names = {"a", "b", "c", "d", "e", "f"};
    double base;
    try {
      base = KrippendorffAlpha(ToTable(units, names, {"x", "y", "z"}));
    } catch (const Undefined&) {
      continue;
    }
    auto shuffled_units = units;
    std::vector<std::size_t> idx = {0, 1, 2, 3, 4, 5};
    rng.Shuffle(idx);
    for (std::size_t i = 0; i < 6; ++i) shuffled_units[i] = units[idx[i]];
    for (auto& u : shuffled_units) rng.Shuffle(u);
    const double moved =
        KrippendorffAlpha(ToTable(shuffled_units, {"q", "r", "s", "t", "u", "v"},
                                  {"k3", "k1", "k2"}));
    REQUIRE(std::abs(base - moved) <= 1e-12);
  }
}
