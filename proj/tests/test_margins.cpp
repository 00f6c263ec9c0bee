#include <cmath>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "depsens/margins.hpp"
#include "depsens/sampling.hpp"
#include "test_util.hpp"

using depsens::margin;

TEST_CASE("scalar special functions match frozen reference values") {
  // Reference values frozen from an independent high-precision implementation.
  CHECK(depsens::norm_cdf(-1.96) == Catch::Approx(0.024997895148220435).epsilon(1e-12));
  CHECK(depsens::norm_cdf(0.5) == Catch::Approx(0.6914624612740131).epsilon(1e-12));
  CHECK(depsens::norm_quantile(0.975) == Catch::Approx(1.959963984540054).margin(1e-10));
  CHECK(depsens::norm_quantile(1e-6) == Catch::Approx(-4.753424308822899).margin(1e-9));
  CHECK(depsens::norm_quantile(0.3) == Catch::Approx(-0.5244005127080409).margin(1e-11));
  CHECK(depsens::t_cdf(1.3, 5) == Catch::Approx(0.8748496829146615).margin(1e-11));
  CHECK(depsens::t_cdf(-2.1, 7) == Catch::Approx(0.0369355981064613).margin(1e-11));
  CHECK(depsens::t_quantile(0.975, 5) == Catch::Approx(2.570581835636314).margin(1e-9));
  CHECK(depsens::t_quantile(0.01, 3) == Catch::Approx(-4.540702858471386).margin(1e-8));
  CHECK(depsens::t_quantile(0.6, 11) == Catch::Approx(0.25955586047627044).margin(1e-10));
  CHECK(depsens::beta_cdf(0.3, 2, 5) == Catch::Approx(0.5798250000000003).margin(1e-11));
  CHECK(depsens::beta_cdf(0.7, 0.5, 0.5) == Catch::Approx(0.6309898804344546).margin(1e-11));
  CHECK(depsens::beta_quantile(0.9, 2, 5) == Catch::Approx(0.5103163065514917).margin(1e-10));
  CHECK(depsens::beta_quantile(0.25, 1, 2) == Catch::Approx(0.13397459621556135).margin(1e-10));
  CHECK(depsens::beta_quantile(0.5, 0.5, 3) == Catch::Approx(0.07903276707617302).margin(1e-10));
}

TEST_CASE("margin construction rejects invalid parameters") {
  CHECK_THROWS(margin::uniform(1.0, 1.0));
  CHECK_THROWS(margin::normal(0.0, 0.0));
  CHECK_THROWS(margin::student_t(-1.0));
  CHECK_THROWS(margin::beta(0.0, 1.0));
  CHECK_THROWS(margin::bernoulli(1.5));
  CHECK_THROWS(margin::discrete_finite({1.0, 2.0}, {0.5, 0.6}));
  CHECK_THROWS(margin::discrete_finite({1.0, 1.0}, {0.5, 0.5}));
  CHECK_THROWS(margin::empirical({}));
}

TEST_CASE("cdf basics") {
  CHECK(margin::normal(0, 1).cdf(0.0) == 0.5);
  CHECK(margin::uniform(0, 1).cdf(0.25) == 0.25);
  CHECK(margin::beta(1, 2).cdf(0.5) == Catch::Approx(0.75).margin(1e-12));  // 1-(1-x)^2
  const auto n23 = margin::normal(2.0, 3.0);
  CHECK(n23.cdf(2.0) == 0.5);
  CHECK(n23.cdf(5.0) == Catch::Approx(depsens::norm_cdf(1.0)).margin(1e-15));
  const auto t5 = margin::student_t(5.0, 1.0, 2.0);
  CHECK(t5.cdf(1.0) == Catch::Approx(0.5).margin(1e-12));
  // Monotone nondecreasing on a grid.
  const auto b = margin::beta(2, 5);
  double prev = -1.0;
  for (int i = 0; i <= 100; ++i) {
    const double f = b.cdf(i / 100.0);
    CHECK(f >= prev);
    prev = f;
  }
}

TEST_CASE("generalized inverse") {
  CHECK(margin::uniform(0, 1).quantile(0.3) == Catch::Approx(0.3).margin(1e-15));
  const auto bern = margin::bernoulli(0.3);  // P(X=1)=0.3, so F(0)=0.7
  CHECK(bern.quantile(0.5) == 0.0);
  CHECK(bern.quantile(0.8) == 1.0);
  CHECK(margin::student_t(5).quantile(0.975) == Catch::Approx(2.570581835636314).margin(1e-9));
  // p in {0,1}: finite support bounds, else domain error.
  CHECK(margin::uniform(-2, 3).quantile(0.0) == -2.0);
  CHECK(margin::uniform(-2, 3).quantile(1.0) == 3.0);
  CHECK(margin::beta(2, 2).quantile(0.0) == 0.0);
  CHECK(margin::beta(2, 2).quantile(1.0) == 1.0);
  CHECK_THROWS_AS(margin::normal(0, 1).quantile(0.0), std::domain_error);
  CHECK_THROWS_AS(margin::student_t(4).quantile(1.0), std::domain_error);
  CHECK_THROWS_AS(margin::normal(0, 1).quantile(-0.1), std::domain_error);
  CHECK_THROWS_AS(margin::normal(0, 1).quantile(1.1), std::domain_error);
}

TEST_CASE("cdf(inverse_cdf(p)) round trip on the 99-centile grid") {
  const margin continuous[] = {margin::uniform(-1, 4), margin::normal(0.5, 2.0),
                               margin::student_t(5, -1.0, 1.5), margin::beta(2, 5),
                               margin::beta(1, 2)};
  for (const auto& m : continuous) {
    for (int c = 1; c <= 99; ++c) {
      const double p = c / 100.0;
      CHECK(std::fabs(m.cdf(m.quantile(p)) - p) < 1e-9);
    }
  }
}

TEST_CASE("generalized inverse satisfies F^-(F(x)) <= x for continuous families") {
  const margin continuous[] = {margin::uniform(0, 1), margin::normal(0, 1), margin::beta(2, 3)};
  for (const auto& m : continuous) {
    for (int i = 1; i < 50; ++i) {
      const double x = m.quantile(i / 50.0 - 0.01 + 0.005);
      CHECK(m.quantile(m.cdf(x)) <= x + 1e-9);
    }
  }
}

TEST_CASE("distributional transform point values") {
  const auto bern = margin::bernoulli(0.3);
  CHECK(bern.transform(0.0, 0.5) == Catch::Approx(0.35).margin(1e-15));
  CHECK(bern.transform(1.0, 0.5) == Catch::Approx(0.85).margin(1e-15));
  CHECK(margin::normal(0, 1).transform(0.0, 0.99) == 0.5);
  // Continuous margins ignore lambda entirely.
  const auto u = margin::uniform(0, 2);
  CHECK(u.transform(0.5, 0.0) == u.transform(0.5, 1.0));
  CHECK_THROWS_AS(u.transform(0.5, 1.5), std::domain_error);
}

TEST_CASE("distributional transform is U(0,1) for discrete families") {
  const margin discrete[] = {
      margin::bernoulli(0.3),
      margin::discrete_finite({-1.0, 2.0, 3.5}, {0.2, 0.5, 0.3}),
      margin::empirical({1.0, 1.0, 2.0, 5.0, 5.0, 5.0, 7.0, 8.0}),
  };
  const std::size_t n = 100000;
  int stream = 0;
  for (const auto& m : discrete) {
    depsens::counter_rng rx(17, static_cast<std::uint64_t>(stream++));
    depsens::counter_rng rl(91, static_cast<std::uint64_t>(stream++));
    std::vector<double> v(n), xs(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = m.quantile(rx.u01(i));
      xs[i] = x;
      v[i] = m.transform(x, rl.u01(i));
    }
    const double d = testutil::ks_statistic(v, [](double t) { return std::clamp(t, 0.0, 1.0); });
    CHECK(d < testutil::ks_critical(n, true));
    // Quantile reconstruction is exact sample-by-sample.
    for (std::size_t i = 0; i < n; ++i) REQUIRE(m.quantile(v[i]) == xs[i]);
  }
}

TEST_CASE("empirical margin uses the right-continuous ECDF") {
  const auto e = margin::empirical({3.0, 1.0, 3.0, 2.0});  // sorted: 1,2,3,3
  CHECK(e.cdf(0.5) == 0.0);
  CHECK(e.cdf(1.0) == 0.25);
  CHECK(e.cdf(2.5) == 0.5);
  CHECK(e.cdf(3.0) == 1.0);
  CHECK(e.cdf_left(3.0) == 0.5);
  CHECK(e.pmf(3.0) == 0.5);
  CHECK(e.quantile(0.25) == 1.0);   // inf{x : F(x) >= 0.25}
  CHECK(e.quantile(0.2500001) == 2.0);
  CHECK(e.quantile(0.75) == 3.0);
}
