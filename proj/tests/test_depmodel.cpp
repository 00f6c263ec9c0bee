#include <cmath>
#include <memory>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "depsens/depmodel.hpp"
#include "depsens/sampling.hpp"
#include "test_util.hpp"

using namespace depsens;

namespace {

// Draws n joint samples by pushing margin/latent/aux uniforms through the DM.
Eigen::MatrixXd dm_sample(const dependency_model& dm, const margin& lead, std::size_t n,
                          std::uint64_t seed) {
  const int d = dm.dim();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), d);
  counter_rng ru(seed, 0);
  std::vector<counter_rng> rz, ra;
  for (int i = 0; i < dm.output_count(); ++i) rz.emplace_back(seed, static_cast<std::uint64_t>(1 + i));
  for (int a = 0; a < dm.aux_count(); ++a)
    rz.emplace_back(seed, static_cast<std::uint64_t>(101 + a));
  std::vector<double> z(static_cast<std::size_t>(dm.output_count()));
  std::vector<double> aux(static_cast<std::size_t>(dm.aux_count()));
  std::vector<double> y(static_cast<std::size_t>(dm.output_count()));
  for (std::size_t r = 0; r < n; ++r) {
    const double x = lead.quantile(ru.u01(r));
    for (int i = 0; i < dm.output_count(); ++i) {
      const latent_law law = dm.latent(i);
      z[static_cast<std::size_t>(i)] = law.quantile(rz[static_cast<std::size_t>(i)].u01(r));
    }
    for (int a = 0; a < dm.aux_count(); ++a)
      aux[static_cast<std::size_t>(a)] =
          rz[static_cast<std::size_t>(dm.output_count() + a)].u01(r);
    dm.eval(x, z, aux, y);
    out(static_cast<Eigen::Index>(r), dm.cond_position()) = x;
    for (int i = 0; i < dm.output_count(); ++i)
      out(static_cast<Eigen::Index>(r), dm.output_order()[static_cast<std::size_t>(i)]) =
          y[static_cast<std::size_t>(i)];
  }
  return out;
}

std::vector<double> column(const Eigen::MatrixXd& m, int c) {
  std::vector<double> v(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) v[static_cast<std::size_t>(i)] = m(i, c);
  return v;
}

// Pairwise-Spearman + per-margin-KS battery of a DM sample against a direct
// sampling oracle with known margins.
void check_battery(const Eigen::MatrixXd& dm_draws, const Eigen::MatrixXd& oracle,
                   const std::vector<margin>& margins) {
  const std::size_t n = static_cast<std::size_t>(dm_draws.rows());
  const int d = static_cast<int>(dm_draws.cols());
  const double rho_band = 3.0 * std::sqrt(2.0 / static_cast<double>(n));
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b) {
      const double r1 = testutil::spearman(column(dm_draws, a), column(dm_draws, b));
      const double r2 = testutil::spearman(column(oracle, a), column(oracle, b));
      INFO("pair " << a << "," << b << ": dm " << r1 << " oracle " << r2);
      CHECK(std::fabs(r1 - r2) < rho_band);
    }
  for (int c = 0; c < d; ++c) {
    const margin& mc = margins[static_cast<std::size_t>(c)];
    if (!mc.continuous()) continue;
    const double dks =
        testutil::ks_statistic(column(dm_draws, c), [&](double x) { return mc.cdf(x); });
    INFO("margin " << c);
    CHECK(dks < testutil::ks_critical(n, true));
  }
}

}  // namespace

TEST_CASE("Gaussian DM closed forms (d=2)") {
  const std::vector<margin> m2{margin::normal(0, 1), margin::normal(0, 1)};
  Eigen::MatrixXd id2 = Eigen::MatrixXd::Identity(2, 2);
  gaussian_copula_dm indep(id2, m2, 0, {1});
  double out;
  indep.eval(1.7, std::array<double, 1>{0.4}, {}, std::span<double>(&out, 1));
  CHECK(out == Catch::Approx(0.4).margin(1e-9));

  const double rho = 0.63;
  Eigen::MatrixXd R(2, 2);
  R << 1, rho, rho, 1;
  gaussian_copula_dm dm(R, m2, 0, {1});
  for (double x : {-1.3, 0.2, 2.4})
    for (double z : {-0.7, 0.0, 1.1}) {
      dm.eval(x, std::span<const double>(&z, 1), {}, std::span<double>(&out, 1));
      CHECK(out == Catch::Approx(rho * x + std::sqrt(1 - rho * rho) * z).margin(1e-9));
    }
}

TEST_CASE("Gaussian DM matches the trivariate conditional display") {
  const double r12 = 0.5, r13 = 0.2, r23 = 0.3;
  Eigen::MatrixXd R(3, 3);
  R << 1, r12, r13, r12, 1, r23, r13, r23, 1;
  const double c22 = std::sqrt(1 - r12 * r12);
  const double c32 = (r23 - r12 * r13) / std::sqrt(1 - r12 * r12);
  const double c33 =
      std::sqrt((1 - r12 * r12 - r13 * r13 - r23 * r23 + 2 * r12 * r13 * r23) / (1 - r12 * r12));
  for (const auto& [s1, s2, s3] : {std::array{1.0, 1.0, 1.0}, std::array{2.0, 0.7, 1.3}}) {
    const std::vector<margin> ms{margin::normal(0, s1), margin::normal(0, s2),
                                 margin::normal(0, s3)};
    gaussian_copula_dm dm(R, ms, 0, {1, 2});
    for (double x : {-0.9, 0.0, 1.4})
      for (double za : {-1.0, 0.5})
        for (double zb : {-0.2, 0.8}) {
          // Display latents are N(0, sigma^2); the DM consumes unit latents.
          const double Z2 = s2 * za, Z3 = s3 * zb;
          const double x2 = r12 * s2 / s1 * x + c22 * Z2;
          const double x3 = r13 * s3 / s1 * x + s3 * c32 * (Z2 / s2) + c33 * Z3;
          std::array<double, 2> z{za, zb}, out{};
          dm.eval(x, z, {}, out);
          CHECK(out[0] == Catch::Approx(x2).margin(1e-9));
          CHECK(out[1] == Catch::Approx(x3).margin(1e-9));
        }
  }
}

TEST_CASE("Gaussian DM construction errors") {
  const std::vector<margin> m2{margin::normal(0, 1), margin::normal(0, 1)};
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 1.0000001, 1.0000001, 1;  // eigenvalue below the 1e-10 floor
  CHECK_THROWS_AS(gaussian_copula_dm(bad, m2, 0, {1}), std::invalid_argument);
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 0.2, 0.3, 1;
  CHECK_THROWS_AS(gaussian_copula_dm(asym, m2, 0, {1}), std::invalid_argument);
  Eigen::MatrixXd scaled(2, 2);
  scaled << 2, 0, 0, 2;
  CHECK_THROWS_AS(gaussian_copula_dm(scaled, m2, 0, {1}), std::invalid_argument);
  Eigen::MatrixXd ok = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(gaussian_copula_dm(ok, {margin::normal(0, 1)}, 0, {1}), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_copula_dm(ok, m2, 0, {0}), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_copula_dm(ok, m2, 2, {1}), std::invalid_argument);
}

TEST_CASE("Student DM closed forms (d=2)") {
  const double nu = 5.0;
  const std::vector<margin> mt{margin::student_t(nu, 0, 1), margin::student_t(nu, 0, 1)};
  Eigen::MatrixXd id2 = Eigen::MatrixXd::Identity(2, 2);
  student_copula_dm indep(nu, id2, mt, 0, {1});
  double out;
  for (double x : {-2.0, 0.3, 1.9})
    for (double z : {-1.1, 0.6}) {
      indep.eval(x, std::span<const double>(&z, 1), {}, std::span<double>(&out, 1));
      CHECK(out == Catch::Approx(std::sqrt((nu + x * x) / (nu + 1.0)) * z).margin(1e-7));
    }

  const double rho = 0.3, s3 = 1.5, s4 = 0.8;
  Eigen::MatrixXd R(2, 2);
  R << 1, rho, rho, 1;
  const std::vector<margin> pair{margin::student_t(nu, 0, s3), margin::student_t(nu, 0, s4)};
  student_copula_dm dm(nu, R, pair, 0, {1});
  for (double x : {-1.2, 0.5, 2.2})
    for (double z : {-0.9, 0.7}) {
      dm.eval(x, std::span<const double>(&z, 1), {}, std::span<double>(&out, 1));
      const double expect =
          rho * s4 / s3 * x +
          std::sqrt((1 - rho * rho) * (nu * s3 * s3 + x * x) / (s3 * s3 * (nu + 1.0))) * (s4 * z);
      CHECK(out == Catch::Approx(expect).margin(1e-7));
    }
}

TEST_CASE("latent law declarations") {
  const std::vector<margin> m2{margin::normal(0, 1), margin::normal(0, 1)};
  Eigen::MatrixXd id2 = Eigen::MatrixXd::Identity(2, 2);
  gaussian_copula_dm g(id2, m2, 0, {1});
  CHECK(g.latent(0).k == latent_law::kind::normal01);
  const double nu = 5.0;
  Eigen::MatrixXd id4 = Eigen::MatrixXd::Identity(4, 4);
  const std::vector<margin> mt4(4, margin::student_t(nu, 0, 1));
  student_copula_dm s(nu, id4, mt4, 0, {1, 2, 3});
  for (int i = 0; i < 3; ++i) {
    CHECK(s.latent(i).k == latent_law::kind::student_t);
    CHECK(s.latent(i).dof == nu + i + 1);  // step i (1-based) uses nu + i
  }
  simplex_pair_dm sp(0);
  CHECK(sp.latent(0).k == latent_law::kind::uniform01);
}

TEST_CASE("Kendall tau of the Student DM matches the elliptical identity") {
  const double nu = 5.0, rho = 0.3;
  Eigen::MatrixXd R(2, 2);
  R << 1, rho, rho, 1;
  const std::vector<margin> mt{margin::student_t(nu, 0, 1), margin::student_t(nu, 0, 1)};
  student_copula_dm dm(nu, R, mt, 0, {1});
  const std::size_t n = 100000;
  const auto draws = dm_sample(dm, mt[0], n, 311);
  const double tau = testutil::kendall_tau(column(draws, 0), column(draws, 1));
  const double target = 2.0 / M_PI * std::asin(rho);
  const double se = std::sqrt(2.0 * (2.0 * n + 5.0) / (9.0 * n * (n - 1.0)));
  CHECK(std::fabs(tau - target) < 3.0 * se);
}

TEST_CASE("distribution preservation: Gaussian copula d=4 vs direct oracle") {
  Eigen::MatrixXd R(4, 4);
  R << 1, 0.5, 0.2, 0.3, 0.5, 1, 0.4, 0.25, 0.2, 0.4, 1, 0.6, 0.3, 0.25, 0.6, 1;
  const std::vector<margin> ms{margin::normal(0, 1), margin::uniform(0, 1), margin::beta(2, 3),
                               margin::student_t(6, 0.5, 1.2)};
  gaussian_copula_dm dm(R, ms, 1, {0, 2, 3});
  const std::size_t n = 100000;
  const auto draws = dm_sample(dm, ms[1], n, 1001);

  Eigen::MatrixXd oracle(static_cast<Eigen::Index>(n), 4);
  const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(R).matrixL();
  std::vector<counter_rng> rg;
  for (int c = 0; c < 4; ++c) rg.emplace_back(77, static_cast<std::uint64_t>(c));
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Vector4d g;
    for (int c = 0; c < 4; ++c) g[c] = norm_quantile(rg[static_cast<std::size_t>(c)].u01(i));
    const Eigen::Vector4d y = L * g;
    for (int c = 0; c < 4; ++c)
      oracle(static_cast<Eigen::Index>(i), c) =
          ms[static_cast<std::size_t>(c)].quantile(detail::clamp_unit(norm_cdf(y[c])));
  }
  check_battery(draws, oracle, ms);
}

TEST_CASE("distribution preservation: Student copula d=4 vs direct oracle") {
  const double nu = 5.0;
  Eigen::MatrixXd R(4, 4);
  R << 1, 0.5, 0.2, 0.3, 0.5, 1, 0.4, 0.25, 0.2, 0.4, 1, 0.6, 0.3, 0.25, 0.6, 1;
  const std::vector<margin> ms{margin::student_t(nu, 0, 1), margin::uniform(0, 1),
                               margin::normal(1, 2), margin::beta(2, 2)};
  student_copula_dm dm(nu, R, ms, 0, {1, 2, 3});
  const std::size_t n = 100000;
  const auto draws = dm_sample(dm, ms[0], n, 2002);

  Eigen::MatrixXd oracle(static_cast<Eigen::Index>(n), 4);
  const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(R).matrixL();
  std::vector<counter_rng> rg;
  for (int c = 0; c < 9; ++c) rg.emplace_back(78, static_cast<std::uint64_t>(c));
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Vector4d g;
    for (int c = 0; c < 4; ++c) g[c] = norm_quantile(rg[static_cast<std::size_t>(c)].u01(i));
    double chi2 = 0.0;  // nu integer: chi-square as a sum of squared normals
    for (int c = 4; c < 9; ++c) {
      const double w = norm_quantile(rg[static_cast<std::size_t>(c)].u01(i));
      chi2 += w * w;
    }
    const Eigen::Vector4d y = L * g * std::sqrt(nu / chi2);
    for (int c = 0; c < 4; ++c)
      oracle(static_cast<Eigen::Index>(i), c) =
          ms[static_cast<std::size_t>(c)].quantile(detail::clamp_unit(t_cdf(y[c], nu)));
  }
  check_battery(draws, oracle, ms);
}

TEST_CASE("discrete conditioning margin: distributional-transform chain vs oracle") {
  const double rho = 0.55;
  Eigen::MatrixXd R(2, 2);
  R << 1, rho, rho, 1;
  const std::vector<margin> ms{margin::bernoulli(0.3), margin::normal(0, 1)};
  gaussian_copula_dm dm(R, ms, 0, {1});
  CHECK(dm.aux_count() == 1);
  CHECK(!dm.cond_continuous());
  const std::size_t n = 100000;
  const auto draws = dm_sample(dm, ms[0], n, 3003);

  // Direct oracle: correlated normal pair, threshold the first coordinate.
  std::vector<double> ora_x(n), ora_y(n), dm_x = column(draws, 0), dm_y = column(draws, 1);
  counter_rng r1(55, 0), r2(55, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double g1 = norm_quantile(r1.u01(i));
    const double g2 = rho * g1 + std::sqrt(1 - rho * rho) * norm_quantile(r2.u01(i));
    ora_x[i] = ms[0].quantile(detail::clamp_unit(norm_cdf(g1)));
    ora_y[i] = g2;
  }
  // P(X=1) and the conditional laws of Y given each atom.
  const auto frac_one = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  CHECK(std::fabs(frac_one(dm_x) - 0.3) < 3.0 * std::sqrt(0.3 * 0.7 / static_cast<double>(n)));
  for (int atom = 0; atom <= 1; ++atom) {
    std::vector<double> a, b;
    for (std::size_t i = 0; i < n; ++i) {
      if (dm_x[i] == atom) a.push_back(dm_y[i]);
      if (ora_x[i] == atom) b.push_back(ora_y[i]);
    }
    CHECK(testutil::ks_two_sample(a, b) < testutil::ks_two_sample_critical(a.size(), b.size(), true));
  }
}

TEST_CASE("triangularity: later latents never move earlier components") {
  Eigen::MatrixXd R(4, 4);
  R << 1, 0.5, 0.2, 0.3, 0.5, 1, 0.4, 0.25, 0.2, 0.4, 1, 0.6, 0.3, 0.25, 0.6, 1;
  const std::vector<margin> ms{margin::normal(0, 1), margin::uniform(0, 1), margin::beta(2, 3),
                               margin::normal(0, 2)};
  gaussian_copula_dm g(R, ms, 1, {0, 2, 3});
  student_copula_dm s(5.0, R, ms, 2, {0, 1, 3});
  counter_rng rng(404, 0);
  std::array<double, 3> z{}, z2{}, out{}, out2{};
  for (int trial = 0; trial < 100; ++trial) {
    const auto base = static_cast<std::uint64_t>(trial) * 8;
    // Interior of both conditioning supports (uniform(0,1) and beta(2,3)).
    const double x = 0.98 * rng.u01(base) + 0.01;
    for (int i = 0; i < 3; ++i)
      z[static_cast<std::size_t>(i)] = norm_quantile(rng.u01(base + 1 + static_cast<std::uint64_t>(i)));
    for (const dependency_model* dm : {static_cast<const dependency_model*>(&g),
                                       static_cast<const dependency_model*>(&s)}) {
      for (int k = 1; k < 3; ++k) {
        z2 = z;
        z2[static_cast<std::size_t>(k)] += 0.37;  // perturb latent k only
        dm->eval(x, z, {}, out);
        dm->eval(x, z2, {}, out2);
        for (int i = 0; i < k; ++i)
          REQUIRE(out[static_cast<std::size_t>(i)] == out2[static_cast<std::size_t>(i)]);
        REQUIRE(out[static_cast<std::size_t>(k)] != out2[static_cast<std::size_t>(k)]);
      }
    }
  }
}

TEST_CASE("prefix conditioning composes bit-exactly") {
  Eigen::MatrixXd R(4, 4);
  R << 1, 0.5, 0.2, 0.3, 0.5, 1, 0.4, 0.25, 0.2, 0.4, 1, 0.6, 0.3, 0.25, 0.6, 1;
  const std::vector<margin> ms{margin::normal(0, 1), margin::uniform(0, 1), margin::beta(2, 3),
                               margin::normal(0, 2)};
  const auto g = std::make_shared<gaussian_copula_dm>(R, ms, 0, std::vector<int>{1, 2, 3});
  const auto s = std::make_shared<student_copula_dm>(4.5, R, ms, 3, std::vector<int>{2, 0, 1});
  counter_rng rng(505, 0);
  for (const std::shared_ptr<const dependency_model>& dm :
       {std::static_pointer_cast<const dependency_model>(g),
        std::static_pointer_cast<const dependency_model>(s)}) {
    CHECK_THROWS_AS(dm_condition_prefix(dm, -1), std::domain_error);
    CHECK_THROWS_AS(dm_condition_prefix(dm, 4), std::domain_error);
    for (int p = 0; p <= 3; ++p) {
      const auto cond = dm_condition_prefix(dm, p);
      CHECK(cond.suffix.output_count() == 3 - p);
      for (int trial = 0; trial < 50; ++trial) {
        const auto base = static_cast<std::uint64_t>(trial) * 8 + 1;
        const double x = 3.0 * rng.u01(base) - 1.5;
        std::array<double, 3> z{}, full{};
        for (int i = 0; i < 3; ++i)
          z[static_cast<std::size_t>(i)] =
              norm_quantile(rng.u01(base + 1 + static_cast<std::uint64_t>(i)));
        dm->eval(x, z, {}, full);
        std::array<double, 3> pre{}, suf{};
        cond.prefix.eval(x, z, {}, std::span<double>(pre.data(), static_cast<std::size_t>(p)));
        cond.suffix.eval(x, std::span<const double>(z.data(), static_cast<std::size_t>(p)),
                         std::span<const double>(z.data() + p, static_cast<std::size_t>(3 - p)),
                         {}, std::span<double>(suf.data(), static_cast<std::size_t>(3 - p)));
        for (int i = 0; i < p; ++i)
          REQUIRE(pre[static_cast<std::size_t>(i)] == full[static_cast<std::size_t>(i)]);
        for (int i = p; i < 3; ++i)
          REQUIRE(suf[static_cast<std::size_t>(i - p)] == full[static_cast<std::size_t>(i)]);
      }
    }
  }
}

TEST_CASE("transformed DM: identity and lognormal") {
  const double rho = 0.4;
  Eigen::MatrixXd R(2, 2);
  R << 1, rho, rho, 1;
  const std::vector<margin> m2{margin::normal(0, 1), margin::normal(0, 1)};
  const auto base = std::make_shared<gaussian_copula_dm>(R, m2, 0, std::vector<int>{1});
  const scalar_map id = [](double x) { return x; };
  transform_dm same(base, id, id, {id});
  double a, b;
  for (double x : {-1.0, 0.8})
    for (double z : {-0.5, 1.2}) {
      base->eval(x, std::span<const double>(&z, 1), {}, std::span<double>(&a, 1));
      same.eval(x, std::span<const double>(&z, 1), {}, std::span<double>(&b, 1));
      REQUIRE(a == b);
    }

  // Lognormal pair: Y_k = exp(X_k); condition through T_j = exp.
  const scalar_map expm = [](double x) { return std::exp(x); };
  const scalar_map logm = [](double x) { return std::log(x); };
  transform_dm logn(base, expm, logm, {expm}, {0.1, 0.5, 1.0, 2.0, 5.0});
  const std::size_t n = 100000;
  counter_rng ru(606, 0), rz(606, 1);
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double y0 = std::exp(norm_quantile(ru.u01(i)));
    const double z = norm_quantile(rz.u01(i));
    double out;
    logn.eval(y0, std::span<const double>(&z, 1), {}, std::span<double>(&out, 1));
    sum += out;
    sumsq += out * out;
  }
  const double mean = sum / static_cast<double>(n);
  const double var = sumsq / static_cast<double>(n) - mean * mean;
  const double target = std::exp(0.5);  // E exp(N(0,1))
  CHECK(std::fabs(mean - target) < 3.0 * std::sqrt(var / static_cast<double>(n)));

  // T_j that fails to invert on the probe grid is rejected at construction.
  const scalar_map sq = [](double x) { return x * x; };
  const scalar_map rt = [](double x) { return std::sqrt(x); };
  CHECK_THROWS_AS(transform_dm(base, sq, rt, {id}), std::invalid_argument);
}

TEST_CASE("coupled vector transform evaluates whole vectors only") {
  Eigen::MatrixXd R(3, 3);
  R << 1, 0.3, 0.1, 0.3, 1, 0.2, 0.1, 0.2, 1;
  const std::vector<margin> m3(3, margin::normal(0, 1));
  const auto base = std::make_shared<gaussian_copula_dm>(R, m3, 0, std::vector<int>{1, 2});
  const scalar_map id = [](double x) { return x; };
  vector_transform_dm dm(base, id, id, [](std::span<const double> in, std::span<double> out) {
    out[0] = in[0] + in[1];
    out[1] = in[0] - in[1];
  });
  std::array<double, 2> z{0.4, -1.0}, got{}, raw{};
  dm.eval(0.7, z, {}, got);
  base->eval(0.7, z, {}, raw);
  CHECK(got[0] == Catch::Approx(raw[0] + raw[1]).margin(1e-15));
  CHECK(got[1] == Catch::Approx(raw[0] - raw[1]).margin(1e-15));
  std::array<double, 1> one{};
  CHECK_THROWS_AS(dm.eval_prefix(1, 0.7, z, {}, one), std::logic_error);
}

TEST_CASE("absolute-value symmetrized DM") {
  const double rho = 0.4;
  Eigen::MatrixXd R(2, 2);
  R << 1, rho, rho, 1;
  const std::vector<margin> m2{margin::normal(0, 1), margin::normal(0, 1)};
  const auto base = std::make_shared<gaussian_copula_dm>(R, m2, 0, std::vector<int>{1});
  const scalar_map expm = [](double x) { return std::exp(x); };
  const scalar_map logm = [](double x) { return std::log(x); };
  const std::vector<double> probe{0.1, 0.5, 1.0, 2.0};
  abs_symmetric_dm dm(base, expm, logm, {expm}, probe);
  transform_dm plain(base, expm, logm, {expm}, probe);
  CHECK(dm.aux_count() == 1);
  CHECK(dm.prefix_aux(1) == std::vector<int>{0});

  // All signs forced positive: equals the plain transform at |y|.
  double a, b;
  const double aux_pos = 0.9;
  for (double y : {-2.0, -0.5, 0.7, 1.8})
    for (double z : {-1.0, 0.3}) {
      dm.eval_prefix(1, y, std::span<const double>(&z, 1), std::span<const double>(&aux_pos, 1),
                     std::span<double>(&a, 1));
      plain.eval_prefix(1, std::fabs(y), std::span<const double>(&z, 1), {},
                        std::span<double>(&b, 1));
      REQUIRE(a == b);
    }

  // Sign frequency and symmetry of the output around 0.
  const std::size_t n = 100000;
  counter_rng ry(707, 0), rz(707, 1), ra(707, 2);
  std::size_t negatives = 0, below_zero = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = std::exp(norm_quantile(ry.u01(i)));  // symmetric target through |.|
    const double z = norm_quantile(rz.u01(i));
    const double u = ra.u01(i);
    double out;
    dm.eval(y, std::span<const double>(&z, 1), std::span<const double>(&u, 1),
            std::span<double>(&out, 1));
    if (2.0 * u - 1.0 < 0.0) ++negatives;
    if (out < 0.0) ++below_zero;
  }
  const double sign_freq = static_cast<double>(negatives) / static_cast<double>(n);
  CHECK(sign_freq > 0.49);
  CHECK(sign_freq < 0.51);
  // Median within 3 SE of 0 <=> P(out < 0) within 3 * sqrt(.25/n) of 1/2.
  const double frac = static_cast<double>(below_zero) / static_cast<double>(n);
  CHECK(std::fabs(frac - 0.5) < 3.0 * std::sqrt(0.25 / static_cast<double>(n)));
}

TEST_CASE("simplex pair DM") {
  simplex_pair_dm dm(0);
  double out;
  const auto eval1 = [&](double x, double u) {
    dm.eval(x, std::span<const double>(&u, 1), {}, std::span<double>(&out, 1));
    return out;
  };
  CHECK(eval1(0.0, 0.7) == Catch::Approx(0.7).margin(1e-15));
  CHECK(eval1(1.0, 0.3) == Catch::Approx(0.0).margin(1e-15));
  CHECK(eval1(1.0, 0.9) == Catch::Approx(0.0).margin(1e-15));
  CHECK(eval1(0.4, 0.5) == Catch::Approx(0.3).margin(1e-12));

  const auto both = simplex_dm();
  CHECK(both.first->cond_position() == 0);
  CHECK(both.second->cond_position() == 1);

  // Margins Beta(1,2), constraint holds on every draw.
  const std::size_t n = 100000;
  const margin beta12 = margin::beta(1, 2);
  const auto draws = dm_sample(*both.second, beta12, n, 808);
  for (std::size_t i = 0; i < n; ++i)
    REQUIRE(draws(static_cast<Eigen::Index>(i), 0) + draws(static_cast<Eigen::Index>(i), 1) <=
            1.0 + 1e-12);
  for (int c = 0; c < 2; ++c) {
    const double d =
        testutil::ks_statistic(column(draws, c), [&](double x) { return beta12.cdf(x); });
    CHECK(d < testutil::ks_critical(n, true));
  }
}
