#include <doctest.h>

#include <boost/math/distributions/hypergeometric.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <algorithm>
#include <cmath>
#include <random>

#include "oracles/exact_binomial.hpp"
#include "qkdfs/error.hpp"
#include "qkdfs/stats.hpp"

using namespace qkdfs;

namespace {
const LogProb kPlotEps = LogProb::from_prob(1e-10 / (4.0 * std::sqrt(12.0)));
}

TEST_CASE("binary entropy edge values") {
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(0.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(binary_entropy(0.75) == 1.0);
  CHECK(binary_entropy(1.0) == 1.0);
  CHECK(binary_entropy(0.11) == doctest::Approx(0.499915958164527995640).epsilon(1e-14));
  CHECK_THROWS_AS(binary_entropy(-1e-9), DomainError);
  CHECK_THROWS_AS(binary_entropy(NAN), DomainError);
  CHECK_THROWS_AS(binary_entropy(INFINITY), DomainError);
}

TEST_CASE("binary entropy is concave on [0, 1/2]") {
  const double step = 1e-3;
  for (double x = step; x + step <= 0.5; x += step) {
    const double d2 = binary_entropy(x + step) - 2 * binary_entropy(x) + binary_entropy(x - step);
    CHECK(d2 <= 0.0);
  }
}

TEST_CASE("C_bin trivial cases") {
  CHECK(binom_tail_cbin({10, 0.0, 0.1}) == 0.0);
  CHECK(binom_tail_cbin({10, 1.0, 0.0}) == 1.0);
  CHECK(binom_tail_cbin({10, 0.3, 0.8}) == 0.0);
  CHECK(binom_tail_cbin({50, 0.1, 0.1}) ==
        doctest::Approx(0.024537935704591456630).epsilon(1e-13));
}

TEST_CASE("C_bin matches the big-rational oracle on a small grid") {
  const int deltas[][2] = {{0, 1}, {1, 100}, {1, 10}, {1, 2}};
  const int cs[][2] = {{0, 1}, {1, 100}, {1, 20}, {1, 10}, {1, 5}, {3, 10}};
  for (int n : {1, 7, 50, 333}) {
    for (const auto& d : deltas) {
      const oracle::RationalBinomial exact(n, d[0], d[1]);
      for (const auto& c : cs) {
        const auto k = oracle::exact_threshold(n, d[0], d[1], c[0], c[1]);
        const double ref = exact.upper_tail_double(k);
        const double got = binom_tail_cbin(
            {n, static_cast<double>(d[0]) / d[1], static_cast<double>(c[0]) / c[1]});
        CHECK(std::fabs(got - ref) <= 1e-12);
      }
    }
  }
}

TEST_CASE("C_bin is non-increasing in c") {
  for (double delta : {0.01, 0.1, 0.5}) {
    double prev = 2.0;
    for (int j = 0; j <= 200; ++j) {
      const double v = binom_tail_cbin({200, delta, j / 400.0});
      CHECK(v <= prev);
      prev = v;
    }
  }
}

TEST_CASE("log tail stays finite deep in the tail") {
  const double lt = log_binom_upper_tail(1000000, 1e-3, 2000);
  CHECK(std::isfinite(lt));
  CHECK(lt < -200.0);
  CHECK(log_binom_upper_tail(100, 0.5, 0) == 0.0);
  CHECK(std::isinf(log_binom_upper_tail(100, 0.5, 101)));
}

TEST_CASE("gamma_bin conventions and closed forms") {
  const LogProb e5 = LogProb::from_prob(1e-5);
  CHECK(gamma_bin(1000, 0.0, e5, GammaBinMethod::exact) == 0.0);
  CHECK(gamma_bin(1000, 0.01, e5, GammaBinMethod::hoeffding) ==
        doctest::Approx(0.107298301314467361982).epsilon(1e-14));
  CHECK_THROWS_AS(gamma_bin(1000, 0.1, LogProb::one(), GammaBinMethod::exact), DomainError);
  CHECK_THROWS_AS(gamma_bin(1000, 0.1, LogProb::zero(), GammaBinMethod::exact), DomainError);
  CHECK(resolve_gamma_bin_method(kPlotEps, GammaBinMethod::automatic) == GammaBinMethod::hoeffding);
  CHECK(resolve_gamma_bin_method(LogProb::from_prob(1e-3), GammaBinMethod::automatic) ==
        GammaBinMethod::exact);
}

TEST_CASE("gamma_bin exact is the minimal grid point and hoeffding dominates it") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> nd(1, 2000);
  std::uniform_real_distribution<double> dd(0.001, 0.6);
  std::uniform_real_distribution<double> ed(-12.0, -1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = nd(rng);
    const double delta = dd(rng);
    const LogProb eps = LogProb::from_log2(ed(rng));
    const double c = gamma_bin(n, delta, eps, GammaBinMethod::exact);
    const double target = 2.0 * eps.ln();
    CHECK(log_binom_tail_cbin({n, delta, c}) <= target);
    if (c > 0.0) {
      CHECK(log_binom_tail_cbin({n, delta, c - 1.0 / n}) > target);
    }
    CHECK(gamma_bin(n, delta, eps, GammaBinMethod::hoeffding) >= c);
  }
}

TEST_CASE("gamma_serf inverts the Serfling bound") {
  const double g = gamma_serf(1e6, 1e6, kPlotEps);
  CHECK(g == doctest::Approx(0.00716304743395615991484).epsilon(1e-13));
  const LogProb eps = LogProb::from_prob(1e-3);
  const double g2 = gamma_serf(500, 800, eps);
  CHECK(serfling_bound(500, 800, g2) == doctest::Approx(1e-6).epsilon(1e-10));
  CHECK(serfling_bound(500, 800, 0.0) == 1.0);
  double prev = INFINITY;
  for (double nt = 10; nt < 1e9; nt *= 3) {
    const double v = gamma_serf(nt, 1e5, eps);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("serfling bound holds for random test/key splits") {
  // Errors falling into the key set of a uniformly random split are hypergeometric.
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const LogProb eps = LogProb::from_prob(0.2);
  const int trials = 20000;
  for (auto [n_test, n_key] : {std::pair<unsigned, unsigned>{300, 300}, {2000, 200}}) {
    const double gamma = gamma_serf(n_test, n_key, eps);
    const double bound = serfling_bound(n_test, n_key, gamma);
    CHECK(bound == doctest::Approx(0.04).epsilon(1e-12));
    for (double frac : {0.05, 0.5}) {
      const auto errors = static_cast<unsigned>(std::lround(frac * (n_test + n_key)));
      const boost::math::hypergeometric_distribution<double> h(errors, n_key, n_test + n_key);
      const unsigned lo = errors > n_test ? errors - n_test : 0;
      std::vector<double> cdf;
      double acc = 0.0;
      for (unsigned k = lo; k <= std::min(errors, n_key); ++k) cdf.push_back(acc += boost::math::pdf(h, k));
      int violations = 0;
      for (int t = 0; t < trials; ++t) {
        const auto idx = static_cast<unsigned>(std::upper_bound(cdf.begin(), cdf.end(), u(rng) * acc) - cdf.begin());
        const unsigned k = std::min(lo + idx, std::min(errors, n_key));
        violations += static_cast<double>(k) / n_key >= static_cast<double>(errors - k) / n_test + gamma;
      }
      CHECK(static_cast<double>(violations) / trials <= bound + 3.0 * std::sqrt(bound / trials));
    }
  }
}

TEST_CASE("hoeffding deviation") {
  CHECK(hoeffding_dev(0, kPlotEps) == 0.0);
  CHECK(hoeffding_dev(2e5, kPlotEps) == doctest::Approx(2280.40225426280090181).epsilon(1e-13));
  CHECK(hoeffding_dev(4e5, kPlotEps) / hoeffding_dev(1e5, kPlotEps) ==
        doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("beta quantile") {
  CHECK(beta_quantile(0.5, 1, 1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(beta_quantile(0.25, 1, 1) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_THROWS_AS(beta_quantile(0.0, 1, 1), DomainError);
  CHECK_THROWS_AS(beta_quantile(0.5, 0, 1), DomainError);
  // Non-integer parameters take the continued-fraction path.
  for (double a : {0.5, 2.5, 17.3}) {
    for (double b : {0.7, 3.2, 40.5}) {
      for (double q : {1e-6, 0.05, 0.5, 0.95}) {
        const double ref = boost::math::ibeta_inv(a, b, q);
        CHECK(std::fabs(beta_quantile(q, a, b) - ref) <= 1e-10);
      }
    }
  }
}

TEST_CASE("integer beta quantiles agree with the exact binomial bisection oracle") {
  for (auto [x, n] : {std::pair{37, 200}, {1, 10}, {5, 60}, {59, 60}, {100, 150}}) {
    for (double eps : {0.05, 1e-3}) {
      const auto ref = oracle::clopper_pearson_bisect(x, n, eps);
      const Interval got = clopper_pearson(x, n, eps);
      CHECK(std::fabs(got.lo - ref.lo) <= 1e-10);
      CHECK(std::fabs(got.hi - ref.hi) <= 1e-10);
    }
  }
}

TEST_CASE("clopper-pearson fixed values and boundaries") {
  const Interval iv = clopper_pearson(37, 200, 0.05);
  CHECK(iv.lo == doctest::Approx(0.133728660179761621210).epsilon(1e-11));
  CHECK(iv.hi == doctest::Approx(0.245863462448678379788).epsilon(1e-11));
  CHECK(clopper_pearson(0, 100, 0.05).lo == 0.0);
  CHECK(clopper_pearson(100, 100, 0.05).hi == 1.0);
  CHECK_THROWS_AS(clopper_pearson(5, 4, 0.05), DomainError);
  for (int x = 0; x <= 50; ++x) {
    const Interval v = clopper_pearson(x, 50, 0.01);
    CHECK(v.lo <= x / 50.0);
    CHECK(v.hi >= x / 50.0);
  }
}

TEST_CASE("clopper-pearson handles sub-double security levels") {
  const Interval iv = clopper_pearson(500, 1000, LogProb::from_log2(-2000.0));
  CHECK(iv.lo > 0.0);
  CHECK(iv.lo < 0.5);
  CHECK(iv.hi < 1.0);
  CHECK(iv.hi > 0.5);
}
