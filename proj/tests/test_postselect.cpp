#include <doctest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>

#include "qkdfs/error.hpp"
#include "qkdfs/postselect.hpp"

using namespace qkdfs;

namespace {
double exact_log2_binom(int top, int k) {
  boost::multiprecision::cpp_int c = 1;
  for (int i = 1; i <= k; ++i) c = c * (top - k + i) / i;
  return static_cast<double>(log2(boost::multiprecision::cpp_bin_float_50(c)));
}
}  // namespace

TEST_CASE("symmetric subspace dimension trivial values") {
  for (std::int64_t n : {0LL, 1LL, 5LL, 1000000LL}) CHECK(log2_sym_dim(n, 1) == 0.0);
  for (std::int64_t x : {1, 2, 7, 3600}) CHECK(log2_sym_dim(1, x) == doctest::Approx(std::log2(x)).epsilon(1e-14));
  CHECK(log2_sym_dim(4, 3) == doctest::Approx(std::log2(15.0)).epsilon(1e-14));
  CHECK_THROWS_AS(log2_sym_dim(-1, 3), DomainError);
  CHECK_THROWS_AS(log2_sym_dim(3, 0), DomainError);
}

TEST_CASE("symmetric subspace dimension matches exact binomials for n + x <= 60") {
  for (int n = 0; n <= 59; ++n) {
    for (int x = 1; n + x <= 60; ++x) {
      CHECK(std::fabs(log2_sym_dim(n, x) - exact_log2_binom(n + x - 1, n)) <= 1e-9);
    }
  }
}

TEST_CASE("symmetric subspace dimension at protocol sizes") {
  CHECK(log2_sym_dim(10000000000, 3600) == doctest::Approx(82224.8640375568489126).epsilon(1e-12));
  CHECK(log2_sym_dim(10000000000, 20) == doctest::Approx(574.410882229991192826).epsilon(1e-12));
  CHECK(log2_sym_dim(1000000000000, 3600) == doctest::Approx(106136.101539295560844).epsilon(1e-12));
  // Large k takes the log-gamma branch.
  const double lg = log2_sym_dim(3000000, 2000001);
  const double ref = (std::lgamma(5000001.0) - std::lgamma(3000001.0) - std::lgamma(2000001.0)) / std::log(2.0);
  CHECK(lg == doctest::Approx(ref).epsilon(1e-10));
}

TEST_CASE("symmetric subspace dimension respects the entropy-style upper bound") {
  for (std::int64_t n : {1LL, 10LL, 1000LL, 1000000LL, 10000000000LL}) {
    for (std::int64_t x : {2, 5, 20, 3600}) {
      const double bound = static_cast<double>(x - 1) *
                           std::log2(std::exp(1.0) * static_cast<double>(n + x - 1) / static_cast<double>(x - 1));
      CHECK(log2_sym_dim(n, x) <= bound);
    }
  }
}

TEST_CASE("x calculators") {
  CHECK(x_generic(2, 3) == 36);
  CHECK(x_generic(1, 1) == 1);
  CHECK(x_block_diagonal({{2, 1}, {2, 2}}) == 20);
  CHECK(x_block_diagonal({{5, 5}}) == x_generic(5, 5));
  CHECK(x_decoy_tagged(3, 3, 4, {1, 2}) == 3600);
  CHECK_THROWS_AS(x_block_diagonal({}), DomainError);
  CHECK_THROWS_AS(x_generic(0, 2), DomainError);
  CHECK_THROWS_AS(x_generic(1 << 20, 1 << 20), DomainError);
}

TEST_CASE("lifted key length") {
  const PSParams unit = PSParams::make(1000, 1, LogProb::from_prob(0.5));
  CHECK(lift_key_length(12345, unit) == 12345);
  const PSParams qubit = PSParams::make(10000000000, 20, LogProb::from_prob(1e-10 / 2));
  CHECK(lift_key_length(1000000, qubit) == 998784);
  CHECK(lift_key_length(1000, qubit) == 0);
}

TEST_CASE("lift penalty strictly increases in n and x") {
  const LogProb et = LogProb::from_prob(1e-11);
  double prev = -1.0;
  for (std::int64_t n = 1; n < 10000000000; n *= 7) {
    const double p = lift_penalty_bits(PSParams::make(n, 20, et));
    CHECK(p > prev);
    prev = p;
  }
  prev = -1.0;
  for (std::int64_t x = 1; x < 5000; x = x * 2 + 1) {
    const double p = lift_penalty_bits(PSParams::make(1000000, x, et));
    CHECK(p > prev);
    prev = p;
  }
}

TEST_CASE("lift epsilon") {
  const PSParams p = PSParams::make(1000000, 20, LogProb::from_prob(1e-30));
  const LogProb g = LogProb::from_log2(p.log2_g);
  CHECK(lift_epsilon(LogProb::zero(), p).log2() == doctest::Approx((g * p.eps_tilde).log2()).epsilon(1e-15));
  const PSParams unit = PSParams::make(1000000, 1, LogProb::zero());
  const LogProb e = LogProb::from_prob(1e-20);
  CHECK(lift_epsilon(e, unit).value() == doctest::Approx(std::sqrt(8e-20)).epsilon(1e-13));
  // Trivial security is reported, not rejected.
  const PSParams huge = PSParams::make(10000000000, 3600, LogProb::from_prob(1e-10));
  CHECK(lift_epsilon(LogProb::from_prob(1e-10), huge).log2() > 0.0);
}

TEST_CASE("required IID epsilon inverts the lift") {
  for (std::int64_t x : {1, 20, 3600}) {
    for (double target_log2 : {-10.0, -33.2, -200.0}) {
      const LogProb target = LogProb::from_log2(target_log2);
      const PSParams probe = PSParams::make(10000000000, x, LogProb::one());
      const PSParams p = PSParams::make(10000000000, x, LogProb::from_log2(target_log2 - 1.0 - probe.log2_g));
      const IidEpsilonResult r = required_iid_epsilon(target, p);
      REQUIRE(r.feasible);
      // Balanced split: eps_iid = eps^2 / (32 g^2).
      CHECK(r.eps_iid.log2() == doctest::Approx(2 * target_log2 - 5 - 2 * p.log2_g).epsilon(1e-12));
      CHECK(std::fabs(lift_epsilon(r.eps_iid, p).log2() - target_log2) <= 1e-9);
    }
  }
}

TEST_CASE("recipe eps_tilde = eps/2 is infeasible once g > 2") {
  const LogProb target = LogProb::from_prob(1e-10);
  const PSParams p = PSParams::make(10000000000, 3600, LogProb::from_prob(1e-10 / 2));
  const IidEpsilonResult r = required_iid_epsilon(target, p);
  CHECK_FALSE(r.feasible);
  CHECK(r.log2_g_eps_tilde == doctest::Approx(82190.6447566079752891).epsilon(1e-12));
}
