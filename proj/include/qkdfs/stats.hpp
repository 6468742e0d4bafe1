#pragma once

#include <cstdint>

#include "qkdfs/log_prob.hpp"

namespace qkdfs {

/// h(x) in bits, with h(x) = 1 for x > 1/2.
double binary_entropy(double x);

/// Threshold index of a binomial tail event: ceil(x) with values within
/// 1e-13 (relative) of an integer snapped to that integer first.
std::int64_t snapped_ceil(double x);
std::int64_t snapped_floor(double x);

/// ln P(X >= k) for X ~ Bin(n, p).
double log_binom_upper_tail(std::int64_t n, double p, std::int64_t k);
/// P(X >= k) for X ~ Bin(n, p).
double binom_upper_tail(std::int64_t n, double p, std::int64_t k);
/// ln of the binomial pmf at k.
double log_binom_pmf(std::int64_t n, double p, std::int64_t k);

struct TailSpec {
  std::int64_t n = 1;
  double delta = 0.0;
  double c = 0.0;
};

/// C_bin(n, delta, c): binomial upper tail from index ceil(n(delta + c)).
double binom_tail_cbin(const TailSpec& spec);
/// Natural log of C_bin; stays finite where the value underflows.
double log_binom_tail_cbin(const TailSpec& spec);

enum class GammaBinMethod { automatic, exact, hoeffding };

/// Smallest c on the 1/n grid with C_bin(n, delta, c) <= eps^2 (exact mode),
/// or the Hoeffding bound sqrt(ln(1/eps^2) / 2n). Automatic picks Hoeffding
/// when eps^2 < 1e-15. Exact mode floors a real-valued n. delta = 0 gives 0
/// under every method.
double gamma_bin(double n, double delta, LogProb eps,
                 GammaBinMethod method = GammaBinMethod::automatic);

GammaBinMethod resolve_gamma_bin_method(LogProb eps, GammaBinMethod method);

double f_serf(double n_test, double n_key);
double gamma_serf(double n_test, double n_key, LogProb eps);
double serfling_bound(double n_test, double n_key, double gamma);

/// sqrt((n/2) ln(2/eps^2)).
double hoeffding_dev(double n, LogProb eps);

/// Regularized incomplete beta I_p(a, b), natural log.
double log_ibeta(double p, double a, double b);
double ibeta(double p, double a, double b);

/// p with I_p(a, b) = q.
double beta_quantile(double q, double a, double b);
/// p with ln I_p(a, b) = ln q; q may be far below double range.
double beta_quantile_lower(LogProb q, double a, double b);
/// p with I_p(a, b) = 1 - q, computed as 1 - BetaQ(q; b, a).
double beta_quantile_upper(LogProb q, double a, double b);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Two-sided Clopper-Pearson interval, eps/2 per tail.
Interval clopper_pearson(std::int64_t x, std::int64_t n, double eps);
Interval clopper_pearson(std::int64_t x, std::int64_t n, LogProb eps);

}  // namespace qkdfs
