#include "qkdfs/stats.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "qkdfs/error.hpp"

namespace qkdfs {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLn2Pi = 1.837877066409345483560659472811235279722794947;

// Loader's Stirling-series remainder: ln n! - [(n+1/2) ln n - n + ln sqrt(2 pi)].
double stirlerr(double n) {
  constexpr double s0 = 1.0 / 12.0;
  constexpr double s1 = 1.0 / 360.0;
  constexpr double s2 = 1.0 / 1260.0;
  constexpr double s3 = 1.0 / 1680.0;
  constexpr double s4 = 1.0 / 1188.0;
  if (n <= 15.0) {
    const long double nl = n;
    return static_cast<double>(std::lgamma(nl + 1.0L) - (nl + 0.5L) * std::log(nl) + nl -
                               0.918938533204672741780329736405617639861L);
  }
  const double nn = n * n;
  if (n > 500) return (s0 - s1 / nn) / n;
  if (n > 80) return (s0 - (s1 - s2 / nn) / nn) / n;
  if (n > 35) return (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / n;
  return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / n;
}

// Deviance term x ln(x/np) + np - x, evaluated without cancellation near x = np.
double bd0(double x, double np) {
  if (std::fabs(x - np) < 0.1 * (x + np)) {
    double v = (x - np) / (x + np);
    double s = (x - np) * v;
    double ej = 2.0 * x * v;
    v *= v;
    for (int j = 1; j < 1000; ++j) {
      ej *= v;
      const double s1 = s + ej / (2 * j + 1);
      if (s1 == s) return s1;
      s = s1;
    }
    return s;
  }
  return x * std::log(x / np) + np - x;
}

void check_binom_args(std::int64_t n, double p) {
  if (n < 0) throw DomainError("binomial: n must be >= 0");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binomial: p must lie in [0,1]");
}

bool is_integral(double v) { return v == std::floor(v) && v < 9.0e15; }

// Lentz continued fraction for the incomplete beta function.
double betacf(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) return h;
  }
  std::ostringstream msg;
  msg << "incomplete beta continued fraction did not converge (a=" << a << ", b=" << b
      << ", x=" << x << ")";
  throw NumericError(msg.str());
}

double log_ibeta_cf(double p, double a, double b) {
  const double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  if (p < (a + 1.0) / (a + b + 2.0)) {
    const double front = a * std::log(p) + b * std::log1p(-p) - lbeta - std::log(a);
    return front + std::log(betacf(a, b, p));
  }
  const double front = b * std::log1p(-p) + a * std::log(p) - lbeta - std::log(b);
  const double comp = std::exp(front) * betacf(b, a, 1.0 - p);
  return std::log1p(-comp);
}

}  // namespace

double binary_entropy(double x) {
  if (!std::isfinite(x) || x < 0.0) throw DomainError("binary_entropy: x must be finite and >= 0");
  if (x > 0.5) return 1.0;
  if (x == 0.0) return 0.0;
  return (-x * std::log(x) - (1.0 - x) * std::log1p(-x)) / std::numbers::ln2;
}

std::int64_t snapped_ceil(double x) {
  const double r = std::round(x);
  if (std::fabs(x - r) <= 1e-13 * std::max(1.0, std::fabs(x))) return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::ceil(x));
}

std::int64_t snapped_floor(double x) {
  const double r = std::round(x);
  if (std::fabs(x - r) <= 1e-13 * std::max(1.0, std::fabs(x))) return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::floor(x));
}

double log_binom_pmf(std::int64_t n, double p, std::int64_t k) {
  check_binom_args(n, p);
  if (k < 0 || k > n) return kNegInf;
  const double q = 1.0 - p;
  if (p == 0.0) return k == 0 ? 0.0 : kNegInf;
  if (q == 0.0) return k == n ? 0.0 : kNegInf;
  const double nd = static_cast<double>(n);
  if (k == 0) return nd * std::log1p(-p);
  if (k == n) return nd * std::log(p);
  const double x = static_cast<double>(k);
  const double lc = stirlerr(nd) - stirlerr(x) - stirlerr(nd - x) - bd0(x, nd * p) -
                    bd0(nd - x, nd * q);
  const double lf = kLn2Pi + std::log(x) + std::log1p(-x / nd);
  return lc - 0.5 * lf;
}

double log_binom_upper_tail(std::int64_t n, double p, std::int64_t k) {
  check_binom_args(n, p);
  if (k <= 0) return 0.0;
  if (k > n) return kNegInf;
  if (p == 0.0) return kNegInf;
  if (p == 1.0) return 0.0;
  const double q = 1.0 - p;
  const double odds = p / q;
  const auto mode = static_cast<std::int64_t>(std::floor((static_cast<double>(n) + 1.0) * p));

  if (k > mode) {
    // Terms decrease from k upward.
    double sum = 1.0;
    double term = 1.0;
    for (std::int64_t i = k; i < n; ++i) {
      term *= odds * static_cast<double>(n - i) / static_cast<double>(i + 1);
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    return log_binom_pmf(n, p, k) + std::log(sum);
  }

  // P(X >= k) = 1 - P(X <= k-1); terms decrease from k-1 downward.
  const std::int64_t top = k - 1;
  const double log_top = log_binom_pmf(n, p, top);
  double sum = 1.0;
  double term = 1.0;
  for (std::int64_t i = top; i > 0; --i) {
    term *= static_cast<double>(i) / (odds * static_cast<double>(n - i + 1));
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  const double lower = std::exp(log_top + std::log(sum));
  if (lower >= 1.0) return kNegInf;
  return std::log1p(-lower);
}

double binom_upper_tail(std::int64_t n, double p, std::int64_t k) {
  const double v = std::exp(log_binom_upper_tail(n, p, k));
  return std::min(1.0, std::max(0.0, v));
}

double log_binom_tail_cbin(const TailSpec& spec) {
  if (spec.n < 1) throw DomainError("C_bin: n must be >= 1");
  if (!(spec.delta >= 0.0 && spec.delta <= 1.0)) throw DomainError("C_bin: delta must lie in [0,1]");
  if (!(spec.c >= 0.0) || !std::isfinite(spec.c)) throw DomainError("C_bin: c must be finite and >= 0");
  const std::int64_t k = snapped_ceil(static_cast<double>(spec.n) * (spec.delta + spec.c));
  return log_binom_upper_tail(spec.n, spec.delta, k);
}

double binom_tail_cbin(const TailSpec& spec) {
  return std::min(1.0, std::exp(log_binom_tail_cbin(spec)));
}

GammaBinMethod resolve_gamma_bin_method(LogProb eps, GammaBinMethod method) {
  if (method != GammaBinMethod::automatic) return method;
  // Below ~1e-15 the exact tail sits under double round-off of 1 - P(lower).
  return eps.squared().log2() < std::log2(1e-15) ? GammaBinMethod::hoeffding
                                                 : GammaBinMethod::exact;
}

double gamma_bin(double n, double delta, LogProb eps, GammaBinMethod method) {
  if (!(eps.log2() < 0.0) || eps.is_zero()) throw DomainError("gamma_bin: eps must lie in (0,1)");
  if (!(delta >= 0.0 && delta < 1.0)) throw DomainError("gamma_bin: delta must lie in [0,1)");
  if (!(n >= 1.0) || !std::isfinite(n)) throw DomainError("gamma_bin: n must be >= 1");
  // C_bin(n, 0, c) vanishes for every c > 0, so no method needs a margin here.
  if (delta == 0.0) return 0.0;
  method = resolve_gamma_bin_method(eps, method);
  if (method == GammaBinMethod::hoeffding) {
    return std::sqrt(-2.0 * eps.ln() / (2.0 * n));
  }
  const std::int64_t ni = snapped_floor(n);
  const double target = 2.0 * eps.ln();
  const std::int64_t k0 = snapped_ceil(static_cast<double>(ni) * delta);
  auto tail_ok = [&](std::int64_t j) { return log_binom_upper_tail(ni, delta, k0 + j) <= target; };
  if (tail_ok(0)) return 0.0;
  std::int64_t lo = 0;
  std::int64_t hi = ni - k0 + 1;
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (tail_ok(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return static_cast<double>(hi) / static_cast<double>(ni);
}

double f_serf(double n_test, double n_key) {
  if (!(n_test > 0.0) || !(n_key > 0.0)) throw DomainError("f_serf: counts must be positive");
  return n_key * n_test * n_test / ((n_key + n_test) * (n_test + 1.0));
}

double gamma_serf(double n_test, double n_key, LogProb eps) {
  return std::sqrt(-2.0 * eps.ln() / (2.0 * f_serf(n_test, n_key)));
}

double serfling_bound(double n_test, double n_key, double gamma) {
  const double v = std::exp(-2.0 * gamma * gamma * f_serf(n_test, n_key));
  return std::min(1.0, std::max(0.0, v));
}

double hoeffding_dev(double n, LogProb eps) {
  if (!(n >= 0.0)) throw DomainError("hoeffding_dev: n must be >= 0");
  if (n == 0.0) return 0.0;
  return std::sqrt(0.5 * n * (std::numbers::ln2 - 2.0 * eps.ln()));
}

double log_ibeta(double p, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("ibeta: a and b must be positive");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("ibeta: p must lie in [0,1]");
  if (p == 0.0) return kNegInf;
  if (p == 1.0) return 0.0;
  if (is_integral(a) && is_integral(b)) {
    const auto ai = static_cast<std::int64_t>(a);
    const auto bi = static_cast<std::int64_t>(b);
    return log_binom_upper_tail(ai + bi - 1, p, ai);
  }
  return log_ibeta_cf(p, a, b);
}

double ibeta(double p, double a, double b) { return std::exp(log_ibeta(p, a, b)); }

double beta_quantile_lower(LogProb q, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("beta_quantile: a and b must be positive");
  if (q.is_zero()) return 0.0;
  if (q.log2() >= 0.0) return 1.0;
  const double target = q.ln();
  double lo = 0.0;
  double hi = 1.0;
  constexpr int kMaxIter = 1200;
  for (int it = 0; it < kMaxIter; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= 1e-15 * hi || mid == lo || mid == hi) return mid;
    const double f = log_ibeta(mid, a, b);
    if (std::isnan(f)) {
      std::ostringstream msg;
      msg << "beta_quantile: NaN at p=" << mid << " (a=" << a << ", b=" << b << ")";
      throw NumericError(msg.str());
    }
    if (f < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  std::ostringstream msg;
  msg << "beta_quantile: bisection cap reached (a=" << a << ", b=" << b << ", log2 q=" << q.log2()
      << ", bracket=[" << lo << ", " << hi << "])";
  throw NumericError(msg.str());
}

double beta_quantile_upper(LogProb q, double a, double b) {
  return 1.0 - beta_quantile_lower(q, b, a);
}

double beta_quantile(double q, double a, double b) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("beta_quantile: q must lie in (0,1)");
  if (q > 0.5) return beta_quantile_upper(LogProb::from_prob(1.0 - q), a, b);
  return beta_quantile_lower(LogProb::from_prob(q), a, b);
}

Interval clopper_pearson(std::int64_t x, std::int64_t n, LogProb eps) {
  if (n < 1 || x < 0 || x > n) throw DomainError("clopper_pearson: need 0 <= x <= n, n >= 1");
  if (eps.is_zero() || !(eps.log2() < 0.0)) throw DomainError("clopper_pearson: eps must lie in (0,1)");
  const LogProb tail = eps / LogProb::from_prob(2.0);
  const auto xd = static_cast<double>(x);
  const auto nd = static_cast<double>(n);
  Interval out;
  out.lo = x == 0 ? 0.0 : beta_quantile_lower(tail, xd, nd - xd + 1.0);
  out.hi = x == n ? 1.0 : beta_quantile_upper(tail, xd + 1.0, nd - xd);
  return out;
}

Interval clopper_pearson(std::int64_t x, std::int64_t n, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("clopper_pearson: eps must lie in (0,1)");
  return clopper_pearson(x, n, LogProb::from_prob(eps));
}

}  // namespace qkdfs
