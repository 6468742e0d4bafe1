#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include "qkdfs/error.hpp"

namespace qkdfs {

/// A probability carried as its base-2 logarithm.
///
/// Security parameters routinely sit at 1e-10, get squared, and get multiplied
/// by symmetric-subspace dimensions of 2^10000. Keeping the exponent avoids the
/// underflow/overflow that plain doubles would hit.
class LogProb {
 public:
  constexpr LogProb() = default;

  static LogProb from_prob(double p) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw DomainError("LogProb::from_prob: probability must be finite and >= 0");
    }
    return LogProb(p == 0.0 ? -std::numeric_limits<double>::infinity() : std::log2(p));
  }
  static constexpr LogProb from_log2(double log2_value) { return LogProb(log2_value); }
  static constexpr LogProb zero() { return LogProb(-std::numeric_limits<double>::infinity()); }
  static constexpr LogProb one() { return LogProb(0.0); }

  constexpr double log2() const { return log2_; }
  double ln() const { return log2_ * std::numbers::ln2; }
  /// Plain value; underflows to 0 below ~2^-1074 (see underflows()).
  double value() const { return std::exp2(log2_); }
  bool underflows() const { return log2_ < -1074.0; }
  bool is_zero() const { return std::isinf(log2_) && log2_ < 0; }

  /// log2(1/p), the bit cost of a security parameter.
  constexpr double bits() const { return -log2_; }

  LogProb squared() const { return LogProb(2.0 * log2_); }
  LogProb sqrt() const { return LogProb(0.5 * log2_); }

  friend LogProb operator*(LogProb a, LogProb b) { return LogProb(a.log2_ + b.log2_); }
  friend LogProb operator/(LogProb a, LogProb b) { return LogProb(a.log2_ - b.log2_); }
  friend LogProb operator*(double k, LogProb a) { return LogProb(std::log2(k) + a.log2_); }

  /// Sum via log-sum-exp.
  friend LogProb operator+(LogProb a, LogProb b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    const double hi = a.log2_ > b.log2_ ? a.log2_ : b.log2_;
    const double lo = a.log2_ > b.log2_ ? b.log2_ : a.log2_;
    return LogProb(hi + std::log1p(std::exp2(lo - hi)) / std::numbers::ln2);
  }

  /// a - b; throws DomainError when the difference would be negative.
  friend LogProb operator-(LogProb a, LogProb b) {
    if (b.is_zero()) return a;
    if (a.log2_ == b.log2_) return zero();
    if (!(a.log2_ > b.log2_)) {
      throw DomainError("LogProb subtraction would be negative");
    }
    return LogProb(a.log2_ + std::log1p(-std::exp2(b.log2_ - a.log2_)) / std::numbers::ln2);
  }

  friend constexpr bool operator<(LogProb a, LogProb b) { return a.log2_ < b.log2_; }
  friend constexpr bool operator>(LogProb a, LogProb b) { return a.log2_ > b.log2_; }
  friend constexpr bool operator<=(LogProb a, LogProb b) { return a.log2_ <= b.log2_; }
  friend constexpr bool operator>=(LogProb a, LogProb b) { return a.log2_ >= b.log2_; }
  friend constexpr bool operator==(LogProb a, LogProb b) { return a.log2_ == b.log2_; }

 private:
  constexpr explicit LogProb(double v) : log2_(v) {}

  double log2_ = 0.0;
};

}  // namespace qkdfs
