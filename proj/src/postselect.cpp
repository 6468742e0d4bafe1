#include "qkdfs/postselect.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "qkdfs/error.hpp"

namespace qkdfs {

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) throw DomainError("dimension parameter overflows int64");
  return out;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_add_overflow(a, b, &out)) throw DomainError("dimension parameter overflows int64");
  return out;
}

}  // namespace

double log2_sym_dim(std::int64_t n, std::int64_t x) {
  if (n < 0) throw DomainError("log2_sym_dim: n must be >= 0");
  if (x < 1) throw DomainError("log2_sym_dim: x must be >= 1");
  const double big = static_cast<double>(n);
  const double small = static_cast<double>(x - 1);
  const double k = std::min(big, small);
  const double rest = std::max(big, small);
  if (k == 0.0) return 0.0;
  if (k <= 1e6) {
    // C(rest + k, k) = prod_{i=1..k} (1 + rest / i)
    double acc = 0.0;
    for (std::int64_t i = 1; i <= static_cast<std::int64_t>(k); ++i) {
      acc += std::log1p(rest / static_cast<double>(i));
    }
    return acc / std::numbers::ln2;
  }
  const double total = big + small;
  return (std::lgamma(total + 1.0) - std::lgamma(big + 1.0) - std::lgamma(small + 1.0)) /
         std::numbers::ln2;
}

std::int64_t x_generic(std::int64_t d_a, std::int64_t d_b) {
  if (d_a < 1 || d_b < 1) throw DomainError("x_generic: dimensions must be >= 1");
  return checked_mul(checked_mul(d_a, d_a), checked_mul(d_b, d_b));
}

std::int64_t x_block_diagonal(const std::vector<std::pair<std::int64_t, std::int64_t>>& blocks) {
  if (blocks.empty()) throw DomainError("x_block_diagonal: no blocks given");
  std::int64_t sum = 0;
  for (const auto& [d_a, d_b] : blocks) sum = checked_add(sum, x_generic(d_a, d_b));
  return sum;
}

std::int64_t x_decoy_tagged(std::int64_t n_intensities, std::int64_t n_decoy, std::int64_t d_abar,
                            const std::vector<std::int64_t>& bob_blocks) {
  if (n_intensities < 1 || n_decoy < 0 || d_abar < 1) throw DomainError("x_decoy_tagged: invalid dimensions");
  if (bob_blocks.empty()) throw DomainError("x_decoy_tagged: no Bob blocks given");
  std::int64_t bob = 0;
  for (auto b : bob_blocks) {
    if (b < 1) throw DomainError("x_decoy_tagged: block dimensions must be >= 1");
    bob = checked_add(bob, checked_mul(b, b));
  }
  std::int64_t x = checked_mul(n_intensities, n_intensities);
  x = checked_mul(x, n_decoy + 2);
  x = checked_mul(x, checked_mul(d_abar, d_abar));
  return checked_mul(x, bob);
}

PSParams PSParams::make(std::int64_t n, std::int64_t x, LogProb eps_tilde) {
  PSParams p;
  p.n = n;
  p.x = x;
  p.eps_tilde = eps_tilde;
  p.log2_g = log2_sym_dim(n, x);
  return p;
}

double lift_penalty_bits(const PSParams& params) {
  return 2.0 * params.log2_g + 2.0 * (params.eps_tilde.bits() - 1.0);
}

std::int64_t lift_key_length(std::int64_t l, const PSParams& params) {
  const double v = static_cast<double>(l) - lift_penalty_bits(params);
  if (!(v >= 1.0)) return 0;
  return static_cast<std::int64_t>(std::floor(v));
}

LogProb lift_epsilon(LogProb eps_iid, const PSParams& params) {
  const LogProb g = LogProb::from_log2(params.log2_g);
  return g * ((LogProb::from_prob(8.0) * eps_iid).sqrt() + params.eps_tilde);
}

IidEpsilonResult required_iid_epsilon(LogProb eps_target, const PSParams& params) {
  IidEpsilonResult r;
  const LogProb g_eps = LogProb::from_log2(params.log2_g) * params.eps_tilde;
  r.log2_g_eps_tilde = g_eps.log2();
  if (!(eps_target > g_eps)) return r;
  const LogProb gap = eps_target - g_eps;
  r.feasible = true;
  r.eps_iid = LogProb::from_log2(2.0 * gap.log2() - 3.0 - 2.0 * params.log2_g);
  return r;
}

}  // namespace qkdfs
