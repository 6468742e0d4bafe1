#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "qkdfs/log_prob.hpp"

namespace qkdfs {

/// log2 C(n + x - 1, n), the log-dimension of the n-fold symmetric subspace
/// of a dimension-x space.
double log2_sym_dim(std::int64_t n, std::int64_t x);

/// dA^2 dB^2
std::int64_t x_generic(std::int64_t d_a, std::int64_t d_b);
/// sum over (dA_i, dB_j) blocks of dA_i^2 dB_j^2
std::int64_t x_block_diagonal(const std::vector<std::pair<std::int64_t, std::int64_t>>& blocks);
/// N_int^2 (n_decoy + 2) dAbar^2 sum_j dB_j^2 for tagged decoy sources.
std::int64_t x_decoy_tagged(std::int64_t n_intensities, std::int64_t n_decoy, std::int64_t d_abar,
                            const std::vector<std::int64_t>& bob_blocks);

struct PSParams {
  std::int64_t n = 0;
  std::int64_t x = 1;
  LogProb eps_tilde;
  double log2_g = 0.0;

  static PSParams make(std::int64_t n, std::int64_t x, LogProb eps_tilde);
};

/// max(0, floor(l - 2 log g - 2 log(1/(2 eps_tilde))))
std::int64_t lift_key_length(std::int64_t l, const PSParams& params);
/// The bit penalty subtracted by lift_key_length.
double lift_penalty_bits(const PSParams& params);

/// g (sqrt(8 eps_iid) + eps_tilde); values above 1 mean trivial security.
LogProb lift_epsilon(LogProb eps_iid, const PSParams& params);

struct IidEpsilonResult {
  bool feasible = false;
  LogProb eps_iid = LogProb::zero();
  double log2_g_eps_tilde = 0.0;  // the offset the target must exceed
};

/// (eps_target - g eps_tilde)^2 / (8 g^2); infeasible when eps_target <= g eps_tilde.
IidEpsilonResult required_iid_epsilon(LogProb eps_target, const PSParams& params);

}  // namespace qkdfs
