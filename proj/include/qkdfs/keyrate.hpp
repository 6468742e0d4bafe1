#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qkdfs/decoy.hpp"
#include "qkdfs/detector.hpp"
#include "qkdfs/log_prob.hpp"
#include "qkdfs/stats.hpp"

namespace qkdfs {

struct EpsilonItem {
  std::string name;
  LogProb value;
};

/// Security-parameter allocation.
///
/// Qubit mode: eps_AT^2 = eps_a^2 + eps_b^2 + eps_c^2.
/// Decoy mode: eps_AT^2 = 9 eps_d^2 + eps_s^2 with eps_s^2 = eps_a^2 + eps_b^2 + eps_c^2.
struct EpsilonBudget {
  enum class Mode { qubit, decoy };

  Mode mode = Mode::decoy;
  LogProb eps_pa;
  LogProb eps_ev;
  LogProb eps_at;
  LogProb eps_a;
  LogProb eps_b;
  LogProb eps_c;
  LogProb eps_d;  // decoy mode only
  LogProb eps_s;  // decoy mode only
  GammaBinMethod gamma_bin_method = GammaBinMethod::automatic;

  /// eps_AT is derived from the sampling splits.
  static EpsilonBudget qubit(LogProb pa, LogProb ev, LogProb a, LogProb b, LogProb c);
  /// eps_s and eps_AT are derived from the splits.
  static EpsilonBudget decoy(LogProb pa, LogProb ev, LogProb a, LogProb b, LogProb c, LogProb d);
  /// eps_EV = 1e-10, eps_PA = eps_EV/2, eps_AT = eps_EV/4, eps_a..d = eps_EV/(4 sqrt 12).
  static EpsilonBudget default_decoy();
  /// Same top level with eps_a = eps_b = eps_c = eps_AT/sqrt 3.
  static EpsilonBudget default_qubit();

  /// Checks positivity and the quadratic identities to 1e-12 (relative, log domain).
  void validate() const;

  /// 2 eps_AT + eps_PA + eps_EV
  LogProb eps_secure() const;
  std::vector<EpsilonItem> items() const;
};

struct PhaseErrorTerms {
  double e_obs = 0.0;
  double gamma_serf = 0.0;
  double delta1 = 0.0;
  double gamma_bin1 = 0.0;
  double delta2 = 0.0;
  double gamma_bin2 = 0.0;
  double bound = 1.0;
  bool saturated = false;
};

/// (eX + g_serf + d1 + g_bin(nK,d1)) / (1 - d2 - g_bin(nK,d2)); 1 when the
/// denominator is non-positive or either count is below 1.
double phase_error_bound(double e_x, double n_x, double n_k, const DeltaMetrics& deltas,
                         const EpsilonBudget& budget);
PhaseErrorTerms phase_error_terms(double e_x, double n_x, double n_k, const DeltaMetrics& deltas,
                                  const EpsilonBudget& budget);
/// eX + g_serf, the matched-detector form.
double phase_error_bound_perfect(double e_x, double n_x, double n_k, const EpsilonBudget& budget);

struct Penalty {
  std::string name;
  double bits = 0.0;
};

struct KeyLengthReport {
  std::int64_t key_length = 0;
  double phase_error_bound = 1.0;
  PhaseErrorTerms phase_terms;
  double e1 = 0.0;  // decoy only: single-photon error-rate estimate
  bool has_photon_bounds = false;
  std::array<PhotonBounds, 3> photon_bounds{};  // indexed by Outcome
  double n_key = 0.0;                           // nK, or B1min(K_con) in decoy mode
  double leading_bits = 0.0;                    // n_key (1 - h(bound))
  double lambda_ec = 0.0;
  std::vector<Penalty> penalties;
  std::vector<EpsilonItem> epsilon_items;
  LogProb eps_secure;
  bool aborted = false;
  std::string reason;

  const PhotonBounds& bounds(Outcome o) const { return photon_bounds[static_cast<int>(o)]; }
};

/// max(0, floor(nK (1 - h(B)) - lambda_EC - 2 log(1/eps_PA) - ceil(log(1/eps_EV)) + 2))
KeyLengthReport keylen_qubit_bb84(double n_k, double phase_bound, double lambda_ec,
                                  const EpsilonBudget& budget);

/// Full decoy pipeline; the final length carries 2 log(1/(2 eps_PA)) and no +2.
KeyLengthReport keylen_decoy_bb84(const ObservedDecoyCounts& counts, const IntensitySpec& spec,
                                  const DeltaMetrics& deltas, double lambda_ec,
                                  const EpsilonBudget& budget);

/// max(0, floor(b_stat - lambda_EC - theta)),
/// theta = ceil(log(1/eps_EV)) + alpha/(alpha-1) log(1/eps_PA) - 2, alpha in (1,2).
std::int64_t keylen_variable_generic(double b_stat, double lambda_ec, const EpsilonBudget& budget,
                                     double alpha);

/// 1 + log(1/eps_PA) / (sqrt(n) log(2 dim + 1)); not asserted optimal.
double optimal_alpha(LogProb eps_pa, double n, double dim);

/// f_EC nK h(eZ), f_EC >= 1.
double lambda_ec_default(double n_k, double e_z, double f_ec);

}  // namespace qkdfs
