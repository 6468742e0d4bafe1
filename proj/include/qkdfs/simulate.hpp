#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qkdfs/acceptance.hpp"
#include "qkdfs/decoy.hpp"
#include "qkdfs/detector.hpp"
#include "qkdfs/keyrate.hpp"
#include "qkdfs/parallel.hpp"
#include "qkdfs/rng.hpp"

namespace qkdfs {

struct ChannelModel {
  double loss_db = 0.0;
  double misalignment_deg = 0.0;
  double depolarization = 0.0;  // qubit source only; contributes p/2 to the error probability
  DetectorSpec detector;

  double transmittance() const;
  void validate() const;
};

enum class SourceKind { qubit, decoy };

struct ProtocolParams {
  SourceKind source = SourceKind::decoy;
  double n = 1e12;
  double gamma_test = 0.1;  // qubit source: probability of a test round
  double p_z_alice = 0.5;
  double p_z_bob = 0.5;
  IntensitySpec intensities;  // decoy source only
  EpsilonBudget budget = EpsilonBudget::default_decoy();
  double f_ec = 1.16;

  void validate() const;
};

/// Symbol layout.
///
/// Qubit (24): {test, gen} x Alice basis {Z, X} x Bob basis {Z, X} x {none, ok, err},
/// named like "test_ZX_ok".
/// Decoy (36): Alice basis {Z, X} x intensity {1,2,3} x Bob basis {Z, X} x {none, ok, err},
/// named like "X_mu2_X_err". X-basis rounds are test rounds.
/// Double clicks are assigned to ok or err with probability 1/2 each.
enum class Click { none = 0, ok = 1, err = 2 };

std::size_t qubit_symbol(bool test, int alice_basis, int bob_basis, Click c);
std::size_t decoy_symbol(int alice_basis, int intensity, int bob_basis, Click c);

struct OutcomeDistribution {
  SourceKind source = SourceKind::qubit;
  std::vector<std::string> symbols;
  std::vector<double> probs;
};

/// Single photon through a lossy channel into threshold detectors.
OutcomeDistribution honest_probs_qubit(const ChannelModel& channel, const ProtocolParams& params);
/// Phase-randomized coherent states; each arm sees a Poisson mean of
/// mu * transmittance * cos^2 or sin^2 of the relative angle.
OutcomeDistribution honest_probs_decoy(const ChannelModel& channel, const ProtocolParams& params);
OutcomeDistribution honest_probs(const ChannelModel& channel, const ProtocolParams& params);

/// One multinomial draw of n rounds, by sequential binomials.
FrequencyVector sample_fobs(const OutcomeDistribution& dist, std::int64_t n, Rng& rng);
FrequencyVector sample_fobs(const OutcomeDistribution& dist, std::int64_t n, std::uint64_t seed);

/// Aggregates the estimator consumes. Counts are real so that expectations and
/// worst cases share the pipeline with sampled data.
struct QubitStats {
  double n_x_con = 0.0;  // test XX conclusive
  double n_x_err = 0.0;  // test XX errors
  double n_k = 0.0;      // gen ZZ conclusive
  double e_z = 0.5;      // test ZZ error rate, for error correction
};

struct DecoyStats {
  ObservedDecoyCounts counts;
  double e_z = 0.5;  // ZZ error rate over all intensities
};

QubitStats qubit_stats(const std::vector<double>& counts);
DecoyStats decoy_stats(const std::vector<double>& counts);
/// Lower ends for conclusive counts, upper ends for error counts.
QubitStats qubit_stats_worst(const ConstraintIntervals& box);
DecoyStats decoy_stats_worst(const ConstraintIntervals& box);

std::vector<double> expected_counts(const OutcomeDistribution& dist, double n);
std::vector<double> as_counts(const FrequencyVector& f);

/// f_EC nK h(eZ)
double lambda_ec_of(const QubitStats& s, double f_ec);
double lambda_ec_of(const DecoyStats& s, double f_ec);

KeyLengthReport key_length(const QubitStats& s, const DeltaMetrics& deltas, double lambda_ec,
                           const EpsilonBudget& budget);
KeyLengthReport key_length(const DecoyStats& s, const IntensitySpec& spec, const DeltaMetrics& deltas,
                           double lambda_ec, const EpsilonBudget& budget);

/// Key length for the expected observations of the honest channel.
KeyLengthReport honest_key_length(const ChannelModel& channel, const ProtocolParams& params);

struct RateMode {
  enum class Kind { fixed, variable };
  Kind kind = Kind::variable;
  double t = 0.0;  // fixed mode: uniform acceptance tolerance

  static RateMode fixed(double t) { return {Kind::fixed, t}; }
  static RateMode variable() { return {Kind::variable, 0.0}; }
};

struct ExpectedRate {
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<double> rates;
  double accept_fraction = 0.0;  // fixed: acceptance frequency; variable: fraction with l > 0
  std::int64_t l_fixed = 0;      // fixed mode only
};

/// Fixed: l_fixed from the feasible-set worst case, paid out on acceptance.
/// Variable: l(F_obs) per trial. Trial k samples with derive_seed(seed, k).
ExpectedRate expected_key_rate(const RateMode& mode, const ChannelModel& channel, const ProtocolParams& params,
                               int trials, std::uint64_t seed, Execution exec = Execution::openmp);

}  // namespace qkdfs
