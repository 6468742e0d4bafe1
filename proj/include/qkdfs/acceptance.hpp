#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "qkdfs/log_prob.hpp"

namespace qkdfs {

/// Observed announcement counts.
struct FrequencyVector {
  std::vector<std::string> symbols;
  std::vector<std::int64_t> counts;

  std::int64_t n() const;
  double frequency(std::size_t i) const;
  /// Throws on negative counts, duplicate symbols or size mismatch.
  void validate() const;
};

/// Reference frequencies with per-symbol tolerances; an infinite tolerance
/// marks a symbol that the acceptance test ignores.
struct AcceptanceSpec {
  static constexpr double kUntested = std::numeric_limits<double>::infinity();

  std::vector<std::string> symbols;
  std::vector<double> fbar;
  std::vector<double> t;

  void validate() const;
  bool tested(std::size_t i) const { return t[i] != kUntested; }
  std::size_t n_tested() const;
};

struct SymbolInterval {
  std::string symbol;
  double lo = 0.0;
  double hi = 1.0;
};

struct ConstraintIntervals {
  std::string construction;  // "feasible" or "confidence"
  std::int64_t n = 0;
  LogProb eps;
  std::vector<SymbolInterval> intervals;
  bool clamped = false;

  const SymbolInterval& find(const std::string& symbol) const;
};

/// True iff |F_obs,i - fbar_i| <= t_i for every tested symbol.
bool acceptance_test(const FrequencyVector& fobs, const AcceptanceSpec& spec);

/// Set of frequency vectors that pass with probability above eps_AT.
/// Lower counts are floored and upper counts ceiled; arguments pushed outside
/// [0, n] are clamped and flagged.
ConstraintIntervals feasible_intervals(const AcceptanceSpec& spec, std::int64_t n, LogProb eps_at);

/// Clopper-Pearson box around F_obs with eps_AT / (2 |C_test|) per tail.
ConstraintIntervals confidence_intervals(const FrequencyVector& fobs, LogProb eps_at,
                                         std::size_t n_test_symbols);

nlohmann::json to_json(const ConstraintIntervals& c);

}  // namespace qkdfs
