#pragma once

#include <array>
#include <string_view>

#include "qkdfs/log_prob.hpp"

namespace qkdfs {

/// Three-intensity source: mu[0] > mu[1] + mu[2], mu[1] > mu[2] >= 0.
struct IntensitySpec {
  std::array<double, 3> mu{1.0, 0.1, 0.01};
  std::array<double, 3> p_mu{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

  void validate() const;
};

enum class Outcome { x_err = 0, x_con = 1, k_con = 2 };

std::string_view outcome_name(Outcome o);

/// Event counts per outcome and intensity. Real-valued so that expected
/// counts can be fed through the same pipeline as sampled ones.
struct ObservedDecoyCounts {
  std::array<std::array<double, 3>, 3> n{};

  double& at(Outcome o, int k) { return n[static_cast<int>(o)][k]; }
  double at(Outcome o, int k) const { return n[static_cast<int>(o)][k]; }
  double total(Outcome o) const;
  bool all_zero() const;
  void validate() const;
};

struct AdjustedCounts {
  std::array<double, 3> minus{};
  std::array<double, 3> plus{};
};

struct PhotonBounds {
  double b0_min = 0.0;
  double b1_min = 0.0;
  double b1_max = 0.0;
};

/// Disabling the deviation term is for oracle tests only.
enum class Deviation { apply, disabled_for_testing };

AdjustedCounts adjusted_counts(const ObservedDecoyCounts& counts, const IntensitySpec& spec,
                               LogProb eps_d, Outcome outcome,
                               Deviation deviation = Deviation::apply);

/// Probability that the source emits m photons.
double tau_m(const IntensitySpec& spec, int m);

double bound_zero_min(const AdjustedCounts& adj, const IntensitySpec& spec, double tau0);
double bound_one_min(const AdjustedCounts& adj, const IntensitySpec& spec, double tau0,
                     double tau1, double b0_min);
double bound_one_max(const AdjustedCounts& adj, const IntensitySpec& spec, double tau1,
                     double n_outcome);

/// All three bounds for one outcome.
PhotonBounds photon_bounds(const ObservedDecoyCounts& counts, const IntensitySpec& spec,
                           LogProb eps_d, Outcome outcome,
                           Deviation deviation = Deviation::apply);

}  // namespace qkdfs
