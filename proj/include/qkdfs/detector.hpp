#pragma once

#include <vector>

namespace qkdfs {

/// Nominal detector characterization with relative tolerances.
struct DetectorSpec {
  double eta_det = 0.7;
  double delta_eta = 0.0;
  double dc_det = 1e-6;
  double delta_dc = 0.0;
  bool swap = false;

  /// Throws DomainError when the tolerance box leaves the physical range.
  void validate() const;
};

struct DeltaMetrics {
  double delta1 = 0.0;
  double delta2 = 0.0;
};

DeltaMetrics delta_metrics_noswap(const DetectorSpec& spec);
DeltaMetrics delta_metrics_swap(const DetectorSpec& spec);
/// Dispatches on spec.swap.
DeltaMetrics delta_metrics(const DetectorSpec& spec);
/// Component-wise maximum over modes; all modes must share the swap flag.
DeltaMetrics delta_metrics_multimode(const std::vector<DetectorSpec>& specs);

/// (1 - dc)(1 - eta)^n
double noclick_prob_fock(int n_photons, double eta, double dc);
/// (1 - dc) exp(-eta * mu)
double noclick_prob_coherent(double mean_photons, double eta, double dc);

}  // namespace qkdfs
