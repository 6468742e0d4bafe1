#include "qkdfs/detector.hpp"

#include <algorithm>
#include <cmath>

#include "qkdfs/error.hpp"

namespace qkdfs {

namespace {

// 1 - sqrt(1 - x) without cancellation for small x.
double one_minus_sqrt_one_minus(double x) { return x / (1.0 + std::sqrt(1.0 - x)); }

double eta_ratio(const DetectorSpec& s) { return (1.0 - s.delta_eta) / (1.0 + s.delta_eta); }

DeltaMetrics clamp(DeltaMetrics m) {
  m.delta1 = std::clamp(m.delta1, 0.0, 2.0);
  m.delta2 = std::clamp(m.delta2, 0.0, 1.0);
  return m;
}

}  // namespace

void DetectorSpec::validate() const {
  if (!(eta_det > 0.0 && eta_det <= 1.0)) throw DomainError("detector: eta_det must lie in (0,1]");
  if (!(delta_eta >= 0.0)) throw DomainError("detector: delta_eta must be >= 0");
  if (!(dc_det >= 0.0 && dc_det < 1.0)) throw DomainError("detector: dc_det must lie in [0,1)");
  if (!(delta_dc >= 0.0)) throw DomainError("detector: delta_dc must be >= 0");
  if (eta_det * (1.0 + delta_eta) > 1.0) throw DomainError("detector: eta_det(1+delta_eta) exceeds 1");
  if (!(eta_det * (1.0 - delta_eta) > 0.0)) throw DomainError("detector: eta_det(1-delta_eta) must be > 0");
  if (!(dc_det * (1.0 + delta_dc) < 1.0)) throw DomainError("detector: dc_det(1+delta_dc) must be < 1");
}

DeltaMetrics delta_metrics_noswap(const DetectorSpec& spec) {
  spec.validate();
  if (spec.swap) throw DomainError("delta_metrics_noswap: spec has swap enabled");
  const double d_min = spec.dc_det * (1.0 - spec.delta_dc);
  const double d_max = spec.dc_det * (1.0 + spec.delta_dc);
  const double eta_r = eta_ratio(spec);

  const double a = d_min * (2.0 - d_min);  // 1 - (1 - d_min)^2
  const double b = d_max * (2.0 - d_max);
  const double dark_gap = b > 0.0 ? 1.0 - a / b : 0.0;
  const double dark_term = a > 0.0 ? dark_gap * d_max * (2.0 - d_min) / a : 0.0;

  const double loss_weight = (1.0 - d_min) * (1.0 - d_min) * (1.0 - eta_r);
  const double eta_term = 4.0 * std::fabs(one_minus_sqrt_one_minus(loss_weight));

  return clamp({std::max(dark_term, eta_term), std::max(dark_gap, loss_weight)});
}

DeltaMetrics delta_metrics_swap(const DetectorSpec& spec) {
  spec.validate();
  if (!spec.swap) throw DomainError("delta_metrics_swap: spec has swap disabled");
  const double d_m = spec.dc_det * (1.0 - spec.delta_dc);
  const double gap = 1.0 - eta_ratio(spec);
  const double w = (1.0 - d_m) * (1.0 - d_m) * gap * gap / 2.0;
  return clamp({4.0 * one_minus_sqrt_one_minus(w), w});
}

DeltaMetrics delta_metrics(const DetectorSpec& spec) {
  return spec.swap ? delta_metrics_swap(spec) : delta_metrics_noswap(spec);
}

DeltaMetrics delta_metrics_multimode(const std::vector<DetectorSpec>& specs) {
  if (specs.empty()) throw DomainError("delta_metrics_multimode: no modes given");
  DeltaMetrics out;
  for (const auto& s : specs) {
    if (s.swap != specs.front().swap) throw DomainError("delta_metrics_multimode: mixed swap flags");
    const DeltaMetrics m = delta_metrics(s);
    out.delta1 = std::max(out.delta1, m.delta1);
    out.delta2 = std::max(out.delta2, m.delta2);
  }
  return out;
}

double noclick_prob_fock(int n_photons, double eta, double dc) {
  if (n_photons < 0) throw DomainError("noclick_prob_fock: photon number must be >= 0");
  if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("noclick_prob_fock: eta must lie in [0,1]");
  if (!(dc >= 0.0 && dc <= 1.0)) throw DomainError("noclick_prob_fock: dc must lie in [0,1]");
  return (1.0 - dc) * std::pow(1.0 - eta, n_photons);
}

double noclick_prob_coherent(double mean_photons, double eta, double dc) {
  if (!(mean_photons >= 0.0)) throw DomainError("noclick_prob_coherent: mean photons must be >= 0");
  if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("noclick_prob_coherent: eta must lie in [0,1]");
  if (!(dc >= 0.0 && dc <= 1.0)) throw DomainError("noclick_prob_coherent: dc must lie in [0,1]");
  return (1.0 - dc) * std::exp(-eta * mean_photons);
}

}  // namespace qkdfs
