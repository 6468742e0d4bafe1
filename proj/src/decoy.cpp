#include "qkdfs/decoy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qkdfs/error.hpp"
#include "qkdfs/stats.hpp"

namespace qkdfs {

void IntensitySpec::validate() const {
  for (int k = 0; k < 3; ++k) {
    if (!std::isfinite(mu[k]) || mu[k] < 0.0) throw DomainError("intensity: mu must be finite and >= 0");
    if (!(p_mu[k] >= 0.0 && p_mu[k] <= 1.0)) throw DomainError("intensity: p_mu must lie in [0,1]");
  }
  if (!(mu[1] > mu[2])) throw DomainError("intensity: need mu2 > mu3");
  if (!(mu[0] > mu[1] + mu[2])) throw DomainError("intensity: need mu1 > mu2 + mu3");
  const double sum = p_mu[0] + p_mu[1] + p_mu[2];
  if (std::fabs(sum - 1.0) > 1e-12) throw DomainError("intensity: p_mu must sum to 1");
}

std::string_view outcome_name(Outcome o) {
  switch (o) {
    case Outcome::x_err: return "X_err";
    case Outcome::x_con: return "X_con";
    case Outcome::k_con: return "K_con";
  }
  return "?";
}

double ObservedDecoyCounts::total(Outcome o) const {
  const auto& row = n[static_cast<int>(o)];
  return row[0] + row[1] + row[2];
}

bool ObservedDecoyCounts::all_zero() const {
  for (const auto& row : n)
    for (double v : row)
      if (v != 0.0) return false;
  return true;
}

void ObservedDecoyCounts::validate() const {
  for (const auto& row : n)
    for (double v : row)
      if (!std::isfinite(v) || v < 0.0) throw DomainError("decoy counts must be finite and >= 0");
  for (int k = 0; k < 3; ++k) {
    if (at(Outcome::x_err, k) > at(Outcome::x_con, k)) {
      std::ostringstream msg;
      msg << "decoy counts: X_err exceeds X_con at intensity " << k + 1;
      throw DomainError(msg.str());
    }
  }
}

AdjustedCounts adjusted_counts(const ObservedDecoyCounts& counts, const IntensitySpec& spec,
                               LogProb eps_d, Outcome outcome, Deviation deviation) {
  spec.validate();
  counts.validate();
  const double dev =
      deviation == Deviation::apply ? hoeffding_dev(counts.total(outcome), eps_d) : 0.0;
  AdjustedCounts adj;
  for (int k = 0; k < 3; ++k) {
    if (spec.p_mu[k] == 0.0) throw DomainError("adjusted_counts: p_mu must be > 0");
    const double scale = std::exp(spec.mu[k]) / spec.p_mu[k];
    const double obs = counts.at(outcome, k);
    adj.minus[k] = std::max(0.0, scale * (obs - dev));
    adj.plus[k] = scale * (obs + dev);
  }
  return adj;
}

double tau_m(const IntensitySpec& spec, int m) {
  if (m < 0) throw DomainError("tau_m: m must be >= 0");
  double sum = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double mu = spec.mu[k];
    double log_pois;
    if (mu == 0.0) {
      if (m != 0) continue;
      log_pois = 0.0;
    } else {
      log_pois = -mu + m * std::log(mu) - std::lgamma(m + 1.0);
    }
    sum += spec.p_mu[k] * std::exp(log_pois);
  }
  return sum;
}

double bound_zero_min(const AdjustedCounts& adj, const IntensitySpec& spec, double tau0) {
  const double mu2 = spec.mu[1];
  const double mu3 = spec.mu[2];
  if (!(mu2 > mu3)) throw DomainError("bound_zero_min: need mu2 > mu3");
  const double v = tau0 * (mu2 * adj.minus[2] - mu3 * adj.plus[1]) / (mu2 - mu3);
  return std::max(0.0, v);
}

double bound_one_min(const AdjustedCounts& adj, const IntensitySpec& spec, double tau0,
                     double tau1, double b0_min) {
  const double mu1 = spec.mu[0];
  const double mu2 = spec.mu[1];
  const double mu3 = spec.mu[2];
  const double denom = mu1 * (mu2 - mu3) - mu2 * mu2 + mu3 * mu3;
  if (!(denom > 0.0)) {
    std::ostringstream msg;
    msg << "bound_one_min: mu1(mu2-mu3) - mu2^2 + mu3^2 = " << denom
        << " <= 0; requires mu1 > mu2 + mu3";
    throw DomainError(msg.str());
  }
  if (!(tau0 > 0.0)) throw DomainError("bound_one_min: tau0 must be > 0");
  const double ratio = (mu2 * mu2 - mu3 * mu3) / (mu1 * mu1);
  const double v = (mu1 * tau1 / denom) *
                   (adj.minus[1] - adj.plus[2] - ratio * (adj.plus[0] - b0_min / tau0));
  return std::max(0.0, v);
}

double bound_one_max(const AdjustedCounts& adj, const IntensitySpec& spec, double tau1,
                     double n_outcome) {
  const double mu2 = spec.mu[1];
  const double mu3 = spec.mu[2];
  if (!(mu2 > mu3)) throw DomainError("bound_one_max: need mu2 > mu3");
  const double v = tau1 * (adj.plus[1] - adj.minus[2]) / (mu2 - mu3);
  return std::clamp(v, 0.0, std::max(0.0, n_outcome));
}

PhotonBounds photon_bounds(const ObservedDecoyCounts& counts, const IntensitySpec& spec,
                           LogProb eps_d, Outcome outcome, Deviation deviation) {
  const AdjustedCounts adj = adjusted_counts(counts, spec, eps_d, outcome, deviation);
  const double t0 = tau_m(spec, 0);
  const double t1 = tau_m(spec, 1);
  PhotonBounds b;
  b.b0_min = bound_zero_min(adj, spec, t0);
  b.b1_min = bound_one_min(adj, spec, t0, t1, b.b0_min);
  b.b1_max = bound_one_max(adj, spec, t1, counts.total(outcome));
  b.b1_min = std::min(b.b1_min, b.b1_max);
  return b;
}

}  // namespace qkdfs
