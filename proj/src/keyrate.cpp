#include "qkdfs/keyrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qkdfs/error.hpp"

namespace qkdfs {

namespace {

LogProb sum_of_squares(std::initializer_list<LogProb> xs) {
  LogProb acc = LogProb::zero();
  for (LogProb x : xs) acc = acc + x.squared();
  return acc;
}

void check_identity(LogProb lhs, LogProb rhs, const char* what) {
  if (std::fabs(std::expm1((lhs.log2() - rhs.log2()) * std::numbers::ln2)) > 1e-12) {
    throw DomainError(std::string("epsilon budget: identity violated: ") + what);
  }
}

void check_positive(LogProb e, const char* name) {
  if (e.is_zero() || !(e.log2() < 0.0) || std::isnan(e.log2())) {
    throw DomainError(std::string("epsilon budget: ") + name + " must lie in (0,1)");
  }
}

std::int64_t floor_nonneg(double bits) {
  if (!(bits >= 1.0)) return 0;
  if (bits >= 9.0e18) throw NumericError("key length exceeds int64 range");
  return static_cast<std::int64_t>(std::floor(bits));
}

const char* zero_key_reason(const PhaseErrorTerms& t) {
  if (t.saturated) return "phase error bound saturated";
  if (t.bound >= 0.5) return "phase error bound >= 1/2";
  return "penalties exceed leading term";
}

}  // namespace

EpsilonBudget EpsilonBudget::qubit(LogProb pa, LogProb ev, LogProb a, LogProb b, LogProb c) {
  EpsilonBudget e;
  e.mode = Mode::qubit;
  e.eps_pa = pa;
  e.eps_ev = ev;
  e.eps_a = a;
  e.eps_b = b;
  e.eps_c = c;
  e.eps_at = sum_of_squares({a, b, c}).sqrt();
  e.eps_d = LogProb::zero();
  e.eps_s = LogProb::zero();
  e.validate();
  return e;
}

EpsilonBudget EpsilonBudget::decoy(LogProb pa, LogProb ev, LogProb a, LogProb b, LogProb c,
                                   LogProb d) {
  EpsilonBudget e;
  e.mode = Mode::decoy;
  e.eps_pa = pa;
  e.eps_ev = ev;
  e.eps_a = a;
  e.eps_b = b;
  e.eps_c = c;
  e.eps_d = d;
  e.eps_s = sum_of_squares({a, b, c}).sqrt();
  e.eps_at = (LogProb::from_prob(9.0) * d.squared() + e.eps_s.squared()).sqrt();
  e.validate();
  return e;
}

EpsilonBudget EpsilonBudget::default_decoy() {
  const LogProb ev = LogProb::from_prob(1e-10);
  const LogProb split = LogProb::from_prob(1e-10 / (4.0 * std::sqrt(12.0)));
  return decoy(LogProb::from_prob(1e-10 / 2.0), ev, split, split, split, split);
}

EpsilonBudget EpsilonBudget::default_qubit() {
  const LogProb ev = LogProb::from_prob(1e-10);
  const LogProb split = LogProb::from_prob(1e-10 / (4.0 * std::sqrt(3.0)));
  return qubit(LogProb::from_prob(1e-10 / 2.0), ev, split, split, split);
}

void EpsilonBudget::validate() const {
  check_positive(eps_pa, "eps_PA");
  check_positive(eps_ev, "eps_EV");
  check_positive(eps_at, "eps_AT");
  check_positive(eps_a, "eps_a");
  check_positive(eps_b, "eps_b");
  check_positive(eps_c, "eps_c");
  const LogProb sampling = sum_of_squares({eps_a, eps_b, eps_c});
  if (mode == Mode::qubit) {
    check_identity(eps_at.squared(), sampling, "eps_AT^2 = eps_a^2 + eps_b^2 + eps_c^2");
    return;
  }
  check_positive(eps_d, "eps_d");
  check_positive(eps_s, "eps_s");
  check_identity(eps_s.squared(), sampling, "eps_s^2 = eps_a^2 + eps_b^2 + eps_c^2");
  check_identity(eps_at.squared(), LogProb::from_prob(9.0) * eps_d.squared() + eps_s.squared(),
                 "eps_AT^2 = 9 eps_d^2 + eps_s^2");
}

LogProb EpsilonBudget::eps_secure() const {
  LogProb total = LogProb::zero();
  for (const auto& item : items()) total = total + item.value;
  return total;
}

std::vector<EpsilonItem> EpsilonBudget::items() const {
  return {{"eps_AT", eps_at}, {"eps_AT", eps_at}, {"eps_PA", eps_pa}, {"eps_EV", eps_ev}};
}

PhaseErrorTerms phase_error_terms(double e_x, double n_x, double n_k, const DeltaMetrics& deltas,
                                  const EpsilonBudget& budget) {
  if (!(e_x >= 0.0 && e_x <= 1.0)) throw DomainError("phase_error_bound: eX must lie in [0,1]");
  PhaseErrorTerms t;
  t.e_obs = e_x;
  t.delta1 = deltas.delta1;
  t.delta2 = deltas.delta2;
  if (!(n_x >= 1.0) || !(n_k >= 1.0) || deltas.delta1 >= 1.0 || deltas.delta2 >= 1.0) {
    t.saturated = true;
    t.bound = 1.0;
    return t;
  }
  t.gamma_serf = gamma_serf(n_x, n_k, budget.eps_a);
  t.gamma_bin1 = gamma_bin(n_k, deltas.delta1, budget.eps_b, budget.gamma_bin_method);
  t.gamma_bin2 = gamma_bin(n_k, deltas.delta2, budget.eps_c, budget.gamma_bin_method);
  const double num = e_x + t.gamma_serf + t.delta1 + t.gamma_bin1;
  const double den = 1.0 - t.delta2 - t.gamma_bin2;
  if (!(den > 0.0)) {
    t.saturated = true;
    t.bound = 1.0;
    return t;
  }
  t.bound = num / den;
  return t;
}

double phase_error_bound(double e_x, double n_x, double n_k, const DeltaMetrics& deltas,
                         const EpsilonBudget& budget) {
  return phase_error_terms(e_x, n_x, n_k, deltas, budget).bound;
}

double phase_error_bound_perfect(double e_x, double n_x, double n_k, const EpsilonBudget& budget) {
  if (!(n_x >= 1.0) || !(n_k >= 1.0)) return 1.0;
  return e_x + gamma_serf(n_x, n_k, budget.eps_a);
}

KeyLengthReport keylen_qubit_bb84(double n_k, double phase_bound, double lambda_ec,
                                  const EpsilonBudget& budget) {
  budget.validate();
  KeyLengthReport r;
  r.n_key = std::max(0.0, n_k);
  r.phase_error_bound = phase_bound;
  r.phase_terms.bound = phase_bound;
  r.lambda_ec = lambda_ec;
  r.leading_bits = r.n_key * (1.0 - binary_entropy(std::clamp(phase_bound, 0.0, 1.0)));
  const double pa = 2.0 * budget.eps_pa.bits();
  const double ev = std::ceil(budget.eps_ev.bits());
  r.penalties = {{"lambda_ec", lambda_ec},
                 {"privacy_amplification", pa},
                 {"error_verification", ev},
                 {"constant", -2.0}};
  r.epsilon_items = budget.items();
  r.eps_secure = budget.eps_secure();
  r.key_length = phase_bound >= 0.5 ? 0 : floor_nonneg(r.leading_bits - lambda_ec - pa - ev + 2.0);
  if (r.key_length == 0) {
    r.aborted = true;
    r.reason = r.n_key < 1.0 ? "no key rounds" : zero_key_reason(r.phase_terms);
  }
  return r;
}

KeyLengthReport keylen_decoy_bb84(const ObservedDecoyCounts& counts, const IntensitySpec& spec,
                                  const DeltaMetrics& deltas, double lambda_ec,
                                  const EpsilonBudget& budget) {
  spec.validate();
  counts.validate();
  budget.validate();
  if (budget.mode != EpsilonBudget::Mode::decoy) {
    throw DomainError("keylen_decoy_bb84: budget must be in decoy mode");
  }
  KeyLengthReport r;
  r.lambda_ec = lambda_ec;
  r.epsilon_items = budget.items();
  r.eps_secure = budget.eps_secure();
  const double pa = 2.0 * (budget.eps_pa.bits() - 1.0);
  const double ev = std::ceil(budget.eps_ev.bits());
  r.penalties = {{"lambda_ec", lambda_ec}, {"privacy_amplification", pa}, {"error_verification", ev}};
  if (counts.all_zero()) {
    r.aborted = true;
    r.reason = "no detections";
    r.e1 = 1.0;
    r.phase_terms.saturated = true;
    return r;
  }
  r.has_photon_bounds = true;
  for (Outcome o : {Outcome::x_err, Outcome::x_con, Outcome::k_con}) {
    r.photon_bounds[static_cast<int>(o)] = photon_bounds(counts, spec, budget.eps_d, o);
  }
  const double b1_err_max = r.bounds(Outcome::x_err).b1_max;
  const double b1_x_min = r.bounds(Outcome::x_con).b1_min;
  const double b1_k_min = r.bounds(Outcome::k_con).b1_min;
  r.e1 = b1_x_min > 0.0 ? std::min(1.0, b1_err_max / b1_x_min) : 1.0;
  r.phase_terms = phase_error_terms(r.e1, b1_x_min, b1_k_min, deltas, budget);
  r.phase_error_bound = r.phase_terms.bound;
  r.n_key = b1_k_min;
  r.leading_bits = b1_k_min * (1.0 - binary_entropy(r.phase_error_bound));
  r.key_length = r.phase_error_bound >= 0.5 ? 0 : floor_nonneg(r.leading_bits - lambda_ec - pa - ev);
  if (r.key_length == 0) {
    r.aborted = true;
    r.reason = zero_key_reason(r.phase_terms);
  }
  return r;
}

std::int64_t keylen_variable_generic(double b_stat, double lambda_ec, const EpsilonBudget& budget,
                                     double alpha) {
  if (!(alpha > 1.0 && alpha < 2.0)) throw DomainError("keylen_variable_generic: alpha must lie in (1,2)");
  const double theta =
      std::ceil(budget.eps_ev.bits()) + alpha / (alpha - 1.0) * budget.eps_pa.bits() - 2.0;
  return floor_nonneg(b_stat - lambda_ec - theta);
}

double optimal_alpha(LogProb eps_pa, double n, double dim) {
  if (!(n > 0.0) || !(dim > 0.0)) throw DomainError("optimal_alpha: n and dim must be positive");
  return 1.0 + eps_pa.bits() / (std::sqrt(n) * std::log2(2.0 * dim + 1.0));
}

double lambda_ec_default(double n_k, double e_z, double f_ec) {
  if (!(f_ec >= 1.0)) throw DomainError("lambda_ec_default: f_EC must be >= 1");
  if (!(n_k >= 0.0)) throw DomainError("lambda_ec_default: nK must be >= 0");
  return f_ec * n_k * binary_entropy(e_z);
}

}  // namespace qkdfs
