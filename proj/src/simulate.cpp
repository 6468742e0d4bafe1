#include "qkdfs/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "qkdfs/error.hpp"
#include "qkdfs/stats.hpp"

namespace qkdfs {

namespace {

constexpr const char* kBasis[2] = {"Z", "X"};
constexpr const char* kClick[3] = {"none", "ok", "err"};

struct ClickProbs {
  double none = 1.0;
  double ok = 0.0;
  double err = 0.0;
};

// Two threshold detectors with independent no-click probabilities; a double
// click is assigned to either bit with probability 1/2.
ClickProbs two_detectors(double q_ok_silent, double q_err_silent) {
  const double c_ok = 1.0 - q_ok_silent;
  const double c_err = 1.0 - q_err_silent;
  ClickProbs p;
  p.none = q_ok_silent * q_err_silent;
  p.ok = c_ok * q_err_silent + 0.5 * c_ok * c_err;
  p.err = c_err * q_ok_silent + 0.5 * c_ok * c_err;
  return p;
}

// Single photon reaching the correct detector with probability (1 - e) given arrival.
ClickProbs single_photon(double eta, double e, double dc) {
  const double q = 1.0 - dc;
  ClickProbs p;
  // Photon lost: dark counts only.
  const ClickProbs dark = two_detectors(q, q);
  p.none = (1.0 - eta) * dark.none;
  p.ok = (1.0 - eta) * dark.ok;
  p.err = (1.0 - eta) * dark.err;
  // Photon at the correct detector; the other one may dark-count.
  p.ok += eta * (1.0 - e) * (q + 0.5 * dc);
  p.err += eta * (1.0 - e) * 0.5 * dc;
  p.err += eta * e * (q + 0.5 * dc);
  p.ok += eta * e * 0.5 * dc;
  return p;
}

double sin2(double deg) {
  const double s = std::sin(deg * std::numbers::pi / 180.0);
  return s * s;
}

double at(const std::vector<double>& c, std::size_t i) { return c.at(i); }

double safe_rate(double err, double total) { return total > 0.0 ? std::min(1.0, err / total) : 0.5; }

KeyLengthReport finish_qubit(KeyLengthReport r, const PhaseErrorTerms& terms) {
  r.phase_terms = terms;
  if (r.key_length == 0) {
    r.aborted = true;
    if (r.n_key < 1.0) {
      r.reason = "no key rounds";
    } else if (terms.saturated) {
      r.reason = "phase error bound saturated";
    } else if (terms.bound >= 0.5) {
      r.reason = "phase error bound >= 1/2";
    } else {
      r.reason = "penalties exceed leading term";
    }
  }
  return r;
}

}  // namespace

double ChannelModel::transmittance() const { return std::pow(10.0, -loss_db / 10.0); }

void ChannelModel::validate() const {
  if (!(loss_db >= 0.0) || !std::isfinite(loss_db)) throw DomainError("channel: loss_db must be finite and >= 0");
  if (!std::isfinite(misalignment_deg)) throw DomainError("channel: misalignment_deg must be finite");
  if (!(depolarization >= 0.0 && depolarization <= 1.0)) throw DomainError("channel: depolarization must lie in [0,1]");
  detector.validate();
}

void ProtocolParams::validate() const {
  if (!(n >= 1.0) || !std::isfinite(n)) throw DomainError("protocol: n must be >= 1");
  for (double p : {gamma_test, p_z_alice, p_z_bob}) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("protocol: probabilities must lie in [0,1]");
  }
  if (!(f_ec >= 1.0)) throw DomainError("protocol: f_EC must be >= 1");
  if (source == SourceKind::decoy) intensities.validate();
  budget.validate();
}

std::size_t qubit_symbol(bool test, int alice_basis, int bob_basis, Click c) {
  return static_cast<std::size_t>(((test ? 0 : 1) * 2 + alice_basis) * 2 + bob_basis) * 3 +
         static_cast<std::size_t>(c);
}

std::size_t decoy_symbol(int alice_basis, int intensity, int bob_basis, Click c) {
  return static_cast<std::size_t>((alice_basis * 3 + intensity) * 2 + bob_basis) * 3 + static_cast<std::size_t>(c);
}

OutcomeDistribution honest_probs_qubit(const ChannelModel& channel, const ProtocolParams& params) {
  channel.validate();
  params.validate();
  OutcomeDistribution d;
  d.source = SourceKind::qubit;
  d.symbols.resize(24);
  d.probs.assign(24, 0.0);
  const double eta = channel.transmittance() * channel.detector.eta_det;
  const double dc = channel.detector.dc_det;
  const double p = channel.depolarization;
  const double e_matched = (1.0 - p) * sin2(channel.misalignment_deg) + 0.5 * p;
  const double pa[2] = {params.p_z_alice, 1.0 - params.p_z_alice};
  const double pb[2] = {params.p_z_bob, 1.0 - params.p_z_bob};
  for (int g = 0; g < 2; ++g) {
    const bool test = g == 0;
    const double pg = test ? params.gamma_test : 1.0 - params.gamma_test;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        const ClickProbs c = single_photon(eta, a == b ? e_matched : 0.5, dc);
        const double w = pg * pa[a] * pb[b];
        const double vals[3] = {c.none, c.ok, c.err};
        for (int o = 0; o < 3; ++o) {
          const std::size_t i = qubit_symbol(test, a, b, static_cast<Click>(o));
          d.symbols[i] = std::string(test ? "test_" : "gen_") + kBasis[a] + kBasis[b] + "_" + kClick[o];
          d.probs[i] = w * vals[o];
        }
      }
    }
  }
  return d;
}

OutcomeDistribution honest_probs_decoy(const ChannelModel& channel, const ProtocolParams& params) {
  channel.validate();
  params.validate();
  OutcomeDistribution d;
  d.source = SourceKind::decoy;
  d.symbols.resize(36);
  d.probs.assign(36, 0.0);
  const double t = channel.transmittance();
  const double eta = channel.detector.eta_det;
  const double dc = channel.detector.dc_det;
  const double s2 = sin2(channel.misalignment_deg);
  const double pa[2] = {params.p_z_alice, 1.0 - params.p_z_alice};
  const double pb[2] = {params.p_z_bob, 1.0 - params.p_z_bob};
  for (int a = 0; a < 2; ++a) {
    for (int k = 0; k < 3; ++k) {
      const double mean = params.intensities.mu[k] * t;
      for (int b = 0; b < 2; ++b) {
        const double frac_err = a == b ? s2 : 0.5;
        const ClickProbs c = two_detectors(noclick_prob_coherent(mean * (1.0 - frac_err), eta, dc),
                                           noclick_prob_coherent(mean * frac_err, eta, dc));
        const double w = pa[a] * params.intensities.p_mu[k] * pb[b];
        const double vals[3] = {c.none, c.ok, c.err};
        for (int o = 0; o < 3; ++o) {
          const std::size_t i = decoy_symbol(a, k, b, static_cast<Click>(o));
          d.symbols[i] = std::string(kBasis[a]) + "_mu" + std::to_string(k + 1) + "_" + kBasis[b] + "_" + kClick[o];
          d.probs[i] = w * vals[o];
        }
      }
    }
  }
  return d;
}

OutcomeDistribution honest_probs(const ChannelModel& channel, const ProtocolParams& params) {
  return params.source == SourceKind::qubit ? honest_probs_qubit(channel, params)
                                            : honest_probs_decoy(channel, params);
}

FrequencyVector sample_fobs(const OutcomeDistribution& dist, std::int64_t n, Rng& rng) {
  if (n < 0) throw DomainError("sample_fobs: n must be >= 0");
  FrequencyVector f;
  f.symbols = dist.symbols;
  f.counts.assign(dist.probs.size(), 0);
  std::int64_t remaining = n;
  double mass = 1.0;
  for (std::size_t i = 0; i < dist.probs.size() && remaining > 0; ++i) {
    if (i + 1 == dist.probs.size()) {
      f.counts[i] = remaining;
      break;
    }
    const double p = mass > 0.0 ? std::clamp(dist.probs[i] / mass, 0.0, 1.0) : 1.0;
    std::binomial_distribution<std::int64_t> bin(remaining, p);
    f.counts[i] = bin(rng);
    remaining -= f.counts[i];
    mass -= dist.probs[i];
  }
  return f;
}

FrequencyVector sample_fobs(const OutcomeDistribution& dist, std::int64_t n, std::uint64_t seed) {
  Rng rng(seed);
  return sample_fobs(dist, n, rng);
}

std::vector<double> expected_counts(const OutcomeDistribution& dist, double n) {
  std::vector<double> c(dist.probs.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = n * dist.probs[i];
  return c;
}

std::vector<double> as_counts(const FrequencyVector& f) {
  return std::vector<double>(f.counts.begin(), f.counts.end());
}

QubitStats qubit_stats(const std::vector<double>& c) {
  if (c.size() != 24) throw DomainError("qubit_stats: expected 24 symbols");
  QubitStats s;
  s.n_x_err = at(c, qubit_symbol(true, 1, 1, Click::err));
  s.n_x_con = at(c, qubit_symbol(true, 1, 1, Click::ok)) + s.n_x_err;
  s.n_k = at(c, qubit_symbol(false, 0, 0, Click::ok)) + at(c, qubit_symbol(false, 0, 0, Click::err));
  const double z_err = at(c, qubit_symbol(true, 0, 0, Click::err));
  s.e_z = safe_rate(z_err, z_err + at(c, qubit_symbol(true, 0, 0, Click::ok)));
  return s;
}

DecoyStats decoy_stats(const std::vector<double>& c) {
  if (c.size() != 36) throw DomainError("decoy_stats: expected 36 symbols");
  DecoyStats s;
  double z_err = 0.0, z_con = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double x_err = at(c, decoy_symbol(1, k, 1, Click::err));
    s.counts.at(Outcome::x_err, k) = x_err;
    s.counts.at(Outcome::x_con, k) = x_err + at(c, decoy_symbol(1, k, 1, Click::ok));
    const double ze = at(c, decoy_symbol(0, k, 0, Click::err));
    const double zc = ze + at(c, decoy_symbol(0, k, 0, Click::ok));
    s.counts.at(Outcome::k_con, k) = zc;
    z_err += ze;
    z_con += zc;
  }
  s.e_z = safe_rate(z_err, z_con);
  return s;
}

QubitStats qubit_stats_worst(const ConstraintIntervals& box) {
  if (box.intervals.size() != 24) throw DomainError("qubit_stats_worst: expected 24 symbols");
  const double n = static_cast<double>(box.n);
  auto lo = [&](std::size_t i) { return n * box.intervals[i].lo; };
  auto hi = [&](std::size_t i) { return n * box.intervals[i].hi; };
  QubitStats s;
  s.n_x_con = lo(qubit_symbol(true, 1, 1, Click::ok)) + lo(qubit_symbol(true, 1, 1, Click::err));
  s.n_x_err = std::min(s.n_x_con, hi(qubit_symbol(true, 1, 1, Click::err)));
  s.n_k = lo(qubit_symbol(false, 0, 0, Click::ok)) + lo(qubit_symbol(false, 0, 0, Click::err));
  const double z_err = hi(qubit_symbol(true, 0, 0, Click::err));
  s.e_z = safe_rate(z_err, z_err + lo(qubit_symbol(true, 0, 0, Click::ok)));
  return s;
}

DecoyStats decoy_stats_worst(const ConstraintIntervals& box) {
  if (box.intervals.size() != 36) throw DomainError("decoy_stats_worst: expected 36 symbols");
  const double n = static_cast<double>(box.n);
  auto lo = [&](std::size_t i) { return n * box.intervals[i].lo; };
  auto hi = [&](std::size_t i) { return n * box.intervals[i].hi; };
  DecoyStats s;
  double z_err = 0.0, z_ok = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double x_con = lo(decoy_symbol(1, k, 1, Click::ok)) + lo(decoy_symbol(1, k, 1, Click::err));
    s.counts.at(Outcome::x_con, k) = x_con;
    s.counts.at(Outcome::x_err, k) = std::min(x_con, hi(decoy_symbol(1, k, 1, Click::err)));
    s.counts.at(Outcome::k_con, k) = lo(decoy_symbol(0, k, 0, Click::ok)) + lo(decoy_symbol(0, k, 0, Click::err));
    z_err += hi(decoy_symbol(0, k, 0, Click::err));
    z_ok += lo(decoy_symbol(0, k, 0, Click::ok));
  }
  s.e_z = safe_rate(z_err, z_err + z_ok);
  return s;
}

double lambda_ec_of(const QubitStats& s, double f_ec) { return lambda_ec_default(s.n_k, s.e_z, f_ec); }

double lambda_ec_of(const DecoyStats& s, double f_ec) {
  return lambda_ec_default(s.counts.total(Outcome::k_con), s.e_z, f_ec);
}

KeyLengthReport key_length(const QubitStats& s, const DeltaMetrics& deltas, double lambda_ec,
                           const EpsilonBudget& budget) {
  const double e_x = safe_rate(s.n_x_err, s.n_x_con);
  const PhaseErrorTerms terms = phase_error_terms(e_x, s.n_x_con, s.n_k, deltas, budget);
  return finish_qubit(keylen_qubit_bb84(s.n_k, terms.bound, lambda_ec, budget), terms);
}

KeyLengthReport key_length(const DecoyStats& s, const IntensitySpec& spec, const DeltaMetrics& deltas,
                           double lambda_ec, const EpsilonBudget& budget) {
  return keylen_decoy_bb84(s.counts, spec, deltas, lambda_ec, budget);
}

KeyLengthReport honest_key_length(const ChannelModel& channel, const ProtocolParams& params) {
  const OutcomeDistribution dist = honest_probs(channel, params);
  const std::vector<double> c = expected_counts(dist, params.n);
  const DeltaMetrics deltas = delta_metrics(channel.detector);
  if (params.source == SourceKind::qubit) {
    const QubitStats s = qubit_stats(c);
    return key_length(s, deltas, lambda_ec_of(s, params.f_ec), params.budget);
  }
  const DecoyStats s = decoy_stats(c);
  return key_length(s, params.intensities, deltas, lambda_ec_of(s, params.f_ec), params.budget);
}

ExpectedRate expected_key_rate(const RateMode& mode, const ChannelModel& channel, const ProtocolParams& params,
                               int trials, std::uint64_t seed, Execution exec) {
  if (trials < 1) throw DomainError("expected_key_rate: trials must be >= 1");
  const OutcomeDistribution dist = honest_probs(channel, params);
  const DeltaMetrics deltas = delta_metrics(channel.detector);
  const double n_real = std::floor(params.n);
  if (n_real > 9.0e18) throw DomainError("expected_key_rate: n exceeds int64 range");
  const auto n = static_cast<std::int64_t>(n_real);

  auto length_of = [&](const std::vector<double>& counts, double lambda) -> std::int64_t {
    if (params.source == SourceKind::qubit) return key_length(qubit_stats(counts), deltas, lambda, params.budget).key_length;
    return key_length(decoy_stats(counts), params.intensities, deltas, lambda, params.budget).key_length;
  };
  auto lambda_of = [&](const std::vector<double>& counts) {
    if (params.source == SourceKind::qubit) return lambda_ec_of(qubit_stats(counts), params.f_ec);
    return lambda_ec_of(decoy_stats(counts), params.f_ec);
  };

  ExpectedRate out;
  AcceptanceSpec spec;
  if (mode.kind == RateMode::Kind::fixed) {
    if (!(mode.t >= 0.0)) throw DomainError("expected_key_rate: tolerance t must be >= 0");
    spec.symbols = dist.symbols;
    spec.fbar = dist.probs;
    spec.t.assign(dist.symbols.size(), mode.t);
    const ConstraintIntervals box = feasible_intervals(spec, n, params.budget.eps_at);
    const double lambda_honest = lambda_of(expected_counts(dist, n_real));
    if (params.source == SourceKind::qubit) {
      out.l_fixed = key_length(qubit_stats_worst(box), deltas, lambda_honest, params.budget).key_length;
    } else {
      out.l_fixed =
          key_length(decoy_stats_worst(box), params.intensities, deltas, lambda_honest, params.budget).key_length;
    }
  }

  struct Trial {
    double rate = 0.0;
    bool hit = false;
  };
  const auto results = parallel_map(
      static_cast<std::size_t>(trials),
      [&](std::size_t k) {
        const FrequencyVector f = sample_fobs(dist, n, derive_seed(seed, k));
        Trial t;
        if (mode.kind == RateMode::Kind::fixed) {
          t.hit = acceptance_test(f, spec);
          t.rate = t.hit ? static_cast<double>(out.l_fixed) / n_real : 0.0;
        } else {
          const std::vector<double> c = as_counts(f);
          const std::int64_t l = length_of(c, lambda_of(c));
          t.hit = l > 0;
          t.rate = static_cast<double>(l) / n_real;
        }
        return t;
      },
      exec);

  double sum = 0.0, hits = 0.0;
  for (const auto& t : results) {
    out.rates.push_back(t.rate);
    sum += t.rate;
    hits += t.hit;
  }
  out.mean = sum / trials;
  out.accept_fraction = hits / trials;
  if (trials > 1) {
    double ss = 0.0;
    for (double r : out.rates) ss += (r - out.mean) * (r - out.mean);
    out.std_error = std::sqrt(ss / (trials - 1) / trials);
  }
  return out;
}

}  // namespace qkdfs
