#include "qkdfs/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "qkdfs/error.hpp"
#include "qkdfs/stats.hpp"

namespace qkdfs {

namespace {

void check_unique(const std::vector<std::string>& symbols, const char* what) {
  const std::set<std::string> s(symbols.begin(), symbols.end());
  if (s.size() != symbols.size()) throw DomainError(std::string(what) + ": duplicate symbols");
}

void check_eps(LogProb eps) {
  if (eps.is_zero() || !(eps.log2() < 0.0)) throw DomainError("eps_AT must lie in (0,1)");
}

}  // namespace

std::int64_t FrequencyVector::n() const {
  std::int64_t total = 0;
  for (auto c : counts) total += c;
  return total;
}

double FrequencyVector::frequency(std::size_t i) const {
  const auto total = n();
  return total == 0 ? 0.0 : static_cast<double>(counts.at(i)) / static_cast<double>(total);
}

void FrequencyVector::validate() const {
  if (symbols.size() != counts.size()) throw DomainError("frequency vector: size mismatch");
  check_unique(symbols, "frequency vector");
  for (auto c : counts)
    if (c < 0) throw DomainError("frequency vector: negative count");
}

void AcceptanceSpec::validate() const {
  if (symbols.size() != fbar.size() || symbols.size() != t.size()) {
    throw DomainError("acceptance spec: size mismatch");
  }
  check_unique(symbols, "acceptance spec");
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (!(fbar[i] >= 0.0 && fbar[i] <= 1.0)) throw DomainError("acceptance spec: fbar outside [0,1]");
    if (!(t[i] >= 0.0)) throw DomainError("acceptance spec: tolerance must be >= 0");
  }
}

std::size_t AcceptanceSpec::n_tested() const {
  std::size_t k = 0;
  for (std::size_t i = 0; i < t.size(); ++i) k += tested(i) ? 1 : 0;
  return k;
}

const SymbolInterval& ConstraintIntervals::find(const std::string& symbol) const {
  for (const auto& iv : intervals)
    if (iv.symbol == symbol) return iv;
  throw DomainError("constraint intervals: unknown symbol " + symbol);
}

bool acceptance_test(const FrequencyVector& fobs, const AcceptanceSpec& spec) {
  fobs.validate();
  spec.validate();
  const std::set<std::string> a(fobs.symbols.begin(), fobs.symbols.end());
  const std::set<std::string> b(spec.symbols.begin(), spec.symbols.end());
  if (a != b) throw DomainError("acceptance_test: symbol sets differ");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < fobs.symbols.size(); ++i) index[fobs.symbols[i]] = i;
  for (std::size_t i = 0; i < spec.symbols.size(); ++i) {
    if (!spec.tested(i)) continue;
    const double f = fobs.frequency(index.at(spec.symbols[i]));
    if (!(std::fabs(f - spec.fbar[i]) <= spec.t[i])) return false;
  }
  return true;
}

ConstraintIntervals feasible_intervals(const AcceptanceSpec& spec, std::int64_t n, LogProb eps_at) {
  spec.validate();
  check_eps(eps_at);
  if (n < 1) throw DomainError("feasible_intervals: n must be >= 1");
  ConstraintIntervals out;
  out.construction = "feasible";
  out.n = n;
  out.eps = eps_at;
  const auto nd = static_cast<double>(n);
  for (std::size_t i = 0; i < spec.symbols.size(); ++i) {
    if (!spec.tested(i)) continue;
    std::int64_t x_lo = snapped_floor(nd * (spec.fbar[i] - spec.t[i]));
    std::int64_t x_hi = snapped_ceil(nd * (spec.fbar[i] + spec.t[i]));
    if (x_lo < 0 || x_hi > n) out.clamped = true;
    x_lo = std::clamp<std::int64_t>(x_lo, 0, n);
    x_hi = std::clamp<std::int64_t>(x_hi, 0, n);
    SymbolInterval iv{spec.symbols[i], 0.0, 1.0};
    const auto lo_d = static_cast<double>(x_lo);
    const auto hi_d = static_cast<double>(x_hi);
    if (x_lo > 0) iv.lo = beta_quantile_lower(eps_at, lo_d, nd - lo_d + 1.0);
    if (x_hi < n) iv.hi = beta_quantile_upper(eps_at, hi_d + 1.0, nd - hi_d);
    out.intervals.push_back(iv);
  }
  return out;
}

ConstraintIntervals confidence_intervals(const FrequencyVector& fobs, LogProb eps_at,
                                         std::size_t n_test_symbols) {
  fobs.validate();
  check_eps(eps_at);
  if (n_test_symbols < 1) throw DomainError("confidence_intervals: need at least one test symbol");
  const std::int64_t n = fobs.n();
  if (n < 1) throw DomainError("confidence_intervals: n must be >= 1");
  ConstraintIntervals out;
  out.construction = "confidence";
  out.n = n;
  out.eps = eps_at;
  const LogProb level = eps_at / LogProb::from_prob(static_cast<double>(n_test_symbols));
  for (std::size_t i = 0; i < fobs.symbols.size(); ++i) {
    const Interval cp = clopper_pearson(fobs.counts[i], n, level);
    out.intervals.push_back({fobs.symbols[i], cp.lo, cp.hi});
  }
  return out;
}

nlohmann::json to_json(const ConstraintIntervals& c) {
  nlohmann::json symbols = nlohmann::json::array();
  for (const auto& iv : c.intervals) symbols.push_back({{"symbol", iv.symbol}, {"lo", iv.lo}, {"hi", iv.hi}});
  return {{"construction", c.construction},
          {"n", c.n},
          {"eps_log2", c.eps.log2()},
          {"clamped", c.clamped},
          {"symbols", symbols}};
}

}  // namespace qkdfs
