#include "qkdfs/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace qkdfs {

namespace {

std::string format_message(const std::string& message, int line, const std::string& key) {
  std::string out = "config error";
  if (line > 0) out += " at line " + std::to_string(line);
  if (!key.empty()) out += " [" + key + "]";
  return out + ": " + message;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<KeySpec> build_schema() {
  using T = ValueType;
  return {
      {"channel.loss_db", T::real, "0", {}, "channel loss in dB"},
      {"channel.misalignment_deg", T::real, "0", {}, "polarization misalignment in degrees"},
      {"channel.depolarization", T::real, "0", {}, "depolarizing probability (qubit source)"},
      {"detector.eta_det", T::real, "0.7", {}, "nominal detection efficiency"},
      {"detector.delta_eta", T::real, "0", {}, "relative efficiency tolerance"},
      {"detector.dc_det", T::real, "1e-6", {}, "nominal dark-count probability"},
      {"detector.delta_dc", T::real, "0", {}, "relative dark-count tolerance"},
      {"detector.swap", T::boolean, "false", {}, "random detector swapping"},
      {"protocol.source", T::choice, "decoy", {"qubit", "decoy"}, "source model for simulate"},
      {"protocol.n", T::real, "1e12", {}, "number of rounds"},
      {"protocol.gamma_test", T::real, "0.1", {}, "test-round probability (qubit source)"},
      {"protocol.p_z_alice", T::real, "0.5", {}, "Alice's Z-basis probability"},
      {"protocol.p_z_bob", T::real, "0.5", {}, "Bob's Z-basis probability"},
      {"protocol.f_ec", T::real, "1.16", {}, "error-correction efficiency"},
      {"intensities.mu1", T::real, "1", {}, "signal mean photon number"},
      {"intensities.mu2", T::real, "0.1", {}, "first decoy mean photon number"},
      {"intensities.mu3", T::real, "0.01", {}, "second decoy mean photon number"},
      {"intensities.p_mu1", T::real, "0.333333333333333333", {}, "probability of mu1"},
      {"intensities.p_mu2", T::real, "0.333333333333333333", {}, "probability of mu2"},
      {"intensities.p_mu3", T::real, "0.333333333333333333", {}, "probability of mu3"},
      {"epsilon.eps_pa", T::epsilon, "", {}, "privacy amplification"},
      {"epsilon.eps_ev", T::epsilon, "", {}, "error verification"},
      {"epsilon.eps_a", T::epsilon, "", {}, "sampling split a"},
      {"epsilon.eps_b", T::epsilon, "", {}, "sampling split b"},
      {"epsilon.eps_c", T::epsilon, "", {}, "sampling split c"},
      {"epsilon.eps_d", T::epsilon, "", {}, "decoy deviation split"},
      {"epsilon.gamma_bin_method", T::choice, "automatic", {"automatic", "exact", "hoeffding"}, "gamma_bin evaluation"},
      {"decoy_bounds.deviation", T::choice, "apply", {"apply", "disabled"}, "deviation term"},
      {"postselect.preset", T::choice, "custom", {"custom", "qubit", "decoy"}, "block structure for x"},
      {"postselect.n", T::integer, "", {}, "number of rounds"},
      {"postselect.x", T::integer, "1", {}, "single-round dimension (custom preset)"},
      {"postselect.eps_tilde", T::epsilon, "5e-11", {}, "postselection slack (given rule)"},
      {"postselect.eps_tilde_rule", T::choice, "balanced", {"balanced", "given"}, "balanced: eps_target / 2g"},
      {"postselect.eps_target", T::epsilon, "1e-10", {}, "target coherent-attack epsilon"},
      {"postselect.key_length", T::integer, "0", {}, "IID key length to lift"},
      {"simulate.mode", T::choice, "variable", {"variable", "fixed"}, "key-length mode"},
      {"simulate.t", T::real, "1e-4", {}, "acceptance tolerance (fixed mode)"},
      {"simulate.trials", T::integer, "25", {}, "Monte Carlo trials"},
      {"authsim.protocol", T::choice, "app", {"app", "del_app"}, "post-processing protocol"},
      {"authsim.scenario", T::choice, "random", {"random", "honest", "tamper_core", "tamper_app"}, "adversary"},
      {"authsim.runs", T::integer, "10000", {}, "runs (random scenario)"},
      {"authsim.messages", T::integer, "12", {}, "core messages per run"},
      {"authsim.payload_bytes", T::integer, "8", {}, "core payload size"},
      {"authsim.key_bits", T::integer, "256", {}, "key length"},
      {"authsim.p_attack", T::real, "0.1", {}, "per-message attack probability"},
      {"authsim.latency", T::real, "1", {}, "channel latency"},
      {"authsim.timeout", T::real, "1000", {}, "receiver timeout"},
      {"authsim.trace_run", T::integer, "0", {}, "run exported as a JSONL trace"},
  };
}

void check_value(const KeySpec& spec, const std::string& value) {
  switch (spec.type) {
    case ValueType::real:
      parse_real(value);
      break;
    case ValueType::integer:
      parse_integer(value);
      break;
    case ValueType::boolean:
      if (value != "true" && value != "false") throw std::invalid_argument("expected true or false");
      break;
    case ValueType::choice:
      if (std::find(spec.choices.begin(), spec.choices.end(), value) == spec.choices.end()) {
        std::string all;
        for (const auto& c : spec.choices) all += (all.empty() ? "" : ", ") + c;
        throw std::invalid_argument("expected one of: " + all);
      }
      break;
    case ValueType::epsilon:
      parse_epsilon(value);
      break;
  }
}

}  // namespace

ConfigError::ConfigError(const std::string& message, int line, std::string key)
    : std::runtime_error(format_message(message, line, key)), line_(line), key_(std::move(key)) {}

const std::vector<KeySpec>& config_schema() {
  static const std::vector<KeySpec> schema = build_schema();
  return schema;
}

const KeySpec* find_key(std::string_view name) {
  for (const auto& k : config_schema()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

double parse_real(std::string_view text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end) throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  if (!std::isfinite(v)) throw std::invalid_argument("not finite: '" + std::string(text) + "'");
  return v;
}

std::int64_t parse_integer(std::string_view text) {
  std::int64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (!text.empty() && ec == std::errc() && ptr == end) return v;
  // Scientific notation is accepted for exact integers.
  const double d = parse_real(text);
  if (d != std::floor(d) || std::fabs(d) > 9007199254740992.0) {
    throw std::invalid_argument("not an integer: '" + std::string(text) + "'");
  }
  return static_cast<std::int64_t>(d);
}

LogProb parse_epsilon(std::string_view text) {
  constexpr std::string_view prefix = "log2:";
  if (text.substr(0, prefix.size()) == prefix) {
    const double l = parse_real(trim(text.substr(prefix.size())));
    if (!(l < 0.0)) throw std::invalid_argument("log2 epsilon must be negative");
    return LogProb::from_log2(l);
  }
  const double p = parse_real(text);
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  return LogProb::from_prob(p);
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig cfg;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("unterminated section header", line_no, "");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      const bool known = std::any_of(config_schema().begin(), config_schema().end(),
                                     [&](const KeySpec& k) { return k.name.rfind(section + ".", 0) == 0; });
      if (!known) throw ConfigError("unknown section", line_no, section);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected key = value", line_no, "");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (section.empty()) throw ConfigError("key outside of a section", line_no, key);
    const std::string name = section + "." + key;
    const KeySpec* spec = find_key(name);
    if (!spec) throw ConfigError("unknown key", line_no, name);
    if (cfg.entries_.count(name)) throw ConfigError("duplicate key", line_no, name);
    try {
      check_value(*spec, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what(), line_no, name);
    }
    cfg.entries_[name] = Entry{value, line_no};
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'", 0, "");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool RunConfig::has(std::string_view name) const { return entries_.find(name) != entries_.end(); }

void RunConfig::set(std::string_view name, const std::string& value) {
  const KeySpec* spec = find_key(name);
  if (!spec) throw ConfigError("unknown key", 0, std::string(name));
  try {
    check_value(*spec, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), 0, std::string(name));
  }
  entries_[std::string(name)] = Entry{value, 0};
}

void RunConfig::require(const std::vector<std::string>& names) const {
  for (const auto& n : names) {
    if (!has(n)) throw ConfigError("missing required key", 0, n);
  }
}

const std::string& RunConfig::raw(std::string_view name, const KeySpec& spec) const {
  if (const auto it = entries_.find(name); it != entries_.end()) return it->second.value;
  if (spec.default_value.empty()) throw ConfigError("missing required key", 0, std::string(name));
  return spec.default_value;
}

namespace {

const KeySpec& typed(std::string_view name, ValueType type) {
  const KeySpec* spec = find_key(name);
  if (!spec || spec->type != type) throw std::logic_error("config key queried with the wrong type: " + std::string(name));
  return *spec;
}

}  // namespace

double RunConfig::real(std::string_view name) const {
  return parse_real(raw(name, typed(name, ValueType::real)));
}

std::int64_t RunConfig::integer(std::string_view name) const {
  return parse_integer(raw(name, typed(name, ValueType::integer)));
}

bool RunConfig::boolean(std::string_view name) const {
  return raw(name, typed(name, ValueType::boolean)) == "true";
}

std::string RunConfig::choice(std::string_view name) const { return raw(name, typed(name, ValueType::choice)); }

LogProb RunConfig::epsilon(std::string_view name) const {
  return parse_epsilon(raw(name, typed(name, ValueType::epsilon)));
}

int RunConfig::line_of(std::string_view name) const {
  const auto it = entries_.find(name);
  return it == entries_.end() ? 0 : it->second.line;
}

}  // namespace qkdfs
