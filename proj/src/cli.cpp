#include "qkdfs/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include "qkdfs/authsim.hpp"
#include "qkdfs/decoy.hpp"
#include "qkdfs/detector.hpp"
#include "qkdfs/error.hpp"
#include "qkdfs/parallel.hpp"
#include "qkdfs/postselect.hpp"

namespace qkdfs {

using json = nlohmann::ordered_json;

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

SweepAxis SweepAxis::parse(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("sweep must look like KEY=START:STOP:STEPS", 0, text);
  SweepAxis axis;
  axis.key = text.substr(0, eq);
  const KeySpec* spec = find_key(axis.key);
  if (!spec) throw ConfigError("unknown sweep key", 0, axis.key);
  if (spec->type != ValueType::real && spec->type != ValueType::integer && spec->type != ValueType::epsilon) {
    throw ConfigError("sweep key must be numeric", 0, axis.key);
  }
  std::vector<std::string> parts;
  std::stringstream ss(text.substr(eq + 1));
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  if (parts.size() != 3 && parts.size() != 4) throw ConfigError("sweep must look like KEY=START:STOP:STEPS[:log]", 0, axis.key);
  try {
    axis.start = parse_real(parts[0]);
    axis.stop = parse_real(parts[1]);
    const std::int64_t steps = parse_integer(parts[2]);
    if (steps < 1 || steps > 1000000) throw std::invalid_argument("steps must lie in [1, 1e6]");
    axis.steps = static_cast<int>(steps);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), 0, axis.key);
  }
  if (parts.size() == 4) {
    if (parts[3] == "log") {
      axis.log_spaced = true;
    } else if (parts[3] != "lin") {
      throw ConfigError("sweep spacing must be lin or log", 0, axis.key);
    }
  }
  if (axis.log_spaced && !(axis.start > 0.0 && axis.stop > 0.0)) {
    throw ConfigError("log sweep needs positive endpoints", 0, axis.key);
  }
  return axis;
}

std::vector<double> SweepAxis::points() const {
  std::vector<double> out(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    const double f = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    out[i] = log_spaced ? start * std::pow(stop / start, f) : start + (stop - start) * f;
  }
  if (steps > 1) out.back() = stop;
  return out;
}

ChannelModel channel_from(const RunConfig& cfg) {
  ChannelModel ch;
  ch.loss_db = cfg.real("channel.loss_db");
  ch.misalignment_deg = cfg.real("channel.misalignment_deg");
  ch.depolarization = cfg.real("channel.depolarization");
  ch.detector.eta_det = cfg.real("detector.eta_det");
  ch.detector.delta_eta = cfg.real("detector.delta_eta");
  ch.detector.dc_det = cfg.real("detector.dc_det");
  ch.detector.delta_dc = cfg.real("detector.delta_dc");
  ch.detector.swap = cfg.boolean("detector.swap");
  return ch;
}

EpsilonBudget budget_from(const RunConfig& cfg, SourceKind source) {
  const EpsilonBudget base =
      source == SourceKind::qubit ? EpsilonBudget::default_qubit() : EpsilonBudget::default_decoy();
  auto pick = [&](const char* key, LogProb fallback) { return cfg.has(key) ? cfg.epsilon(key) : fallback; };
  const LogProb pa = pick("epsilon.eps_pa", base.eps_pa);
  const LogProb ev = pick("epsilon.eps_ev", base.eps_ev);
  const LogProb a = pick("epsilon.eps_a", base.eps_a);
  const LogProb b = pick("epsilon.eps_b", base.eps_b);
  const LogProb c = pick("epsilon.eps_c", base.eps_c);
  EpsilonBudget out;
  if (source == SourceKind::qubit) {
    if (cfg.has("epsilon.eps_d")) {
      throw ConfigError("eps_d applies to the decoy source only", cfg.line_of("epsilon.eps_d"), "epsilon.eps_d");
    }
    out = EpsilonBudget::qubit(pa, ev, a, b, c);
  } else {
    out = EpsilonBudget::decoy(pa, ev, a, b, c, pick("epsilon.eps_d", base.eps_d));
  }
  const std::string method = cfg.choice("epsilon.gamma_bin_method");
  out.gamma_bin_method = method == "exact"       ? GammaBinMethod::exact
                         : method == "hoeffding" ? GammaBinMethod::hoeffding
                                                 : GammaBinMethod::automatic;
  return out;
}

ProtocolParams params_from(const RunConfig& cfg, SourceKind source) {
  ProtocolParams p;
  p.source = source;
  p.n = cfg.real("protocol.n");
  p.gamma_test = cfg.real("protocol.gamma_test");
  p.p_z_alice = cfg.real("protocol.p_z_alice");
  p.p_z_bob = cfg.real("protocol.p_z_bob");
  p.f_ec = cfg.real("protocol.f_ec");
  p.intensities.mu = {cfg.real("intensities.mu1"), cfg.real("intensities.mu2"), cfg.real("intensities.mu3")};
  p.intensities.p_mu = {cfg.real("intensities.p_mu1"), cfg.real("intensities.p_mu2"), cfg.real("intensities.p_mu3")};
  p.budget = budget_from(cfg, source);
  p.validate();
  return p;
}

namespace {

/// Rows are flat objects whose keys are the CSV columns in order.
struct PointResult {
  std::vector<json> rows;
  json detail;
  std::vector<std::string> trace_lines;  // authsim JSONL
};

struct Command {
  std::string schema;
  std::vector<std::string> columns;
  std::vector<std::string> required;
  std::function<PointResult(const RunConfig&, std::uint64_t seed)> evaluate;
};

json epsilon_json(const std::vector<EpsilonItem>& items) {
  json j = json::object();
  for (const auto& it : items) j[it.name] = it.value.log2();
  return j;
}

json report_json(const KeyLengthReport& r) {
  json j;
  j["key_length"] = r.key_length;
  j["aborted"] = r.aborted;
  j["reason"] = r.reason;
  j["phase_error_bound"] = r.phase_error_bound;
  const auto& t = r.phase_terms;
  j["phase_terms"] = {{"e_obs", t.e_obs},   {"gamma_serf", t.gamma_serf}, {"delta1", t.delta1},
                      {"gamma_bin1", t.gamma_bin1}, {"delta2", t.delta2}, {"gamma_bin2", t.gamma_bin2},
                      {"saturated", t.saturated}};
  if (r.has_photon_bounds) {
    j["e1"] = r.e1;
    json pb = json::object();
    for (Outcome o : {Outcome::x_err, Outcome::x_con, Outcome::k_con}) {
      const auto& b = r.bounds(o);
      pb[std::string(outcome_name(o))] = {{"b0_min", b.b0_min}, {"b1_min", b.b1_min}, {"b1_max", b.b1_max}};
    }
    j["photon_bounds"] = pb;
  }
  j["n_key"] = r.n_key;
  j["leading_bits"] = r.leading_bits;
  j["lambda_ec"] = r.lambda_ec;
  json pen = json::object();
  for (const auto& p : r.penalties) pen[p.name] = p.bits;
  j["penalties"] = pen;
  j["epsilon_log2"] = epsilon_json(r.epsilon_items);
  j["eps_secure_log2"] = r.eps_secure.log2();
  return j;
}

PointResult keyrate_point(const RunConfig& cfg, SourceKind source) {
  const ChannelModel ch = channel_from(cfg);
  const ProtocolParams p = params_from(cfg, source);
  const KeyLengthReport r = honest_key_length(ch, p);
  json row;
  row["loss_db"] = ch.loss_db;
  row["n"] = p.n;
  row["delta1"] = r.phase_terms.delta1;
  row["delta2"] = r.phase_terms.delta2;
  if (source == SourceKind::decoy) {
    row["b1min_K"] = r.bounds(Outcome::k_con).b1_min;
  } else {
    row["n_key"] = r.n_key;
    row["e_x"] = r.phase_terms.e_obs;
  }
  row["phase_error_bound"] = r.phase_error_bound;
  row["lambda_ec"] = r.lambda_ec;
  row["key_length"] = r.key_length;
  row["key_rate"] = static_cast<double>(r.key_length) / p.n;
  row["aborted_reason"] = r.reason;
  return {{row}, report_json(r), {}};
}

PointResult delta_point(const RunConfig& cfg) {
  DetectorSpec d = channel_from(cfg).detector;
  d.validate();
  DetectorSpec plain = d, swapped = d;
  plain.swap = false;
  swapped.swap = true;
  const DeltaMetrics no = delta_metrics_noswap(plain);
  const DeltaMetrics sw = delta_metrics_swap(swapped);
  json row;
  row["eta_det"] = d.eta_det;
  row["delta_eta"] = d.delta_eta;
  row["dc_det"] = d.dc_det;
  row["delta_dc"] = d.delta_dc;
  row["delta1_noswap"] = no.delta1;
  row["delta2_noswap"] = no.delta2;
  row["delta1_swap"] = sw.delta1;
  row["delta2_swap"] = sw.delta2;
  return {{row}, row, {}};
}

PointResult decoy_bounds_point(const RunConfig& cfg) {
  if (cfg.choice("decoy_bounds.deviation") != "apply") {
    throw ConfigError("the deviation term can only be disabled inside oracle tests",
                      cfg.line_of("decoy_bounds.deviation"), "decoy_bounds.deviation");
  }
  const ChannelModel ch = channel_from(cfg);
  const ProtocolParams p = params_from(cfg, SourceKind::decoy);
  const DecoyStats s = decoy_stats(expected_counts(honest_probs_decoy(ch, p), p.n));
  PointResult out;
  out.detail = json::object();
  for (Outcome o : {Outcome::x_err, Outcome::x_con, Outcome::k_con}) {
    const PhotonBounds b = photon_bounds(s.counts, p.intensities, p.budget.eps_d, o);
    json row;
    row["loss_db"] = ch.loss_db;
    row["n"] = p.n;
    row["outcome"] = std::string(outcome_name(o));
    row["n_mu1"] = s.counts.at(o, 0);
    row["n_mu2"] = s.counts.at(o, 1);
    row["n_mu3"] = s.counts.at(o, 2);
    row["b0_min"] = b.b0_min;
    row["b1_min"] = b.b1_min;
    row["b1_max"] = b.b1_max;
    out.rows.push_back(row);
  }
  out.detail["rows"] = out.rows;
  return out;
}

PointResult postselect_point(const RunConfig& cfg) {
  const std::string preset = cfg.choice("postselect.preset");
  std::int64_t x = cfg.integer("postselect.x");
  if (preset == "qubit") {
    x = x_block_diagonal({{2, 1}, {2, 2}});
  } else if (preset == "decoy") {
    x = x_decoy_tagged(3, 3, 4, {1, 2});
  }
  const LogProb target = cfg.epsilon("postselect.eps_target");
  PSParams ps = PSParams::make(cfg.integer("postselect.n"), x, cfg.epsilon("postselect.eps_tilde"));
  if (cfg.choice("postselect.eps_tilde_rule") == "balanced") {
    ps = PSParams::make(ps.n, ps.x, LogProb::from_log2(target.log2() - 1.0 - ps.log2_g));
  }
  const std::int64_t l_in = cfg.integer("postselect.key_length");
  if (l_in < 0) throw DomainError("postselect: key_length must be >= 0");
  const IidEpsilonResult req = required_iid_epsilon(target, ps);
  json row;
  row["preset"] = preset;
  row["n"] = ps.n;
  row["x"] = ps.x;
  row["log2_g"] = ps.log2_g;
  row["dimension_penalty_bits"] = 2.0 * ps.log2_g;
  row["penalty_bits"] = lift_penalty_bits(ps);
  row["key_length_iid"] = l_in;
  row["key_length_lifted"] = lift_key_length(l_in, ps);
  row["eps_tilde_log2"] = ps.eps_tilde.log2();
  row["eps_target_log2"] = target.log2();
  row["feasible"] = req.feasible;
  row["eps_iid_log2"] = req.feasible ? req.eps_iid.log2() : 0.0;
  row["eps_lift_log2"] = req.feasible ? lift_epsilon(req.eps_iid, ps).log2() : 0.0;
  row["log2_g_eps_tilde"] = req.log2_g_eps_tilde;
  return {{row}, row, {}};
}

PointResult simulate_point(const RunConfig& cfg, std::uint64_t seed) {
  const SourceKind source = cfg.choice("protocol.source") == "qubit" ? SourceKind::qubit : SourceKind::decoy;
  const ChannelModel ch = channel_from(cfg);
  const ProtocolParams p = params_from(cfg, source);
  const bool fixed = cfg.choice("simulate.mode") == "fixed";
  const RateMode mode = fixed ? RateMode::fixed(cfg.real("simulate.t")) : RateMode::variable();
  const std::int64_t trials = cfg.integer("simulate.trials");
  if (trials < 1 || trials > 100000000) throw DomainError("simulate: trials must lie in [1, 1e8]");
  const ExpectedRate r = expected_key_rate(mode, ch, p, static_cast<int>(trials), seed);
  json row;
  row["source"] = source == SourceKind::qubit ? "qubit" : "decoy";
  row["loss_db"] = ch.loss_db;
  row["n"] = p.n;
  row["mode"] = fixed ? "fixed" : "variable";
  row["t"] = fixed ? mode.t : 0.0;
  row["trials"] = trials;
  row["mean_rate"] = r.mean;
  row["std_error"] = r.std_error;
  row["accept_fraction"] = r.accept_fraction;
  row["l_fixed"] = r.l_fixed;
  json detail = row;
  detail["rates"] = r.rates;
  return {{row}, detail, {}};
}

std::size_t checked_size(const RunConfig& cfg, const char* key, std::int64_t lo) {
  const std::int64_t v = cfg.integer(key);
  if (v < lo) throw DomainError(std::string("authsim: ") + key + " must be >= " + std::to_string(lo));
  return static_cast<std::size_t>(v);
}

PointResult authsim_point(const RunConfig& cfg, std::uint64_t seed) {
  CampaignConfig c;
  const std::string protocol = cfg.choice("authsim.protocol");
  c.protocol = protocol == "app" ? AuthProtocol::app : AuthProtocol::del_app;
  c.runs = checked_size(cfg, "authsim.runs", 1);
  c.messages = checked_size(cfg, "authsim.messages", 1);
  c.payload_bytes = checked_size(cfg, "authsim.payload_bytes", 1);
  c.key_bits = checked_size(cfg, "authsim.key_bits", 1);
  c.p_attack = cfg.real("authsim.p_attack");
  if (!(c.p_attack >= 0.0 && c.p_attack <= 1.0)) throw DomainError("authsim: p_attack must lie in [0,1]");
  c.timing.latency = cfg.real("authsim.latency");
  c.timing.timeout = cfg.real("authsim.timeout");
  const std::string scenario = cfg.choice("authsim.scenario");

  PointResult out;
  std::vector<TranscriptEvent> trace;
  CampaignSummary s;
  if (scenario == "random") {
    const std::size_t traced = checked_size(cfg, "authsim.trace_run", 0);
    if (traced >= c.runs) throw DomainError("authsim: trace_run must be below runs");
    s = run_campaign(c, seed, Execution::openmp);
    run_one(c, seed, traced, &trace);
  } else {
    Rng rng = make_stream(seed, 0);
    const auto schedule = make_core_schedule(c.messages, c.payload_bytes, rng);
    const auto key = key_or_bottom(BitString::random(c.key_bits, rng));
    AdversaryPolicy policy = AdversaryPolicy::honest();
    if (scenario == "tamper_core") {
      policy.set({Phase::core, Direction::a_to_b, 1}, {ActionKind::tamper, 0.0});
    } else if (scenario == "tamper_app") {
      // The decision message Bob sends after the core phase.
      const Phase ph = c.protocol == AuthProtocol::app ? Phase::app : Phase::del_app;
      const auto bob_core = static_cast<std::int64_t>(c.messages / 2);
      policy.set({ph, Direction::b_to_a, bob_core + 1}, {ActionKind::tamper, 0.0});
    }
    s = summarize({run_with_policy(c, schedule, key, policy, &trace)}, c.key_bits);
  }
  json row;
  row["protocol"] = protocol;
  row["scenario"] = scenario;
  row["runs"] = s.runs;
  row["honest_runs"] = s.honest_runs;
  row["core_abort_runs"] = s.core_abort_runs;
  row["both_abort_runs"] = s.both_abort_runs;
  row["asymmetric_runs"] = s.asymmetric_runs;
  row["k_violations"] = s.k_violations;
  row["both_abort_violations"] = s.both_abort_violations;
  row["honest_violations"] = s.honest_violations;
  out.rows.push_back(row);
  out.detail = row;
  for (const auto& e : trace) out.trace_lines.push_back(to_json_line(e));
  return out;
}

std::vector<std::string> keyrate_columns(SourceKind source) {
  if (source == SourceKind::decoy) {
    return {"loss_db", "n", "delta1", "delta2", "b1min_K", "phase_error_bound", "lambda_ec", "key_length", "key_rate",
            "aborted_reason"};
  }
  return {"loss_db", "n", "delta1", "delta2", "n_key", "e_x", "phase_error_bound", "lambda_ec", "key_length",
          "key_rate", "aborted_reason"};
}

Command make_command(const std::string& name, SourceKind source) {
  const std::vector<std::string> sim_required = {"channel.loss_db", "protocol.n"};
  if (name == "keyrate") {
    const std::string sub = source == SourceKind::qubit ? "qubit" : "decoy";
    return {"keyrate-" + sub + "/1", keyrate_columns(source), sim_required,
            [source](const RunConfig& cfg, std::uint64_t) { return keyrate_point(cfg, source); }};
  }
  if (name == "delta") {
    return {"delta/1",
            {"eta_det", "delta_eta", "dc_det", "delta_dc", "delta1_noswap", "delta2_noswap", "delta1_swap",
             "delta2_swap"},
            {},
            [](const RunConfig& cfg, std::uint64_t) { return delta_point(cfg); }};
  }
  if (name == "decoy-bounds") {
    return {"decoy-bounds/1",
            {"loss_db", "n", "outcome", "n_mu1", "n_mu2", "n_mu3", "b0_min", "b1_min", "b1_max"},
            sim_required,
            [](const RunConfig& cfg, std::uint64_t) { return decoy_bounds_point(cfg); }};
  }
  if (name == "postselect") {
    return {"postselect/1",
            {"preset", "n", "x", "log2_g", "dimension_penalty_bits", "penalty_bits", "key_length_iid", "key_length_lifted", "eps_tilde_log2",
             "eps_target_log2", "feasible", "eps_iid_log2", "eps_lift_log2", "log2_g_eps_tilde"},
            {"postselect.n"},
            [](const RunConfig& cfg, std::uint64_t) { return postselect_point(cfg); }};
  }
  if (name == "simulate") {
    return {"simulate/1",
            {"source", "loss_db", "n", "mode", "t", "trials", "mean_rate", "std_error", "accept_fraction", "l_fixed"},
            sim_required,
            [](const RunConfig& cfg, std::uint64_t seed) { return simulate_point(cfg, seed); }};
  }
  return {"authsim/1",
          {"protocol", "scenario", "runs", "honest_runs", "core_abort_runs", "both_abort_runs", "asymmetric_runs",
           "k_violations", "both_abort_violations", "honest_violations"},
          {},
          [](const RunConfig& cfg, std::uint64_t seed) { return authsim_point(cfg, seed); }};
}

std::string csv_cell(const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  }
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_float()) return format_number(v.get<double>());
  return "";
}

std::string sweep_value_text(const SweepAxis& axis, double v) {
  const KeySpec* spec = find_key(axis.key);
  if (spec->type == ValueType::integer) return std::to_string(std::llround(v));
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(std::ostream& os, const Command& cmd, const std::optional<SweepAxis>& axis,
               const std::vector<double>& values, const std::vector<PointResult>& results) {
  os << "# schema: " << cmd.schema << "\n";
  bool first = true;
  if (axis) {
    os << axis->key;
    first = false;
  }
  for (const auto& c : cmd.columns) {
    os << (first ? "" : ",") << c;
    first = false;
  }
  os << "\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    for (const auto& row : results[i].rows) {
      first = true;
      if (axis) {
        os << format_number(values[i]);
        first = false;
      }
      for (const auto& c : cmd.columns) {
        os << (first ? "" : ",") << csv_cell(row.at(c));
        first = false;
      }
      os << "\n";
    }
  }
}

void write_json(std::ostream& os, const Command& cmd, const std::optional<SweepAxis>& axis,
                const std::vector<double>& values, const std::vector<PointResult>& results) {
  if (cmd.schema == "authsim/1") {
    // JSON Lines: the traced run's events, then one summary line per point.
    for (std::size_t i = 0; i < results.size(); ++i) {
      for (const auto& line : results[i].trace_lines) os << line << "\n";
      json s = {{"schema", cmd.schema}};
      if (axis) s["sweep"] = {{"key", axis->key}, {"value", values[i]}};
      s["summary"] = results[i].detail;
      os << s.dump() << "\n";
    }
    return;
  }
  json doc = {{"schema", cmd.schema}};
  json points = json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    json p = json::object();
    if (axis) p["sweep"] = {{"key", axis->key}, {"value", values[i]}};
    p["result"] = results[i].detail;
    points.push_back(p);
  }
  doc["points"] = points;
  os << doc.dump(2) << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Finite-size key lengths and post-processing simulation for BB84 QKD", "qkdfs"};
  app.require_subcommand(1);
  std::string config_path, out_path, format = "csv", sweep_text;
  std::uint64_t seed = 1;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "configuration file");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--out", out_path, "output file (default stdout)");
    sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--sweep", sweep_text, "KEY=START:STOP:STEPS[:log]");
  };
  auto* keyrate = app.add_subcommand("keyrate", "key length for the expected honest observations");
  keyrate->require_subcommand(1);
  auto* kq = keyrate->add_subcommand("qubit", "qubit BB84");
  auto* kd = keyrate->add_subcommand("decoy", "decoy-state BB84");
  add_common(kq);
  add_common(kd);
  std::vector<std::pair<std::string, CLI::App*>> plain;
  for (const char* name : {"delta", "decoy-bounds", "postselect", "simulate", "authsim"}) {
    const char* help = std::string(name) == "delta"          ? "detector mismatch metrics"
                       : std::string(name) == "decoy-bounds" ? "photon-number bounds for expected counts"
                       : std::string(name) == "postselect"   ? "postselection lift"
                       : std::string(name) == "simulate"     ? "Monte Carlo expected key rate"
                                                             : "authentication post-processing runs";
    auto* sub = app.add_subcommand(name, help);
    add_common(sub);
    plain.emplace_back(name, sub);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return exit_config;
  }

  Command cmd;
  if (kq->parsed()) {
    cmd = make_command("keyrate", SourceKind::qubit);
  } else if (kd->parsed()) {
    cmd = make_command("keyrate", SourceKind::decoy);
  } else {
    for (const auto& [name, sub] : plain) {
      if (sub->parsed()) cmd = make_command(name, SourceKind::decoy);
    }
  }

  try {
    const RunConfig base = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
    std::optional<SweepAxis> axis;
    if (!sweep_text.empty()) axis = SweepAxis::parse(sweep_text);
    std::vector<std::string> missing;
    for (const auto& key : cmd.required) {
      if (!base.has(key) && !(axis && axis->key == key)) missing.push_back(key);
    }
    base.require(missing);

    const std::vector<double> values = axis ? axis->points() : std::vector<double>{0.0};
    std::vector<RunConfig> configs(values.size(), base);
    if (axis) {
      for (std::size_t i = 0; i < values.size(); ++i) configs[i].set(axis->key, sweep_value_text(*axis, values[i]));
    }
    const auto results =
        parallel_map(configs.size(), [&](std::size_t i) { return cmd.evaluate(configs[i], seed); });

    std::ostringstream buf;
    if (format == "json") {
      write_json(buf, cmd, axis, values, results);
    } else {
      write_csv(buf, cmd, axis, values, results);
    }
    if (out_path.empty()) {
      out << buf.str();
    } else {
      std::ofstream f(out_path, std::ios::binary);
      if (!f) throw ConfigError("cannot write output file '" + out_path + "'", 0, "");
      f << buf.str();
      if (!f) throw ConfigError("failed writing output file '" + out_path + "'", 0, "");
    }
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return exit_config;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
    return exit_domain;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return exit_domain;
  }
  return exit_ok;
}

}  // namespace qkdfs
