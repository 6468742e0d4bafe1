#include "qkdfs/authsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "qkdfs/error.hpp"

namespace qkdfs {

namespace {

const Bytes kAccept = {'a', 'c', 'c', 'e', 'p', 't'};
const Bytes kAbort = {'a', 'b', 'o', 'r', 't'};

std::string hex(const Bytes& b) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * b.size());
  for (auto c : b) {
    out.push_back(digits[c >> 4]);
    out.push_back(digits[c & 0xf]);
  }
  return out;
}

double unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1p-53; }

Bytes forged(const Bytes& b) {
  Bytes out = b;
  if (out.empty()) {
    out.push_back(0x01);
  } else {
    out[0] ^= 0xff;
  }
  return out;
}

struct Arrival {
  double t = 0.0;
  std::optional<Bytes> content;
  bool forced_abort = false;
  std::size_t pos = 0;
};

Arrival deliver(const SendEvent& s, const Action& a, ChannelMode mode, const ChannelTiming& timing) {
  Arrival out;
  const bool auth = mode == ChannelMode::authenticated;
  switch (a.kind) {
    case ActionKind::pass:
      out.t = s.t_sent + timing.latency;
      out.content = s.payload;
      break;
    case ActionKind::delay:
      if (!(a.delay >= 0.0)) throw DomainError("adversary delay must be >= 0");
      if (timing.latency + a.delay > timing.timeout) {
        out.t = s.t_sent + timing.timeout;
        out.forced_abort = true;
      } else {
        out.t = s.t_sent + timing.latency + a.delay;
        out.content = s.payload;
      }
      break;
    case ActionKind::drop:
      out.t = s.t_sent + timing.timeout;
      out.forced_abort = true;
      break;
    case ActionKind::tamper:
      out.t = s.t_sent + timing.latency;
      out.content = forged(s.payload);
      out.forced_abort = auth;
      break;
    case ActionKind::inject_early:
      out.t = s.t_sent - timing.latency;
      out.content = forged(s.payload);
      break;
  }
  return out;
}

TranscriptEvent single(const SendEvent& s, const AdversaryPolicy& policy, Phase phase,
                       const ChannelTiming& timing) {
  return run_channel({s}, policy, phase, ChannelMode::authenticated, timing).front();
}

bool is_accept(const TranscriptEvent& e) {
  return e.status == DeliveryStatus::delivered && e.payload_received && *e.payload_received == kAccept;
}

double last_time(const std::vector<TranscriptEvent>& events) {
  double t = 0.0;
  for (const auto& e : events) t = std::max({t, e.t_sent, e.t_received});
  return t;
}

double last_time(const PartyTranscript& tr) {
  double t = 0.0;
  for (const auto& m : tr.sent) t = std::max(t, m.t);
  for (const auto& m : tr.received) t = std::max(t, m.t);
  return t;
}

}  // namespace

std::string direction_name(Direction d) { return d == Direction::a_to_b ? "A->B" : "B->A"; }

std::string phase_name(Phase p) {
  switch (p) {
    case Phase::core:
      return "core";
    case Phase::app:
      return "app";
    case Phase::del_app:
      return "del_app";
  }
  return "?";
}

std::string action_name(ActionKind k) {
  switch (k) {
    case ActionKind::pass:
      return "pass";
    case ActionKind::delay:
      return "delay";
    case ActionKind::drop:
      return "drop";
    case ActionKind::tamper:
      return "tamper";
    case ActionKind::inject_early:
      return "inject_early";
  }
  return "?";
}

std::string to_json_line(const TranscriptEvent& e) {
  nlohmann::ordered_json j;
  j["phase"] = phase_name(e.phase);
  j["direction"] = direction_name(e.direction);
  j["sender_index"] = e.sender_index;
  j["receiver_index"] = e.receiver_index;
  j["payload_sent"] = hex(e.payload_sent);
  j["payload_received"] = e.payload_received ? hex(*e.payload_received) : std::string("AUTH_ABORT");
  j["t_sent"] = e.t_sent;
  j["t_received"] = e.t_received;
  j["status"] = e.status == DeliveryStatus::delivered ? "delivered" : "auth_abort";
  return j.dump();
}

AdversaryPolicy AdversaryPolicy::honest() { return AdversaryPolicy(); }

AdversaryPolicy AdversaryPolicy::random(std::uint64_t seed, double p_attack) {
  if (!(p_attack >= 0.0 && p_attack <= 1.0)) throw DomainError("adversary p_attack must lie in [0,1]");
  AdversaryPolicy p;
  p.seed_ = seed;
  p.p_attack_ = p_attack;
  return p;
}

AdversaryPolicy& AdversaryPolicy::set(const MessageKey& key, Action action) {
  overrides_[key] = action;
  return *this;
}

Action AdversaryPolicy::action_for(const MessageKey& key) const {
  if (auto it = overrides_.find(key); it != overrides_.end()) return it->second;
  if (!seed_ || p_attack_ == 0.0) return {};
  const std::uint64_t stream = static_cast<std::uint64_t>(key.phase) * 2 + static_cast<std::uint64_t>(key.direction);
  Rng rng(derive_seed(derive_seed(*seed_, stream), static_cast<std::uint64_t>(key.sender_index)));
  if (unit(rng) >= p_attack_) return {};
  Action a;
  a.kind = static_cast<ActionKind>(1 + rng() % 4);
  if (a.kind == ActionKind::delay) {
    // Mostly short delays (which may reorder), occasionally past the timeout.
    a.delay = unit(rng) < 0.8 ? 30.0 * unit(rng) : 2000.0 * unit(rng);
  }
  return a;
}

bool AdversaryPolicy::is_honest() const {
  const bool overrides_pass = std::all_of(overrides_.begin(), overrides_.end(),
                                          [](const auto& kv) { return kv.second.kind == ActionKind::pass; });
  return overrides_pass && (!seed_ || p_attack_ == 0.0);
}

std::vector<TranscriptEvent> run_channel(const std::vector<SendEvent>& schedule, const AdversaryPolicy& policy,
                                         Phase phase, ChannelMode mode, const ChannelTiming& timing) {
  if (!(timing.latency > 0.0) || !(timing.timeout > timing.latency)) {
    throw DomainError("channel timing needs 0 < latency < timeout");
  }
  std::vector<TranscriptEvent> events;
  for (Direction dir : {Direction::a_to_b, Direction::b_to_a}) {
    std::vector<const SendEvent*> sends;
    for (const auto& s : schedule) {
      if (s.direction != dir) continue;
      if (!std::isfinite(s.t_sent)) throw DomainError("schedule: send time must be finite");
      if (!sends.empty()) {
        if (s.sender_index <= sends.back()->sender_index) {
          throw DomainError("schedule: sender indices must increase strictly per direction");
        }
        if (s.t_sent < sends.back()->t_sent) throw DomainError("schedule: send times must not decrease");
      }
      if (s.sender_index < 1) throw DomainError("schedule: sender indices start at 1");
      sends.push_back(&s);
    }
    std::vector<Arrival> arrivals;
    for (std::size_t p = 0; p < sends.size(); ++p) {
      Arrival a = deliver(*sends[p], policy.action_for({phase, dir, sends[p]->sender_index}), mode, timing);
      a.pos = p;
      arrivals.push_back(std::move(a));
    }
    std::stable_sort(arrivals.begin(), arrivals.end(), [](const Arrival& x, const Arrival& y) { return x.t < y.t; });
    for (std::size_t i = 0; i < sends.size(); ++i) {
      const SendEvent& s = *sends[i];
      const Arrival& a = arrivals[i];
      TranscriptEvent e;
      e.phase = phase;
      e.direction = dir;
      e.sender_index = s.sender_index;
      e.receiver_index = static_cast<std::int64_t>(i + 1);
      e.payload_sent = s.payload;
      e.t_sent = s.t_sent;
      e.t_received = a.t;
      bool abort = a.forced_abort || !a.content;
      if (mode == ChannelMode::authenticated) abort = abort || a.t < s.t_sent || *a.content != s.payload;
      if (abort) {
        e.status = DeliveryStatus::auth_abort;
      } else {
        e.payload_received = a.content;
      }
      events.push_back(std::move(e));
    }
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const TranscriptEvent& x, const TranscriptEvent& y) { return x.t_received < y.t_received; });
  return events;
}

std::vector<SendEvent> make_core_schedule(std::size_t messages, std::size_t payload_bytes, Rng& rng,
                                          double spacing) {
  std::vector<SendEvent> out;
  std::int64_t next[2] = {1, 1};
  for (std::size_t k = 0; k < messages; ++k) {
    SendEvent s;
    s.direction = k % 2 == 0 ? Direction::a_to_b : Direction::b_to_a;
    s.sender_index = next[k % 2]++;
    s.t_sent = spacing * static_cast<double>(k);
    s.payload.resize(payload_bytes);
    for (auto& b : s.payload) b = static_cast<std::uint8_t>(rng() & 0xff);
    out.push_back(std::move(s));
  }
  return out;
}

std::optional<BitString> key_or_bottom(const BitString& k) {
  if (k.empty()) return std::nullopt;
  return k;
}

AuthOutcome run_app(const std::optional<BitString>& k_a, const std::optional<BitString>& k_b,
                    const std::vector<TranscriptEvent>& core_events, const AdversaryPolicy& policy,
                    const ChannelTiming& timing) {
  AuthOutcome out;
  out.alice.key = k_a;
  out.bob.key = k_b;
  std::int64_t sent_ab = 0;
  std::int64_t sent_ba = 0;
  for (const auto& e : core_events) {
    const bool abort = e.status == DeliveryStatus::auth_abort;
    if (e.direction == Direction::b_to_a) {
      out.alice.received_aborts |= abort;
      sent_ba = std::max(sent_ba, e.sender_index);
    } else {
      out.bob.received_aborts |= abort;
      sent_ab = std::max(sent_ab, e.sender_index);
    }
  }
  // APP1, APP2
  if (out.alice.received_aborts) out.alice.key.reset();
  if (out.bob.received_aborts) out.bob.key.reset();

  // APP3: Bob's preliminary decision.
  SendEvent bob_msg;
  bob_msg.direction = Direction::b_to_a;
  bob_msg.sender_index = sent_ba + 1;
  bob_msg.t_sent = last_time(core_events) + timing.latency;
  bob_msg.payload = out.bob.length() > 0 ? kAccept : kAbort;
  out.bob.phase = PartyPhase::sent_decision;
  const TranscriptEvent e3 = single(bob_msg, policy, Phase::app, timing);
  out.events.push_back(e3);
  out.alice.received_aborts |= e3.status == DeliveryStatus::auth_abort;

  // APP4: Alice's final decision, sent once she has Bob's message.
  const bool alice_accepts = out.alice.length() > 0 && is_accept(e3);
  SendEvent alice_msg;
  alice_msg.direction = Direction::a_to_b;
  alice_msg.sender_index = sent_ab + 1;
  alice_msg.t_sent = std::max(e3.t_received, e3.t_sent) + timing.latency;
  alice_msg.payload = alice_accepts ? kAccept : kAbort;
  out.alice.phase = PartyPhase::sent_decision;
  const TranscriptEvent e4 = single(alice_msg, policy, Phase::app, timing);
  out.events.push_back(e4);
  out.bob.received_aborts |= e4.status == DeliveryStatus::auth_abort;

  // APP5, APP6
  if (!alice_accepts) out.alice.key.reset();
  if (!is_accept(e4)) out.bob.key.reset();
  out.alice.phase = PartyPhase::finished;
  out.bob.phase = PartyPhase::finished;
  out.l_a = out.alice.length();
  out.l_b = out.bob.length();
  return out;
}

PartyTranscript alice_transcript(const std::vector<TranscriptEvent>& core_events) {
  std::vector<const TranscriptEvent*> sent, received;
  for (const auto& e : core_events) (e.direction == Direction::a_to_b ? sent : received).push_back(&e);
  std::sort(sent.begin(), sent.end(), [](auto* x, auto* y) { return x->sender_index < y->sender_index; });
  std::sort(received.begin(), received.end(), [](auto* x, auto* y) { return x->receiver_index < y->receiver_index; });
  PartyTranscript t;
  for (auto* e : sent) t.sent.push_back({e->payload_sent, e->t_sent});
  for (auto* e : received) t.received.push_back({e->payload_received, e->t_received});
  return t;
}

PartyTranscript bob_transcript(const std::vector<TranscriptEvent>& core_events) {
  std::vector<const TranscriptEvent*> sent, received;
  for (const auto& e : core_events) (e.direction == Direction::b_to_a ? sent : received).push_back(&e);
  std::sort(sent.begin(), sent.end(), [](auto* x, auto* y) { return x->sender_index < y->sender_index; });
  std::sort(received.begin(), received.end(), [](auto* x, auto* y) { return x->receiver_index < y->receiver_index; });
  PartyTranscript t;
  for (auto* e : sent) t.sent.push_back({e->payload_sent, e->t_sent});
  for (auto* e : received) t.received.push_back({e->payload_received, e->t_received});
  return t;
}

Bytes serialize(const PartyTranscript& t) {
  std::ostringstream os;
  auto put = [&os](char tag, const TimedMessage& m) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", m.t);
    os << tag << ' ' << buf << ' ' << (m.payload ? hex(*m.payload) : std::string("AUTH_ABORT")) << '\n';
  };
  for (const auto& m : t.sent) put('S', m);
  for (const auto& m : t.received) put('R', m);
  const std::string s = os.str();
  return Bytes(s.begin(), s.end());
}

bool verify_transcript(const PartyTranscript& t_a, const PartyTranscript& t_b) {
  auto matches = [](const std::vector<TimedMessage>& sent, const std::vector<TimedMessage>& received) {
    if (sent.size() != received.size()) return false;
    for (std::size_t i = 0; i < sent.size(); ++i) {
      if (!(sent[i].t <= received[i].t)) return false;
      if (!sent[i].payload || !received[i].payload || *sent[i].payload != *received[i].payload) return false;
    }
    return true;
  };
  return matches(t_a.sent, t_b.received) && matches(t_b.sent, t_a.received);
}

AuthOutcome run_del_app(const std::optional<BitString>& k_a, const std::optional<BitString>& k_b,
                        const PartyTranscript& t_a, const PartyTranscript& t_b, const AdversaryPolicy& policy,
                        const ChannelTiming& timing) {
  AuthOutcome out;
  out.alice.key = k_a;
  out.bob.key = k_b;

  // dAPP1
  SendEvent alice_msg;
  alice_msg.direction = Direction::a_to_b;
  alice_msg.sender_index = static_cast<std::int64_t>(t_a.sent.size()) + 1;
  alice_msg.t_sent = std::max(last_time(t_a), last_time(t_b)) + timing.latency;
  alice_msg.payload = serialize(t_a);
  out.alice.phase = PartyPhase::sent_decision;
  const TranscriptEvent e1 = single(alice_msg, policy, Phase::del_app, timing);
  out.events.push_back(e1);
  out.bob.received_aborts = e1.status == DeliveryStatus::auth_abort;

  // dAPP2: a delivered message on this channel is Alice's transcript verbatim.
  const bool bob_accepts = !out.bob.received_aborts && verify_transcript(t_a, t_b);
  SendEvent bob_msg;
  bob_msg.direction = Direction::b_to_a;
  bob_msg.sender_index = static_cast<std::int64_t>(t_b.sent.size()) + 1;
  bob_msg.t_sent = std::max(e1.t_received, e1.t_sent) + timing.latency;
  bob_msg.payload = bob_accepts ? kAccept : kAbort;
  out.bob.phase = PartyPhase::sent_decision;
  const TranscriptEvent e2 = single(bob_msg, policy, Phase::del_app, timing);
  out.events.push_back(e2);
  out.alice.received_aborts = e2.status == DeliveryStatus::auth_abort;

  // dAPP3, dAPP4
  if (!bob_accepts) out.bob.key.reset();
  if (!is_accept(e2)) out.alice.key.reset();
  out.alice.phase = PartyPhase::finished;
  out.bob.phase = PartyPhase::finished;
  out.l_a = out.alice.length();
  out.l_b = out.bob.length();
  return out;
}

bool in_allowed_set(std::size_t l_a, std::size_t l_b) { return l_a == l_b || l_a == 0 || l_b == 0; }

RunRecord run_one(const CampaignConfig& cfg, std::uint64_t seed, std::size_t r,
                  std::vector<TranscriptEvent>* trace) {
  Rng rng = make_stream(seed, r);
  const auto schedule = make_core_schedule(cfg.messages, cfg.payload_bytes, rng);
  const auto key = key_or_bottom(BitString::random(cfg.key_bits, rng));
  return run_with_policy(cfg, schedule, key, AdversaryPolicy::random(rng(), cfg.p_attack), trace);
}

RunRecord run_with_policy(const CampaignConfig& cfg, const std::vector<SendEvent>& schedule,
                          const std::optional<BitString>& key, const AdversaryPolicy& policy,
                          std::vector<TranscriptEvent>* trace) {
  RunRecord rec;
  AuthOutcome out;
  std::vector<TranscriptEvent> core;
  if (cfg.protocol == AuthProtocol::app) {
    core = run_channel(schedule, policy, Phase::core, ChannelMode::authenticated, cfg.timing);
    rec.core_abort = std::any_of(core.begin(), core.end(),
                                 [](const auto& e) { return e.status == DeliveryStatus::auth_abort; });
    out = run_app(key, key, core, policy, cfg.timing);
  } else {
    core = run_channel(schedule, policy, Phase::core, ChannelMode::unauthenticated, cfg.timing);
    const PartyTranscript t_a = alice_transcript(core);
    const PartyTranscript t_b = bob_transcript(core);
    rec.core_abort = !verify_transcript(t_a, t_b);
    out = run_del_app(key, key, t_a, t_b, policy, cfg.timing);
  }
  rec.honest = !rec.core_abort && std::all_of(out.events.begin(), out.events.end(), [](const auto& e) {
    return e.status == DeliveryStatus::delivered;
  });
  rec.l_a = out.l_a;
  rec.l_b = out.l_b;
  if (trace) {
    *trace = std::move(core);
    trace->insert(trace->end(), out.events.begin(), out.events.end());
  }
  return rec;
}

CampaignSummary run_campaign(const CampaignConfig& cfg, std::uint64_t seed, Execution exec) {
  const auto records = parallel_map(
      cfg.runs, [&](std::size_t r) { return run_one(cfg, seed, r); }, exec);
  return summarize(records, cfg.key_bits);
}

CampaignSummary summarize(const std::vector<RunRecord>& records, std::size_t key_bits) {
  CampaignSummary s;
  s.runs = records.size();
  for (const auto& rec : records) {
    s.honest_runs += rec.honest;
    s.core_abort_runs += rec.core_abort;
    s.both_abort_runs += rec.l_a == 0 && rec.l_b == 0;
    s.asymmetric_runs += (rec.l_a == 0) != (rec.l_b == 0);
    s.k_violations += !in_allowed_set(rec.l_a, rec.l_b);
    s.both_abort_violations += rec.core_abort && (rec.l_a != 0 || rec.l_b != 0);
    s.honest_violations += rec.honest && !(rec.l_a == key_bits && rec.l_b == key_bits);
  }
  return s;
}

}  // namespace qkdfs
