#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qkdfs/hashing.hpp"
#include "qkdfs/parallel.hpp"
#include "qkdfs/rng.hpp"

namespace qkdfs {

using Bytes = std::vector<std::uint8_t>;

enum class Direction : std::uint8_t { a_to_b, b_to_a };
enum class DeliveryStatus : std::uint8_t { delivered, auth_abort };
enum class Phase : std::uint8_t { core, app, del_app };

std::string direction_name(Direction d);
std::string phase_name(Phase p);

struct ChannelTiming {
  double latency = 1.0;
  double timeout = 1000.0;
};

/// One send in the schedule handed to the channel.
struct SendEvent {
  Direction direction = Direction::a_to_b;
  std::int64_t sender_index = 0;
  double t_sent = 0.0;
  Bytes payload;
};

/// One receive slot: the receiver's i-th message paired with the sender's i-th send.
struct TranscriptEvent {
  Phase phase = Phase::core;
  Direction direction = Direction::a_to_b;
  std::int64_t sender_index = 0;
  std::int64_t receiver_index = 0;
  Bytes payload_sent;
  std::optional<Bytes> payload_received;  // nullopt = AUTH_ABORT
  double t_sent = 0.0;
  double t_received = 0.0;
  DeliveryStatus status = DeliveryStatus::delivered;
};

/// Frozen JSONL record: phase, direction ("A->B"/"B->A"), sender_index,
/// receiver_index, payload_sent (hex), payload_received (hex or "AUTH_ABORT"),
/// t_sent, t_received, status ("delivered"/"auth_abort").
std::string to_json_line(const TranscriptEvent& e);

enum class ActionKind : std::uint8_t { pass, delay, drop, tamper, inject_early };
std::string action_name(ActionKind k);

struct Action {
  ActionKind kind = ActionKind::pass;
  double delay = 0.0;  // extra latency for ActionKind::delay
};

struct MessageKey {
  Phase phase = Phase::core;
  Direction direction = Direction::a_to_b;
  std::int64_t sender_index = 0;
  auto operator<=>(const MessageKey&) const = default;
};

/// Per-message adversary actions. Explicit overrides win; otherwise a seeded
/// policy draws each action from (seed, message key), so the outcome does not
/// depend on evaluation order.
class AdversaryPolicy {
 public:
  static AdversaryPolicy honest();
  /// Attacks each message with probability p_attack, uniformly over the four
  /// non-pass actions.
  static AdversaryPolicy random(std::uint64_t seed, double p_attack);

  AdversaryPolicy& set(const MessageKey& key, Action action);
  Action action_for(const MessageKey& key) const;
  bool is_honest() const;

 private:
  std::map<MessageKey, Action> overrides_;
  std::optional<std::uint64_t> seed_;
  double p_attack_ = 0.0;
};

enum class ChannelMode : std::uint8_t { authenticated, unauthenticated };

/// Delivers a schedule through the adversary. In authenticated mode a receive
/// slot is auth_abort whenever it arrives before its paired send, carries other
/// content, or was dropped, tampered or blocked past the timeout. In
/// unauthenticated mode only timeouts abort.
std::vector<TranscriptEvent> run_channel(const std::vector<SendEvent>& schedule, const AdversaryPolicy& policy,
                                         Phase phase = Phase::core, ChannelMode mode = ChannelMode::authenticated,
                                         const ChannelTiming& timing = {});

/// Alternating A->B / B->A sends spaced by `spacing`, random payloads.
std::vector<SendEvent> make_core_schedule(std::size_t messages, std::size_t payload_bytes, Rng& rng,
                                          double spacing = 10.0);

enum class PartyPhase : std::uint8_t { checked_core, sent_decision, finished };

struct PartyState {
  std::optional<BitString> key;  // nullopt = bottom
  bool received_aborts = false;
  PartyPhase phase = PartyPhase::checked_core;
  std::size_t length() const { return key ? key->size() : 0; }
};

struct AuthOutcome {
  std::size_t l_a = 0;
  std::size_t l_b = 0;
  PartyState alice;
  PartyState bob;
  std::vector<TranscriptEvent> events;
};

std::optional<BitString> key_or_bottom(const BitString& k);

/// Authentication post-processing after a core run over the authenticated channel.
AuthOutcome run_app(const std::optional<BitString>& k_a, const std::optional<BitString>& k_b,
                    const std::vector<TranscriptEvent>& core_events, const AdversaryPolicy& policy,
                    const ChannelTiming& timing = {});

struct TimedMessage {
  std::optional<Bytes> payload;
  double t = 0.0;
};

/// What one party records about its own sends and receives, in its own order.
struct PartyTranscript {
  std::vector<TimedMessage> sent;
  std::vector<TimedMessage> received;
};

PartyTranscript alice_transcript(const std::vector<TranscriptEvent>& core_events);
PartyTranscript bob_transcript(const std::vector<TranscriptEvent>& core_events);
Bytes serialize(const PartyTranscript& t);

/// Bob's check: every A->B and B->A message was received no earlier than sent
/// and with identical content.
bool verify_transcript(const PartyTranscript& t_a, const PartyTranscript& t_b);

/// Delayed authentication: the core ran unauthenticated and Alice sends her
/// transcript over one authenticated use of the channel.
AuthOutcome run_del_app(const std::optional<BitString>& k_a, const std::optional<BitString>& k_b,
                        const PartyTranscript& t_a, const PartyTranscript& t_b, const AdversaryPolicy& policy,
                        const ChannelTiming& timing = {});

/// (l,l), (l,0) or (0,l).
bool in_allowed_set(std::size_t l_a, std::size_t l_b);

enum class AuthProtocol : std::uint8_t { app, del_app };

struct CampaignConfig {
  AuthProtocol protocol = AuthProtocol::app;
  std::size_t runs = 10000;
  std::size_t messages = 12;
  std::size_t payload_bytes = 8;
  std::size_t key_bits = 256;
  double p_attack = 0.1;
  ChannelTiming timing;
};

struct RunRecord {
  bool core_abort = false;  // any core auth_abort (APP) or core tampering (del-APP)
  bool honest = false;      // policy touched no message
  std::size_t l_a = 0;
  std::size_t l_b = 0;
};

struct CampaignSummary {
  std::size_t runs = 0;
  std::size_t honest_runs = 0;
  std::size_t core_abort_runs = 0;
  std::size_t both_abort_runs = 0;
  std::size_t asymmetric_runs = 0;
  std::size_t k_violations = 0;
  std::size_t both_abort_violations = 0;
  std::size_t honest_violations = 0;
};

/// One randomized run; run r uses the stream derived from (seed, r).
RunRecord run_one(const CampaignConfig& cfg, std::uint64_t seed, std::size_t r,
                  std::vector<TranscriptEvent>* trace = nullptr);
/// One run with both parties holding `key` under a caller-supplied policy.
RunRecord run_with_policy(const CampaignConfig& cfg, const std::vector<SendEvent>& schedule,
                          const std::optional<BitString>& key, const AdversaryPolicy& policy,
                          std::vector<TranscriptEvent>* trace = nullptr);
CampaignSummary summarize(const std::vector<RunRecord>& records, std::size_t key_bits);
CampaignSummary run_campaign(const CampaignConfig& cfg, std::uint64_t seed, Execution exec = Execution::openmp);

}  // namespace qkdfs
