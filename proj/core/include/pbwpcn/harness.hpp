#pragma once

// In-process message-passing harness. The PB and each AP are separate agents
// that only exchange scalars over a synchronous round-based bus, which lets
// a run prove that both allocation protocols need nothing but local
// information. The PB never sees channel gains; APs never talk to each other.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "pbwpcn/auction.hpp"
#include "pbwpcn/coop.hpp"
#include "pbwpcn/model.hpp"

namespace pbwpcn {

enum class MessageKind { PriceAnnounce, AlphaReport, Bid, ElimReport, FinalAllocation, Quit };

std::string_view to_string(MessageKind kind);

using AgentId = std::uint32_t;
inline constexpr AgentId kPowerBeacon = 0;
inline constexpr AgentId kBroadcast = 0xFFFFFFFFu;

/// AP agents are numbered 1..N in configuration order.
constexpr AgentId ap_id(std::size_t pair_index) { return static_cast<AgentId>(pair_index + 1); }

struct Message {
  MessageKind kind = MessageKind::PriceAnnounce;
  AgentId sender = kPowerBeacon;
  AgentId receiver = kBroadcast;
  long round = 0;
  std::vector<double> payload;
};

/// Synchronous bus: messages sent during a round become visible only after
/// deliver(), which closes the round. The transcript is append-only and
/// ordered by (round, sender).
class MessageBus {
 public:
  explicit MessageBus(std::size_t n_aps);

  /// Queues a message for the current round. Throws ProtocolViolation for
  /// any AP-originated message not addressed to the PB.
  void send(Message msg);

  /// Round barrier.
  void deliver();

  /// Drains the delivered messages addressed to `id` (including broadcasts).
  std::vector<Message> take_inbox(AgentId id);

  long round() const { return round_; }
  std::size_t n_aps() const { return inboxes_.size() - 1; }
  const std::vector<Message>& transcript() const { return transcript_; }

 private:
  long round_ = 0;
  std::vector<Message> pending_;
  std::vector<std::vector<Message>> inboxes_;  // index = agent id
  std::vector<Message> transcript_;
};

/// What an AP agent is allowed to know.
struct ApView {
  AgentId id = 1;
  LinkParams link;
  PairChannel channel;
};

/// What the PB agent is allowed to know.
struct PbView {
  double e_b_tot = 0.0;
  std::size_t n_aps = 0;
};

struct ProtocolSetup {
  PbView pb;
  std::vector<ApView> aps;
};

ProtocolSetup make_setup(const SystemParams& params, std::span<const PairChannel> channels);

struct CoopProtocolResult {
  WaterfillResult result;
  std::vector<Message> transcript;
};

struct AuctionProtocolResult {
  AuctionOutcome outcome;
  std::vector<Message> transcript;
};

/// Water-filling search run as PB/AP message exchanges.
CoopProtocolResult run_coop_protocol(const ProtocolSetup& setup, const RootConfig& roots = {},
                                     const BisectionConfig& bisect = {});

/// Clinching auction run as PB/AP message exchanges.
AuctionProtocolResult run_auction_protocol(const ProtocolSetup& setup, const AuctionConfig& cfg,
                                           const RootConfig& roots = {});

struct LocalityReport {
  std::size_t ap_to_ap = 0;          ///< AP-originated messages not addressed to the PB
  std::size_t pb_foreign_input = 0;  ///< messages to the PB other than alpha/e_lim/bid reports
  bool ok() const { return ap_to_ap == 0 && pb_foreign_input == 0; }
};

LocalityReport audit_locality(std::span<const Message> transcript);

std::size_t count_messages(std::span<const Message> transcript, MessageKind kind);

/// One JSON object per line: round, kind, sender, receiver, payload.
void write_transcript_jsonl(std::ostream& os, std::span<const Message> transcript);

}  // namespace pbwpcn
