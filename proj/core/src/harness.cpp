#include "pbwpcn/harness.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>
#include <utility>

#include <fmt/core.h>
#include <json.hpp>

#include "pbwpcn/errors.hpp"
#include "pbwpcn/summation.hpp"

namespace pbwpcn {

namespace {

enum class Protocol { Coop, Auction };

bool is_ap(AgentId id, std::size_t n_aps) { return id >= 1 && id <= n_aps; }

class ApAgent {
 public:
  ApAgent(const ApView& view, Protocol protocol, const RootConfig& roots)
      : id_(view.id), protocol_(protocol), pair_(derive_pair(view.link, view.channel, roots)) {}

  AgentId id() const { return id_; }

  void report(MessageBus& bus) const {
    bus.send({MessageKind::AlphaReport, id_, kPowerBeacon, 0, {pair_.alpha}});
    bus.send({MessageKind::ElimReport, id_, kPowerBeacon, 0, {pair_.e_lim}});
  }

  void handle(MessageBus& bus) {
    for (const Message& m : bus.take_inbox(id_)) {
      switch (m.kind) {
        case MessageKind::PriceAnnounce: {
          const double price = m.payload.at(0);
          const double bid = protocol_ == Protocol::Coop ? respond_to_price(pair_, price, price == pair_.alpha)
                                                         : best_response(pair_, price).energy;
          bus.send({MessageKind::Bid, id_, kPowerBeacon, 0, {bid}});
          break;
        }
        case MessageKind::FinalAllocation:
          energy_ = m.payload.at(0);
          payment_ = m.payload.size() > 1 ? m.payload[1] : 0.0;
          break;
        case MessageKind::Quit:
          energy_ = 0.0;
          payment_ = 0.0;
          break;
        default:
          throw ProtocolViolation(fmt::format("AP {} received a {} message", id_, to_string(m.kind)));
      }
    }
  }

  double energy() const { return energy_; }
  double payment() const { return payment_; }
  double tau() const { return tau_of_e(pair_, energy_); }
  double value() const { return pair_.link.weight * throughput(pair_.link, pair_.channel, tau(), energy_); }

 private:
  AgentId id_;
  Protocol protocol_;
  PairDerived pair_;
  double energy_ = 0.0;
  double payment_ = 0.0;
};

std::vector<ApAgent> spawn(const ProtocolSetup& setup, Protocol protocol, const RootConfig& roots) {
  if (setup.aps.size() != setup.pb.n_aps) throw std::invalid_argument("setup: AP count mismatch");
  std::vector<ApAgent> agents;
  agents.reserve(setup.aps.size());
  for (std::size_t i = 0; i < setup.aps.size(); ++i) {
    if (setup.aps[i].id != ap_id(i)) throw std::invalid_argument("setup: AP ids must be 1..N in order");
    agents.emplace_back(setup.aps[i], protocol, roots);
  }
  return agents;
}

void step_aps(std::vector<ApAgent>& agents, MessageBus& bus) {
  for (ApAgent& a : agents) a.handle(bus);
}

// Reads one scalar per AP of the given kind from the PB inbox.
std::vector<double> collect(MessageBus& bus, MessageKind kind) {
  const std::size_t n = bus.n_aps();
  std::vector<double> values(n, 0.0);
  std::vector<bool> seen(n, false);
  for (const Message& m : bus.take_inbox(kPowerBeacon)) {
    if (m.kind != kind || !is_ap(m.sender, n) || m.payload.size() != 1) {
      throw ProtocolViolation(fmt::format("PB expected {} reports, got {} from {}", to_string(kind),
                                          to_string(m.kind), m.sender));
    }
    const std::size_t i = m.sender - 1;
    if (seen[i]) throw ProtocolViolation(fmt::format("AP {} reported twice", m.sender));
    seen[i] = true;
    values[i] = m.payload[0];
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw ProtocolViolation(fmt::format("missing {} report", to_string(kind)));
  }
  return values;
}

// One priced round: PB broadcasts, APs answer, PB reads the bids.
std::vector<double> price_round(MessageBus& bus, std::vector<ApAgent>& agents, double price) {
  bus.send({MessageKind::PriceAnnounce, kPowerBeacon, kBroadcast, 0, {price}});
  bus.deliver();
  step_aps(agents, bus);
  bus.deliver();
  return collect(bus, MessageKind::Bid);
}

}  // namespace

std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::PriceAnnounce: return "PriceAnnounce";
    case MessageKind::AlphaReport: return "AlphaReport";
    case MessageKind::Bid: return "Bid";
    case MessageKind::ElimReport: return "ElimReport";
    case MessageKind::FinalAllocation: return "FinalAllocation";
    case MessageKind::Quit: return "Quit";
  }
  return "?";
}

MessageBus::MessageBus(std::size_t n_aps) : inboxes_(n_aps + 1) {}

void MessageBus::send(Message msg) {
  const std::size_t n = n_aps();
  const bool sender_known = msg.sender == kPowerBeacon || is_ap(msg.sender, n);
  if (!sender_known) throw ProtocolViolation(fmt::format("unknown sender {}", msg.sender));
  if (msg.sender != kPowerBeacon && msg.receiver != kPowerBeacon) {
    throw ProtocolViolation(fmt::format("AP {} may only address the PB (tried {})", msg.sender, msg.receiver));
  }
  if (msg.receiver != kBroadcast && msg.receiver != kPowerBeacon && !is_ap(msg.receiver, n)) {
    throw ProtocolViolation(fmt::format("unknown receiver {}", msg.receiver));
  }
  msg.round = round_;
  pending_.push_back(std::move(msg));
}

void MessageBus::deliver() {
  std::stable_sort(pending_.begin(), pending_.end(),
                   [](const Message& a, const Message& b) { return a.sender < b.sender; });
  for (Message& m : pending_) {
    if (m.receiver == kBroadcast) {
      for (std::size_t id = 1; id < inboxes_.size(); ++id) inboxes_[id].push_back(m);
    } else {
      inboxes_[m.receiver].push_back(m);
    }
    transcript_.push_back(std::move(m));
  }
  pending_.clear();
  ++round_;
}

std::vector<Message> MessageBus::take_inbox(AgentId id) {
  if (id >= inboxes_.size()) throw std::out_of_range("take_inbox: unknown agent");
  return std::exchange(inboxes_[id], {});
}

ProtocolSetup make_setup(const SystemParams& params, std::span<const PairChannel> channels) {
  params.validate();
  if (channels.size() != params.n_pairs()) throw std::invalid_argument("make_setup: channel count mismatch");
  ProtocolSetup s;
  s.pb = {params.e_b_tot, channels.size()};
  for (std::size_t i = 0; i < channels.size(); ++i) s.aps.push_back({ap_id(i), params.link(i), channels[i]});
  return s;
}

CoopProtocolResult run_coop_protocol(const ProtocolSetup& setup, const RootConfig& roots,
                                     const BisectionConfig& bisect) {
  std::vector<ApAgent> agents = spawn(setup, Protocol::Coop, roots);
  const std::size_t n = agents.size();
  MessageBus bus(n);

  for (const ApAgent& a : agents) a.report(bus);
  bus.deliver();
  PriceSearchInputs in;
  in.e_b_tot = setup.pb.e_b_tot;
  in.alpha.assign(n, 0.0);
  in.e_lim.assign(n, 0.0);
  {
    std::vector<bool> got_alpha(n, false), got_elim(n, false);
    for (const Message& m : bus.take_inbox(kPowerBeacon)) {
      if (!is_ap(m.sender, n) || m.payload.size() != 1) throw ProtocolViolation("malformed setup report");
      const std::size_t i = m.sender - 1;
      if (m.kind == MessageKind::AlphaReport) {
        in.alpha[i] = m.payload[0];
        got_alpha[i] = true;
      } else if (m.kind == MessageKind::ElimReport) {
        in.e_lim[i] = m.payload[0];
        got_elim[i] = true;
      } else {
        throw ProtocolViolation(fmt::format("unexpected {} during setup", to_string(m.kind)));
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!got_alpha[i] || !got_elim[i]) throw ProtocolViolation(fmt::format("AP {} did not report", i + 1));
    }
  }

  PriceSearchOutcome search =
      waterfill_price_search(in, [&](double nu) { return price_round(bus, agents, nu); }, bisect);

  for (std::size_t i = 0; i < n; ++i) {
    bus.send({MessageKind::FinalAllocation, kPowerBeacon, ap_id(i), 0, {search.energy[i], search.nu}});
  }
  bus.deliver();
  step_aps(agents, bus);

  CoopProtocolResult out;
  WaterfillResult& r = out.result;
  r.nu = search.nu;
  r.e_star = std::move(search.energy);
  r.rounds = search.rounds;
  r.transcript = std::move(search.transcript);
  CompensatedSum welfare;
  for (const ApAgent& a : agents) {
    r.tau_star.push_back(a.tau());
    welfare += a.value();
  }
  r.welfare = welfare.value();
  out.transcript = bus.transcript();
  return out;
}

AuctionProtocolResult run_auction_protocol(const ProtocolSetup& setup, const AuctionConfig& cfg,
                                           const RootConfig& roots) {
  std::vector<ApAgent> agents = spawn(setup, Protocol::Auction, roots);
  const std::size_t n = agents.size();
  MessageBus bus(n);

  ClinchingResult pb = run_clinching_auction(setup.pb.e_b_tot, n, cfg, [&](long, double price) {
    return price_round(bus, agents, price);
  });

  if (pb.pb_quit) {
    bus.send({MessageKind::Quit, kPowerBeacon, kBroadcast, 0, {}});
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      bus.send({MessageKind::FinalAllocation, kPowerBeacon, ap_id(i), 0, {pb.allocation[i], pb.payment[i]}});
    }
  }
  bus.deliver();
  step_aps(agents, bus);

  AuctionProtocolResult out;
  AuctionOutcome& o = out.outcome;
  o.pb_quit = pb.pb_quit;
  o.final_price = pb.final_price;
  o.rounds_used = pb.rounds_used;
  o.transcript = std::move(pb.transcript);
  CompensatedSum pb_utility;
  CompensatedSum welfare;
  for (const ApAgent& a : agents) {
    o.e_final.push_back(a.energy());
    o.payment.push_back(a.payment());
    o.tau_final.push_back(a.tau());
    const double value = a.value();
    o.ap_utility.push_back(value - a.payment());
    pb_utility += a.payment();
    welfare += value;
  }
  o.pb_utility = pb_utility.value();
  o.welfare = welfare.value();
  out.transcript = bus.transcript();
  return out;
}

LocalityReport audit_locality(std::span<const Message> transcript) {
  LocalityReport rep;
  for (const Message& m : transcript) {
    if (m.sender != kPowerBeacon && m.receiver != kPowerBeacon) ++rep.ap_to_ap;
    if (m.receiver == kPowerBeacon && m.kind != MessageKind::AlphaReport && m.kind != MessageKind::ElimReport &&
        m.kind != MessageKind::Bid) {
      ++rep.pb_foreign_input;
    }
  }
  return rep;
}

std::size_t count_messages(std::span<const Message> transcript, MessageKind kind) {
  return static_cast<std::size_t>(
      std::count_if(transcript.begin(), transcript.end(), [kind](const Message& m) { return m.kind == kind; }));
}

void write_transcript_jsonl(std::ostream& os, std::span<const Message> transcript) {
  for (const Message& m : transcript) {
    nlohmann::ordered_json j;
    j["round"] = m.round;
    j["kind"] = to_string(m.kind);
    j["sender"] = m.sender;
    if (m.receiver == kBroadcast) {
      j["receiver"] = "*";
    } else {
      j["receiver"] = m.receiver;
    }
    j["payload"] = m.payload;
    os << j.dump() << '\n';
  }
}

}  // namespace pbwpcn
