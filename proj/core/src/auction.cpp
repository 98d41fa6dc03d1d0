#include "pbwpcn/auction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <fmt/core.h>
#include <json.hpp>

#include "pbwpcn/errors.hpp"
#include "pbwpcn/summation.hpp"

namespace pbwpcn {

namespace {

// Rounding slack when checking that clinches never decrease.
constexpr double kMonotoneTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

void AuctionConfig::validate() const {
  if (!(reserve_price >= 0.0)) throw std::invalid_argument("reserve_price must be >= 0");
  if (!(price_step > 0.0)) throw std::invalid_argument("price_step must be > 0");
  if (max_rounds < 1) throw std::invalid_argument("max_rounds must be >= 1");
}

BidResponse best_response(const PairDerived& d, double mu) {
  if (!(mu >= 0.0)) throw DomainError(fmt::format("best_response: price {} must be >= 0", mu));
  if (d.degenerate() || mu >= d.alpha) return {ap_only_tau(d), 0.0};
  const double e = demand_at_price(d, mu);
  return {e / d.link.p_pb, e};
}

double cumulative_clinch(double e_b_tot, std::span<const double> bids, std::size_t i) {
  if (i >= bids.size()) throw std::out_of_range("cumulative_clinch: bidder index out of range");
  CompensatedSum others;
  for (std::size_t j = 0; j < bids.size(); ++j) {
    if (bids[j] < 0.0) throw std::invalid_argument("cumulative_clinch: negative bid");
    if (j != i) others += bids[j];
  }
  return std::max(0.0, e_b_tot - others.value());
}

std::vector<double> final_clinch_prr(double e_b_tot, std::span<const double> bids_final,
                                     std::span<const double> bids_prev) {
  const std::size_t n = bids_final.size();
  if (bids_prev.size() != n) throw std::invalid_argument("final_clinch_prr: bid vectors differ in length");
  for (std::size_t i = 0; i < n; ++i) {
    if (bids_final[i] < 0.0 || bids_final[i] > bids_prev[i]) {
      throw std::invalid_argument(fmt::format("final_clinch_prr: bidder {} raised its bid", i));
    }
  }
  const double final_sum = compensated_sum(bids_final);
  const double prev_sum = compensated_sum(bids_prev);
  if (!(final_sum <= e_b_tot && e_b_tot < prev_sum)) {
    throw std::invalid_argument(fmt::format(
        "final_clinch_prr: supply {} not crossed (demand {} -> {})", e_b_tot, prev_sum, final_sum));
  }

  std::vector<double> c(bids_final.begin(), bids_final.end());
  const double leftover = e_b_tot - final_sum;
  if (leftover == 0.0) return c;

  const double drop = prev_sum - final_sum;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    order[i] = i;
    c[i] += (bids_prev[i] - bids_final[i]) / drop * leftover;
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return bids_prev[a] - bids_final[a] > bids_prev[b] - bids_final[b];
  });
  // Absorb the rounding residue so the clinches add up to the budget: one
  // full correction on the largest share, then single-ulp steps. The residue
  // can be finer than that clinch's ulp, and a rounding tie can pin the sum
  // to even values, so the walk moves on to smaller shares if needed.
  auto nudge = [&](std::size_t i, double target) {
    const double clamped = std::clamp(target, bids_final[i], bids_prev[i]);
    const bool moved = clamped != c[i];
    c[i] = clamped;
    return moved;
  };
  double residue = e_b_tot - compensated_sum(c);
  if (residue != 0.0) nudge(order[0], c[order[0]] + residue);
  for (std::size_t i : order) {
    for (int step = 0; step < 8; ++step) {
      residue = e_b_tot - compensated_sum(c);
      if (residue == 0.0) return c;
      if (!nudge(i, std::nextafter(c[i], residue > 0.0 ? kInf : -kInf))) break;
    }
  }
  return c;
}

std::vector<double> payment(std::span<const double> prices, std::span<const std::vector<double>> clinches) {
  if (prices.size() != clinches.size() || prices.empty()) {
    throw std::invalid_argument("payment: need one clinch vector per price, at least one round");
  }
  const std::size_t n = clinches.front().size();
  std::vector<CompensatedSum> acc(n);
  for (std::size_t t = 0; t < prices.size(); ++t) {
    if (clinches[t].size() != n) throw std::invalid_argument("payment: ragged clinch history");
    for (std::size_t i = 0; i < n; ++i) {
      double increment = t == 0 ? clinches[0][i] : clinches[t][i] - clinches[t - 1][i];
      if (increment < 0.0) {
        if (increment < -kMonotoneTol * std::max(1.0, clinches[t][i])) {
          throw std::invalid_argument(fmt::format("payment: clinch of bidder {} fell in round {}", i, t));
        }
        increment = 0.0;
      }
      acc[i] += prices[t] * increment;
    }
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = acc[i].value();
  return out;
}

void write_transcript_jsonl(std::ostream& os, std::span<const AuctionRound> rounds) {
  for (const AuctionRound& r : rounds) {
    nlohmann::ordered_json j;
    j["round"] = r.round;
    j["price"] = r.price;
    j["bids"] = r.bids;
    j["clinch"] = r.clinch;
    os << j.dump() << '\n';
  }
}

ClinchingResult run_clinching_auction(double e_b_tot, std::size_t n_bidders, const AuctionConfig& cfg,
                                      const BidOracle& oracle) {
  cfg.validate();
  if (!(e_b_tot >= 0.0)) throw std::invalid_argument("e_b_tot must be >= 0");

  ClinchingResult res;
  auto price_at = [&](long t) { return cfg.reserve_price + double(t) * cfg.price_step; };
  auto gather = [&](long t) {
    std::vector<double> bids = oracle(t, price_at(t));
    if (bids.size() != n_bidders) throw ProtocolViolation("bid count does not match bidder count");
    return bids;
  };
  auto clinch_all = [&](const std::vector<double>& bids) {
    std::vector<double> c(n_bidders);
    for (std::size_t i = 0; i < n_bidders; ++i) c[i] = cumulative_clinch(e_b_tot, bids, i);
    return c;
  };

  std::vector<double> bids = gather(0);
  if (compensated_sum(bids) <= e_b_tot) {
    res.pb_quit = true;
    res.allocation.assign(n_bidders, 0.0);
    res.payment.assign(n_bidders, 0.0);
    res.final_price = price_at(0);
    res.rounds_used = 1;
    res.transcript.push_back({0, price_at(0), bids, std::vector<double>(n_bidders, 0.0)});
    return res;
  }
  res.transcript.push_back({0, price_at(0), bids, clinch_all(bids)});

  for (long t = 1;; ++t) {
    if (t > cfg.max_rounds) {
      throw ConvergenceError(fmt::format("auction exceeded {} rounds at price {}", cfg.max_rounds, price_at(t)));
    }
    std::vector<double> next = gather(t);
    for (std::size_t i = 0; i < n_bidders; ++i) {
      if (next[i] > bids[i]) {
        throw ProtocolViolation(fmt::format("bidder {} raised its demand in round {}", i, t));
      }
    }
    const double demand = compensated_sum(next);
    if (demand > e_b_tot) {
      res.transcript.push_back({t, price_at(t), next, clinch_all(next)});
      bids = std::move(next);
      continue;
    }
    std::vector<double> closing = demand == e_b_tot ? next : final_clinch_prr(e_b_tot, next, bids);
    res.transcript.push_back({t, price_at(t), next, closing});
    res.allocation = std::move(closing);
    res.final_price = price_at(t);
    res.rounds_used = t + 1;
    break;
  }

  std::vector<double> prices;
  std::vector<std::vector<double>> history;
  prices.reserve(res.transcript.size());
  history.reserve(res.transcript.size());
  for (const AuctionRound& r : res.transcript) {
    prices.push_back(r.price);
    history.push_back(r.clinch);
  }
  res.payment = payment(prices, history);
  return res;
}

AuctionOutcome settle_auction(std::span<const PairDerived> pairs, ClinchingResult result) {
  const std::size_t n = pairs.size();
  if (result.allocation.size() != n || result.payment.size() != n) {
    throw std::invalid_argument("settle_auction: result does not match pair count");
  }
  AuctionOutcome out;
  out.pb_quit = result.pb_quit;
  out.final_price = result.final_price;
  out.rounds_used = result.rounds_used;
  out.e_final = std::move(result.allocation);
  out.payment = std::move(result.payment);
  out.transcript = std::move(result.transcript);
  out.tau_final.resize(n);
  out.ap_utility.resize(n);

  CompensatedSum pb;
  CompensatedSum welfare;
  for (std::size_t i = 0; i < n; ++i) {
    const PairDerived& d = pairs[i];
    out.tau_final[i] = tau_of_e(d, out.e_final[i]);
    const double value = d.link.weight * throughput(d.link, d.channel, out.tau_final[i], out.e_final[i]);
    out.ap_utility[i] = value - out.payment[i];
    pb += out.payment[i];
    welfare += value;
  }
  out.pb_utility = pb.value();
  out.welfare = welfare.value();
  return out;
}

AuctionOutcome run_auction(const SystemParams& params, std::span<const PairChannel> channels,
                           const AuctionConfig& cfg, const RootConfig& roots) {
  const std::vector<PairDerived> pairs = derive_pairs(params, channels, roots);
  auto oracle = [&](long, double mu) {
    std::vector<double> bids(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) bids[i] = best_response(pairs[i], mu).energy;
    return bids;
  };
  return settle_auction(pairs, run_clinching_auction(params.e_b_tot, pairs.size(), cfg, oracle));
}

}  // namespace pbwpcn
