#pragma once

// Non-cooperative allocation: an ascending clinching auction in which the PB
// raises a per-joule price and the APs bid their utility-maximizing demand.
// Each AP clinches whatever its rivals' demand can no longer absorb, pays
// the price current at the moment of each clinch, and the last round is
// closed with a proportional rationing rule so that supply clears exactly.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "pbwpcn/coop.hpp"
#include "pbwpcn/model.hpp"

namespace pbwpcn {

struct AuctionConfig {
  double reserve_price = 0.001;  ///< opening price mu0
  double price_step = 0.01;      ///< delta
  long max_rounds = 50'000'000;  ///< safety bound; reaching it means demand is not monotone

  void validate() const;
};

struct BidResponse {
  double tau = 0.0;
  double energy = 0.0;
};

/// Utility-maximizing (charging fraction, energy bid) of one AP at price mu.
BidResponse best_response(const PairDerived& d, double mu);

/// Energy guaranteed to bidder i: max(0, budget - sum of the others' bids).
double cumulative_clinch(double e_b_tot, std::span<const double> bids, std::size_t i);

/// Closing clinches when demand drops from above the budget (previous round)
/// to at or below it (final round): each bidder keeps its final bid plus a
/// share of the leftover proportional to its own demand reduction. The
/// result sums to the budget exactly.
std::vector<double> final_clinch_prr(double e_b_tot, std::span<const double> bids_final,
                                     std::span<const double> bids_prev);

/// Total payment per bidder: every increment of cumulative clinch is priced
/// at the round it was clinched in. `clinches[t][i]` is bidder i in round t.
std::vector<double> payment(std::span<const double> prices, std::span<const std::vector<double>> clinches);

struct AuctionRound {
  long round = 0;
  double price = 0.0;
  std::vector<double> bids;
  std::vector<double> clinch;
};

/// Writes one JSON object per line: round, price, bids, clinch.
void write_transcript_jsonl(std::ostream& os, std::span<const AuctionRound> rounds);

/// Auctioneer's view of a run.
struct ClinchingResult {
  bool pb_quit = false;
  std::vector<double> allocation;
  std::vector<double> payment;
  double final_price = 0.0;
  long rounds_used = 0;
  std::vector<AuctionRound> transcript;
};

/// Announces a price (with its round index) and gathers every AP's bid.
using BidOracle = std::function<std::vector<double>(long round, double price)>;

/// PB side of the auction, driven only by the budget and received bids.
ClinchingResult run_clinching_auction(double e_b_tot, std::size_t n_bidders, const AuctionConfig& cfg,
                                      const BidOracle& oracle);

struct AuctionOutcome {
  std::vector<double> e_final;
  std::vector<double> tau_final;
  std::vector<double> payment;
  std::vector<double> ap_utility;
  double pb_utility = 0.0;
  double welfare = 0.0;  ///< sum of AP and PB utilities == weighted sum-throughput
  bool pb_quit = false;
  double final_price = 0.0;
  long rounds_used = 0;
  std::vector<AuctionRound> transcript;
};

/// Full auction on pooled data. If the PB quits, every AP falls back to
/// charging from its own AP only.
AuctionOutcome run_auction(const SystemParams& params, std::span<const PairChannel> channels,
                           const AuctionConfig& cfg = {}, const RootConfig& roots = {});

/// Fills the AP-side quantities of an outcome (tau, utilities, welfare)
/// from the auctioneer's result.
AuctionOutcome settle_auction(std::span<const PairDerived> pairs, ClinchingResult result);

}  // namespace pbwpcn
