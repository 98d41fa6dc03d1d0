#pragma once

// Cooperative allocation: per-pair closed forms for the optimal charging time
// given PB energy, the reduced utility S(E) and its gradient, the price
// response, and the water-filling search for the common energy price.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "pbwpcn/model.hpp"
#include "pbwpcn/scalar.hpp"

namespace pbwpcn {

/// Per-pair constants. Everything an AP needs to answer price queries.
///
/// With A = G^2 eta p / sigma^2 and X = G eta (p G + p_b K) / sigma^2:
///   z_dag  solves z ln z - z + 1 = A  (AP-only optimum),
///   z_ddag solves z ln z - z + 1 = X  (unconstrained optimum),
///   e_lim  = p_b (z_dag - 1)  / (z_dag - 1 + X),
///   e_opt  = p_b (z_ddag - 1) / (z_ddag - 1 + X),
///   alpha  = weight W G eta K / (z_dag sigma^2 ln 2).
/// A pair with K == 0 is degenerate: alpha = 0 and e_opt = 0 (PB energy is
/// worthless to it).
struct PairDerived {
  LinkParams link;
  PairChannel channel;
  double a_const = 0.0;
  double x_const = 0.0;
  double k_rate = 0.0;  ///< G eta K / sigma^2, so B(E) = k_rate * E
  double z_dag_m1 = 0.0;
  double z_ddag_m1 = 0.0;
  double alpha = 0.0;
  double e_lim = 0.0;
  double e_opt = 0.0;

  double z_dag() const { return 1.0 + z_dag_m1; }
  double z_ddag() const { return 1.0 + z_ddag_m1; }
  bool degenerate() const { return channel.k_pow == 0.0; }
  double weighted_bandwidth() const { return link.weight * link.bandwidth; }

  RootConfig roots;
};

PairDerived derive_pair(const LinkParams& link, const PairChannel& ch, const RootConfig& roots = {});

std::vector<PairDerived> derive_pairs(const SystemParams& params, std::span<const PairChannel> channels,
                                      const RootConfig& roots = {});

/// Optimal AP charging fraction given `e_pb` J from the PB, 0 <= e_pb < p_b.
double tau_of_e(const PairDerived& d, double e_pb);

/// AP-only charging fraction, tau_of_e(d, 0).
double ap_only_tau(const PairDerived& d);

/// Weighted throughput after optimizing tau for the given PB energy.
double s_of_e(const PairDerived& d, double e_pb);

/// dS/dE: alpha on [0, e_lim], strictly decreasing above, zero at e_opt.
double grad_s(const PairDerived& d, double e_pb);

/// Energy at which the marginal utility equals `nu`, for 0 <= nu < alpha.
/// Strictly decreasing; maps [0, alpha) onto (e_lim, e_opt].
double demand_at_price(const PairDerived& d, double nu);

/// Response of one AP to an announced price: demand_at_price below alpha,
/// e_lim at exactly alpha when the AP is the marginal one, 0 otherwise.
double respond_to_price(const PairDerived& d, double nu, bool is_marginal);

/// One announcement of the water-filling search.
struct CoopRound {
  enum class Phase { Sweep, Probe, Bisection };
  Phase phase = Phase::Sweep;
  double nu = 0.0;
  std::vector<double> responses;
  double aggregate = 0.0;
  bool tie = false;  ///< more than one pair is marginal at this price
};

const char* to_string(CoopRound::Phase phase);

struct WaterfillResult {
  double nu = 0.0;
  std::vector<double> e_star;
  std::vector<double> tau_star;
  double welfare = 0.0;
  int rounds = 0;
  std::vector<CoopRound> transcript;
};

/// What the PB knows: its budget and the scalars reported by each AP.
struct PriceSearchInputs {
  double e_b_tot = 0.0;
  std::vector<double> alpha;
  std::vector<double> e_lim;
};

/// Broadcasts a price and gathers one response per AP.
using ResponseOracle = std::function<std::vector<double>(double nu)>;

struct PriceSearchOutcome {
  double nu = 0.0;
  std::vector<double> energy;
  int rounds = 0;
  std::vector<CoopRound> transcript;
};

struct BisectionConfig {
  double rel_tol = 1e-12;       ///< on |sum E - budget| / budget
  double bracket_tol = 1e-14;   ///< on the nu bracket width
  int max_iter = 200;
};

/// PB side of the water-filling search. Announces the reported alphas in
/// descending order, stops at the first whose aggregate response reaches
/// the budget, and bisects on the bracketing interval when the price falls
/// strictly between two alphas. Uses nothing beyond `in` and the oracle.
///
/// Pairs sharing an alpha are swept together; if the price settles on that
/// alpha the leftover budget is split across them in proportion to e_lim.
PriceSearchOutcome waterfill_price_search(const PriceSearchInputs& in, const ResponseOracle& oracle,
                                          const BisectionConfig& bisect = {});

/// Optimal cooperative allocation computed on pooled data.
WaterfillResult waterfill(std::span<const PairDerived> pairs, double e_b_tot, const BisectionConfig& bisect = {});

WaterfillResult waterfill(const SystemParams& params, std::span<const PairChannel> channels,
                          const RootConfig& roots = {}, const BisectionConfig& bisect = {});

}  // namespace pbwpcn
