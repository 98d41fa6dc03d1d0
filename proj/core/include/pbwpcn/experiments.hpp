#pragma once

// Channel generation and Monte Carlo sweeps over the PB budget, plus the
// fixed three-pair reference instance.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "pbwpcn/auction.hpp"
#include "pbwpcn/model.hpp"

namespace pbwpcn {

/// Rayleigh fading with distance path loss L(d) = 1e-3 d^-zeta. The PB
/// gain is the squared norm of an `antennas`-vector of i.i.d. fades.
struct ChannelModel {
  double d_ap_src = 10.0;  ///< m
  double d_pb_src = 10.0;  ///< m
  double zeta = 2.0;       ///< path-loss exponent, [2, 5]
  std::size_t antennas = 4;

  void validate() const;
  static double path_loss(double distance, double zeta);
};

/// Channels of trial `trial`. Pair i draws from substream (trial, i), so
/// adding pairs or trials leaves the existing draws untouched.
std::vector<PairChannel> draw_channels(const ChannelModel& model, std::uint64_t seed, std::uint64_t trial,
                                       std::size_t n_pairs);

struct PaperInstance {
  SystemParams params;
  std::vector<PairChannel> channels;
  std::size_t antennas = 4;
};

/// Reference parameters with the fixed three-pair channel realization.
PaperInstance load_paper_instance(double e_b_tot = 1.0);

enum class Scenario { Coop, Auction, Both };

std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view s);  ///< throws std::invalid_argument

struct ExperimentConfig {
  std::vector<std::size_t> n_pairs{2, 3, 4, 5};
  ChannelModel channel;
  std::size_t trials = 1000;
  std::uint64_t seed = 1;
  std::vector<double> e_b_tot_grid;  ///< J; empty means default_grid()
  Scenario protocol = Scenario::Both;
  std::filesystem::path output_dir = "out";
  SystemParams base = SystemParams::defaults(1);  ///< weights[0] is used for every pair
  AuctionConfig auction;
  unsigned threads = 0;  ///< 0 means hardware concurrency

  void validate() const;
  std::vector<double> grid() const;

  /// 0 to 8 J in steps of 0.25 J.
  static std::vector<double> default_grid();
};

/// Means over `trials` channel draws for one (N, budget) point. Energies and
/// times are averaged over pairs as well as trials.
struct SweepRecord {
  std::size_t n_pairs = 0;
  double e_b_tot = 0.0;
  std::size_t trials = 0;
  double mean_e_coop = 0.0;
  double mean_e_auction = 0.0;
  double mean_tau_coop = 0.0;
  double mean_tau_auction = 0.0;
  double welfare_coop = 0.0;
  double welfare_auction = 0.0;
  double welfare_baseline = 0.0;  ///< no PB, AP-only charging
  double pb_quit_rate = 0.0;
};

/// Runs every (N, budget, trial) point. Trials run in parallel; results are
/// reduced in trial order, so the output does not depend on the thread count.
std::vector<SweepRecord> sweep(const ExperimentConfig& cfg);

/// Per-budget allocations on one fixed instance (both scenarios).
struct BudgetCurvePoint {
  double e_b_tot = 0.0;
  std::vector<double> e_coop, tau_coop;
  std::vector<double> e_auction, tau_auction;
  bool pb_quit = false;
};

std::vector<BudgetCurvePoint> budget_curve(const SystemParams& params, std::span<const PairChannel> channels,
                                           std::span<const double> grid, const AuctionConfig& auction);

void write_convergence_csv(std::ostream& os, const WaterfillResult& coop, const AuctionOutcome& auction);
void write_energy_csv(std::ostream& os, std::span<const BudgetCurvePoint> curve);
void write_time_csv(std::ostream& os, std::span<const BudgetCurvePoint> curve);
void write_means_csv(std::ostream& os, std::span<const SweepRecord> records, Scenario scenario);
void write_welfare_csv(std::ostream& os, std::span<const SweepRecord> records, Scenario scenario);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double x);

/// Writes `content` to `path` via a sibling temporary and a rename.
void write_file_atomically(const std::filesystem::path& path, const std::string& content);

/// Runs the sweep and the reference-instance curves and writes the five CSV
/// files into cfg.output_dir. Nothing is written unless every computation
/// succeeds. Returns the written paths.
std::vector<std::filesystem::path> run_experiments(const ExperimentConfig& cfg);

}  // namespace pbwpcn
