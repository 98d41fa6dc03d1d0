#pragma once

// JSON run configuration for the pbwpcn tool. Every key is optional and
// defaults to the reference parameter set; unknown keys are rejected.
//
// {
//   "system":  { "bandwidth_mhz", "noise_power_w", "eta", "p_ap_w", "p_pb_w",
//                "weight_per_mbps" | "weights": [...], "e_b_tot_j" },
//   "channels": [ { "g": 4.46e-7, "k": 1.616e-5 }, ... ],
//   "auction": { "reserve_price", "price_step", "max_rounds" },
//   "sweep":   { "n_pairs": [...], "trials", "seed", "e_b_tot_grid_j": [...],
//                "protocol": "coop"|"auction"|"both", "threads",
//                "d_ap_src_m", "d_pb_src_m", "zeta", "antennas" },
//   "output_dir": "out"
// }

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pbwpcn/auction.hpp"
#include "pbwpcn/experiments.hpp"
#include "pbwpcn/model.hpp"

namespace pbwpcn::cli {

/// Invalid or unreadable configuration. `where` is "line N" for syntax
/// errors or a JSON pointer for field errors.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string where, const std::string& what)
      : std::runtime_error(where.empty() ? what : where + ": " + what), where_(std::move(where)), message_(what) {}
  const std::string& where() const { return where_; }
  const std::string& message() const { return message_; }

 private:
  std::string where_;
  std::string message_;
};

struct RunConfig {
  SystemParams params;               ///< weights sized to `channels`
  std::vector<PairChannel> channels;
  AuctionConfig auction;
  ExperimentConfig sweep;
  std::filesystem::path output_dir = "out";
};

/// Reference parameters on the fixed three-pair instance, budget 1 J.
RunConfig default_run_config();

RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Re-checks cross-field invariants after command-line overrides.
void validate(const RunConfig& cfg);

}  // namespace pbwpcn::cli
