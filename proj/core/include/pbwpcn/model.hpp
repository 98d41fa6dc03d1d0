#pragma once

// Physical model of a power-beacon-assisted WPCN: N AP/source pairs on
// orthogonal bands, one multi-antenna power beacon (PB) that can charge every
// source. Block length is normalized to 1 s, so energies (J) and average
// powers (W) over a block share a numeric value.
//
// Units: bandwidth is carried in MHz so throughput comes out in Mbps and a
// weight in utility/Mbps gives utility directly. With the default parameters
// (100 kHz, weight 10 per Mbps) the product weight * bandwidth is exactly 1.

#include <cstddef>
#include <span>
#include <vector>

namespace pbwpcn {

/// Per-pair slice of the system parameters. This is everything a single AP
/// needs to compute its own responses.
struct LinkParams {
  double bandwidth = 0.1;      ///< MHz
  double noise_power = 1e-11;  ///< W (-80 dBm)
  double eta = 0.5;            ///< RF-to-DC conversion efficiency, (0,1)
  double p_ap = 1.0;           ///< AP transmit power, W
  double p_pb = 2.0;           ///< PB per-band transmit power, W
  double weight = 10.0;        ///< utility per Mbps

  void validate() const;
};

struct SystemParams {
  double bandwidth = 0.1;
  double noise_power = 1e-11;
  double eta = 0.5;
  double p_ap = 1.0;
  double p_pb = 2.0;
  std::vector<double> weights;  ///< one per pair
  double e_b_tot = 0.0;         ///< PB energy budget per block, J

  std::size_t n_pairs() const { return weights.size(); }
  LinkParams link(std::size_t i) const;
  void validate() const;

  /// Reference parameter set (100 kHz, -80 dBm, eta 0.5, p_ap 1 W,
  /// p_pb 2 W, weight 10/Mbps) for `n` pairs.
  static SystemParams defaults(std::size_t n, double e_b_tot = 0.0);
};

/// Equivalent channel power gains of one pair. `k_pow` is the squared norm
/// of the PB-to-source channel vector, i.e. the gain under maximum-ratio
/// energy beamforming.
struct PairChannel {
  double g_pow = 0.0;  ///< AP <-> source, |g|^2
  double k_pow = 0.0;  ///< PB -> source, ||k||^2

  void validate() const;
};

/// Time and PB-energy split for every pair. `e_pb[i] == tau_prime[i] * p_pb`.
struct Allocation {
  std::vector<double> tau;        ///< AP charging fraction
  std::vector<double> tau_prime;  ///< PB charging fraction
  std::vector<double> e_pb;       ///< PB energy, J

  std::size_t size() const { return tau.size(); }

  static Allocation from_energy(std::vector<double> tau, std::vector<double> e_pb, double p_pb);

  /// Checks 0 <= tau' <= tau < 1, e = tau' p_b and the PB budget.
  void validate(const SystemParams& params, double budget_tol = 1e-9) const;
};

/// Energy harvested by a source after charging from its AP for `tau` and
/// from the PB for `tau_prime` (both fractions of the block).
double harvested_energy(const LinkParams& link, const PairChannel& ch, double tau, double tau_prime);

/// Uplink throughput in Mbps when the source charges for `tau` and receives
/// `e_pb` joules from the PB (which requires e_pb <= tau * p_pb).
double throughput(const LinkParams& link, const PairChannel& ch, double tau, double e_pb);

/// Throughput for an arbitrary (tau, tau') split; the uplink starts after
/// max(tau, tau'). Reduces to `throughput` whenever tau >= tau'.
double throughput_split(const LinkParams& link, const PairChannel& ch, double tau, double tau_prime);

/// Weighted sum-throughput. A pair with tau == 0 and e_pb == 0 is idle and
/// contributes its limit value 0.
double social_welfare(const SystemParams& params, std::span<const PairChannel> channels,
                      const Allocation& alloc);

}  // namespace pbwpcn
