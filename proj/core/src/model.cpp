#include "pbwpcn/model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/core.h>

#include "pbwpcn/errors.hpp"
#include "pbwpcn/summation.hpp"

namespace pbwpcn {

namespace {

// Slack for e_pb <= tau * p_pb when tau was itself computed as e_pb / p_pb.
constexpr double kFeasibilityRelTol = 1e-12;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void LinkParams::validate() const {
  require(bandwidth > 0.0, "bandwidth must be > 0");
  require(noise_power > 0.0, "noise_power must be > 0");
  require(eta > 0.0 && eta < 1.0, "eta must lie in (0, 1)");
  require(p_ap > 0.0, "p_ap must be > 0");
  require(p_pb > 0.0, "p_pb must be > 0");
  require(weight > 0.0, "weight must be > 0");
}

LinkParams SystemParams::link(std::size_t i) const {
  if (i >= weights.size()) throw std::out_of_range("pair index out of range");
  return LinkParams{bandwidth, noise_power, eta, p_ap, p_pb, weights[i]};
}

void SystemParams::validate() const {
  LinkParams{bandwidth, noise_power, eta, p_ap, p_pb, 1.0}.validate();
  require(!weights.empty(), "at least one pair is required");
  for (double w : weights) require(w > 0.0 && std::isfinite(w), "every weight must be > 0");
  require(e_b_tot >= 0.0 && std::isfinite(e_b_tot), "e_b_tot must be >= 0");
}

SystemParams SystemParams::defaults(std::size_t n, double e_b_tot) {
  SystemParams p;
  p.weights.assign(n, 10.0);
  p.e_b_tot = e_b_tot;
  return p;
}

void PairChannel::validate() const {
  require(g_pow > 0.0 && std::isfinite(g_pow), "g_pow must be > 0");
  require(k_pow >= 0.0 && std::isfinite(k_pow), "k_pow must be >= 0");
}

Allocation Allocation::from_energy(std::vector<double> tau, std::vector<double> e_pb, double p_pb) {
  if (tau.size() != e_pb.size()) throw std::invalid_argument("tau/e_pb size mismatch");
  Allocation a;
  a.tau = std::move(tau);
  a.e_pb = std::move(e_pb);
  a.tau_prime.resize(a.e_pb.size());
  for (std::size_t i = 0; i < a.e_pb.size(); ++i) a.tau_prime[i] = a.e_pb[i] / p_pb;
  return a;
}

void Allocation::validate(const SystemParams& params, double budget_tol) const {
  const std::size_t n = tau.size();
  if (tau_prime.size() != n || e_pb.size() != n) {
    throw std::invalid_argument("allocation vectors differ in length");
  }
  CompensatedSum total;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(tau[i] >= 0.0 && tau[i] < 1.0)) {
      throw std::invalid_argument(fmt::format("pair {}: tau={} outside [0, 1)", i, tau[i]));
    }
    if (!(tau_prime[i] >= 0.0 && tau_prime[i] <= tau[i] * (1.0 + kFeasibilityRelTol))) {
      throw std::invalid_argument(
          fmt::format("pair {}: tau'={} violates 0 <= tau' <= tau={}", i, tau_prime[i], tau[i]));
    }
    if (std::abs(e_pb[i] - tau_prime[i] * params.p_pb) > kFeasibilityRelTol * params.p_pb) {
      throw std::invalid_argument(fmt::format("pair {}: e_pb != tau' * p_pb", i));
    }
    total += e_pb[i];
  }
  if (total.value() > params.e_b_tot + budget_tol) {
    throw std::invalid_argument(
        fmt::format("allocation uses {} J, budget is {} J", total.value(), params.e_b_tot));
  }
}

double harvested_energy(const LinkParams& link, const PairChannel& ch, double tau, double tau_prime) {
  if (!(tau >= 0.0 && tau < 1.0) || !(tau_prime >= 0.0 && tau_prime < 1.0)) {
    throw DomainError("harvested_energy: fractions must lie in [0, 1)");
  }
  return link.eta * (tau * link.p_ap * ch.g_pow + tau_prime * link.p_pb * ch.k_pow);
}

double throughput(const LinkParams& link, const PairChannel& ch, double tau, double e_pb) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw DomainError(fmt::format("throughput: tau={} outside (0, 1)", tau));
  }
  if (!(e_pb >= 0.0) || e_pb > tau * link.p_pb * (1.0 + kFeasibilityRelTol)) {
    throw DomainError(fmt::format("throughput: e_pb={} outside [0, tau*p_pb={}]", e_pb, tau * link.p_pb));
  }
  const double uplink = 1.0 - tau;
  const double received = ch.g_pow * link.eta * (tau * link.p_ap * ch.g_pow + e_pb * ch.k_pow);
  if (received == 0.0) return 0.0;
  const double snr = received / (uplink * link.noise_power);
  return uplink * link.bandwidth * std::log1p(snr) / std::numbers::ln2;
}

double throughput_split(const LinkParams& link, const PairChannel& ch, double tau, double tau_prime) {
  const double charge = std::max(tau, tau_prime);
  if (!(charge > 0.0 && charge < 1.0) || tau < 0.0 || tau_prime < 0.0) {
    throw DomainError("throughput_split: need 0 < max(tau, tau') < 1");
  }
  const double uplink = 1.0 - charge;
  const double snr = ch.g_pow * harvested_energy(link, ch, tau, tau_prime) / (uplink * link.noise_power);
  return uplink * link.bandwidth * std::log1p(snr) / std::numbers::ln2;
}

double social_welfare(const SystemParams& params, std::span<const PairChannel> channels,
                      const Allocation& alloc) {
  if (channels.size() != alloc.size() || params.n_pairs() != alloc.size()) {
    throw std::invalid_argument(fmt::format("social_welfare: {} channels, {} weights, {} allocations",
                                            channels.size(), params.n_pairs(), alloc.size()));
  }
  CompensatedSum total;
  for (std::size_t i = 0; i < alloc.size(); ++i) {
    if (alloc.tau[i] == 0.0 && alloc.e_pb[i] == 0.0) continue;
    total += params.weights[i] * throughput(params.link(i), channels[i], alloc.tau[i], alloc.e_pb[i]);
  }
  return total.value();
}

}  // namespace pbwpcn
