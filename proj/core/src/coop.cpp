#include "pbwpcn/coop.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/core.h>

#include "pbwpcn/errors.hpp"
#include "pbwpcn/summation.hpp"

namespace pbwpcn {

namespace {

void check_energy(const PairDerived& d, double e_pb, const char* fn) {
  if (!(e_pb >= 0.0 && e_pb < d.link.p_pb)) {
    throw DomainError(fmt::format("{}: e_pb={} outside [0, p_b={})", fn, e_pb, d.link.p_pb));
  }
}

// e = p_b u / (u + X), the common shape of e_lim, e_opt and the price response.
double energy_from_offset(const PairDerived& d, double u) {
  return d.link.p_pb * u / (u + d.x_const);
}

double sum_of(std::span<const double> xs) { return compensated_sum(xs); }

}  // namespace

PairDerived derive_pair(const LinkParams& link, const PairChannel& ch, const RootConfig& roots) {
  link.validate();
  ch.validate();
  roots.validate();

  PairDerived d;
  d.link = link;
  d.channel = ch;
  d.roots = roots;
  const double snr_scale = ch.g_pow * link.eta / link.noise_power;
  d.a_const = snr_scale * link.p_ap * ch.g_pow;
  d.k_rate = snr_scale * ch.k_pow;
  d.x_const = d.a_const + d.k_rate * link.p_pb;

  d.z_dag_m1 = lambert_z_minus_one(d.a_const, roots);
  d.e_lim = energy_from_offset(d, d.z_dag_m1);
  d.alpha = d.weighted_bandwidth() * d.k_rate / (d.z_dag() * std::numbers::ln2);

  if (d.degenerate()) {
    d.z_ddag_m1 = d.z_dag_m1;
    d.e_opt = 0.0;
  } else {
    d.z_ddag_m1 = lambert_z_minus_one(d.x_const, roots);
    d.e_opt = energy_from_offset(d, d.z_ddag_m1);
  }
  return d;
}

std::vector<PairDerived> derive_pairs(const SystemParams& params, std::span<const PairChannel> channels,
                                      const RootConfig& roots) {
  params.validate();
  if (channels.size() != params.n_pairs()) {
    throw std::invalid_argument(
        fmt::format("{} channels given for {} pairs", channels.size(), params.n_pairs()));
  }
  std::vector<PairDerived> out;
  out.reserve(channels.size());
  for (std::size_t i = 0; i < channels.size(); ++i) {
    out.push_back(derive_pair(params.link(i), channels[i], roots));
  }
  return out;
}

double tau_of_e(const PairDerived& d, double e_pb) {
  check_energy(d, e_pb, "tau_of_e");
  if (e_pb > d.e_lim) return e_pb / d.link.p_pb;
  return (d.z_dag_m1 - d.k_rate * e_pb) / (d.z_dag_m1 + d.a_const);
}

double ap_only_tau(const PairDerived& d) { return d.z_dag_m1 / (d.z_dag_m1 + d.a_const); }

double s_of_e(const PairDerived& d, double e_pb) {
  check_energy(d, e_pb, "s_of_e");
  const double lw = d.weighted_bandwidth();
  if (e_pb <= d.e_lim) {
    return lw * (d.a_const + d.k_rate * e_pb) / (d.z_dag() * std::numbers::ln2);
  }
  const double rest = d.link.p_pb - e_pb;
  return lw * (rest / d.link.p_pb) * std::log1p(d.x_const * e_pb / rest) / std::numbers::ln2;
}

double grad_s(const PairDerived& d, double e_pb) {
  check_energy(d, e_pb, "grad_s");
  if (e_pb <= d.e_lim) return d.alpha;
  const double lw = d.weighted_bandwidth();
  const double pb = d.link.p_pb;
  const double rest = pb - e_pb;
  return (lw / std::numbers::ln2) *
         (d.x_const / (rest + d.x_const * e_pb) - std::log1p(d.x_const * e_pb / rest) / pb);
}

double demand_at_price(const PairDerived& d, double nu) {
  if (!(nu >= 0.0 && nu < d.alpha)) {
    throw DomainError(fmt::format("demand_at_price: nu={} outside [0, alpha={})", nu, d.alpha));
  }
  if (nu == 0.0) return d.e_opt;
  const double y = nu * d.link.p_pb * std::numbers::ln2 / d.weighted_bandwidth();
  const double u = solve_z_minus_one(d.x_const, y, d.roots);
  return std::clamp(energy_from_offset(d, u), d.e_lim, d.e_opt);
}

double respond_to_price(const PairDerived& d, double nu, bool is_marginal) {
  if (!(nu >= 0.0)) throw DomainError(fmt::format("respond_to_price: nu={} must be >= 0", nu));
  if (d.degenerate()) return 0.0;
  if (nu < d.alpha) return demand_at_price(d, nu);
  if (nu == d.alpha && is_marginal) return d.e_lim;
  return 0.0;
}

const char* to_string(CoopRound::Phase phase) {
  switch (phase) {
    case CoopRound::Phase::Sweep: return "sweep";
    case CoopRound::Phase::Probe: return "probe";
    case CoopRound::Phase::Bisection: return "bisection";
  }
  return "?";
}

PriceSearchOutcome waterfill_price_search(const PriceSearchInputs& in, const ResponseOracle& oracle,
                                          const BisectionConfig& bisect) {
  const std::size_t n = in.alpha.size();
  if (in.e_lim.size() != n) throw std::invalid_argument("alpha/e_lim size mismatch");
  if (!(in.e_b_tot >= 0.0)) throw std::invalid_argument("e_b_tot must be >= 0");

  PriceSearchOutcome out;
  auto announce = [&](CoopRound::Phase phase, double nu, bool tie) -> const CoopRound& {
    CoopRound r;
    r.phase = phase;
    r.nu = nu;
    r.tie = tie;
    r.responses = oracle(nu);
    if (r.responses.size() != n) throw ProtocolViolation("response count does not match pair count");
    r.aggregate = sum_of(r.responses);
    ++out.rounds;
    out.transcript.push_back(std::move(r));
    return out.transcript.back();
  };

  // Distinct positive alphas, descending. Zero-alpha pairs never demand.
  std::vector<double> levels;
  for (double a : in.alpha) {
    if (a > 0.0) levels.push_back(a);
  }
  std::sort(levels.begin(), levels.end(), std::greater<>());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  double lower = 0.0;                     // bisection bracket, demand(lower) > budget
  double upper = levels.empty() ? 0.0 : levels.back();
  bool need_probe = true;

  for (std::size_t g = 0; g < levels.size(); ++g) {
    const double level = levels[g];
    std::size_t members = 0;
    for (double a : in.alpha) members += (a == level);
    const CoopRound& r = announce(CoopRound::Phase::Sweep, level, members > 1);

    CompensatedSum marginal_sum;
    CompensatedSum others;
    double marginal_elim = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (in.alpha[j] == level) {
        marginal_sum += r.responses[j];
        marginal_elim += in.e_lim[j];
      } else {
        others += r.responses[j];
      }
    }
    if (r.aggregate < in.e_b_tot) continue;

    if (others.value() <= in.e_b_tot) {
      // Price settles on this alpha; the marginal pairs absorb the remainder.
      out.nu = level;
      out.energy = r.responses;
      const double residual = std::max(0.0, in.e_b_tot - others.value());
      for (std::size_t j = 0; j < n; ++j) {
        if (in.alpha[j] != level) continue;
        const double share = marginal_elim > 0.0 ? in.e_lim[j] / marginal_elim : 1.0 / double(members);
        out.energy[j] = std::clamp(residual * share, 0.0, in.e_lim[j]);
      }
      return out;
    }
    // Budget is crossed strictly between this alpha and the previous one.
    lower = level;
    upper = levels[g - 1];  // g > 0: at the top level `others` is zero
    need_probe = false;
    break;
  }

  if (need_probe) {
    const CoopRound& r = announce(CoopRound::Phase::Probe, 0.0, false);
    if (r.aggregate <= in.e_b_tot) {
      out.nu = 0.0;
      out.energy = r.responses;
      return out;
    }
    lower = 0.0;
  }

  const double tol = bisect.rel_tol * in.e_b_tot;
  for (int it = 0; it < bisect.max_iter; ++it) {
    const double mid = 0.5 * (lower + upper);
    const CoopRound& r = announce(CoopRound::Phase::Bisection, mid, false);
    const double err = r.aggregate - in.e_b_tot;
    if (std::abs(err) <= tol || upper - lower <= bisect.bracket_tol) {
      out.nu = mid;
      out.energy = r.responses;
      return out;
    }
    if (err > 0.0) lower = mid; else upper = mid;
  }
  throw ConvergenceError(fmt::format("waterfill: bisection did not converge, nu in ({}, {})", lower, upper));
}

WaterfillResult waterfill(std::span<const PairDerived> pairs, double e_b_tot, const BisectionConfig& bisect) {
  const std::size_t n = pairs.size();
  PriceSearchInputs in;
  in.e_b_tot = e_b_tot;
  for (const PairDerived& d : pairs) {
    in.alpha.push_back(d.alpha);
    in.e_lim.push_back(d.e_lim);
  }
  auto oracle = [&](double nu) {
    std::vector<double> resp(n);
    for (std::size_t j = 0; j < n; ++j) resp[j] = respond_to_price(pairs[j], nu, nu == pairs[j].alpha);
    return resp;
  };
  PriceSearchOutcome search = waterfill_price_search(in, oracle, bisect);

  WaterfillResult res;
  res.nu = search.nu;
  res.e_star = std::move(search.energy);
  res.rounds = search.rounds;
  res.transcript = std::move(search.transcript);
  res.tau_star.resize(n);
  CompensatedSum welfare;
  for (std::size_t j = 0; j < n; ++j) {
    const PairDerived& d = pairs[j];
    res.tau_star[j] = tau_of_e(d, res.e_star[j]);
    welfare += d.link.weight * throughput(d.link, d.channel, res.tau_star[j], res.e_star[j]);
  }
  res.welfare = welfare.value();
  return res;
}

WaterfillResult waterfill(const SystemParams& params, std::span<const PairChannel> channels,
                          const RootConfig& roots, const BisectionConfig& bisect) {
  const std::vector<PairDerived> pairs = derive_pairs(params, channels, roots);
  return waterfill(pairs, params.e_b_tot, bisect);
}

}  // namespace pbwpcn
