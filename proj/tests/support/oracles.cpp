#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace oracle {

namespace {

constexpr double kLn2 = std::numbers::ln2;

// Keeps the search away from tau = 1, where the uplink slot vanishes.
constexpr double kTauMax = 1.0 - 1e-12;

double snr(const Pair& p, double tau, double e) {
  const double power = p.eta * (p.p_ap * p.g * tau + p.k * e) / (1.0 - tau);
  return p.g * power / p.noise;
}

}  // namespace

Pair make_pair(const pbwpcn::SystemParams& params, std::size_t i, const pbwpcn::PairChannel& ch) {
  return {params.weights.at(i), params.bandwidth, params.noise_power, params.eta, params.p_ap, params.p_pb,
          ch.g_pow, ch.k_pow};
}

std::vector<Pair> make_pairs(const pbwpcn::SystemParams& params, std::span<const pbwpcn::PairChannel> channels) {
  std::vector<Pair> out;
  for (std::size_t i = 0; i < channels.size(); ++i) out.push_back(make_pair(params, i, channels[i]));
  return out;
}

double utility(const Pair& p, double tau, double e) {
  return p.weight * p.bandwidth * (1.0 - tau) * std::log1p(snr(p, tau, e)) / kLn2;
}

double utility_dtau(const Pair& p, double tau, double e) {
  const double c = snr(p, tau, e);
  const double a = p.g * p.g * p.eta * p.p_ap / p.noise;
  return p.weight * p.bandwidth / kLn2 * (-std::log1p(c) + (a + c) / (1.0 + c));
}

TauOpt best_tau(const Pair& p, double e) {
  double lo = e / p.p_pb;
  double hi = kTauMax;
  if (lo >= hi) throw std::domain_error("best_tau: e too close to p_b");
  if (lo > 0.0 && utility_dtau(p, lo, e) <= 0.0) return {lo, utility(p, lo, e)};
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (utility_dtau(p, mid, e) > 0.0) lo = mid; else hi = mid;
  }
  const double t = 0.5 * (lo + hi);
  return {t, utility(p, t, e)};
}

TauOpt grid_best_tau(const Pair& p, double e, double step) {
  const double lo = e / p.p_pb;
  TauOpt best{lo, lo > 0.0 ? utility(p, lo, e) : 0.0};
  const long n = static_cast<long>(std::floor((1.0 - lo) / step));
  for (long k = 1; k < n; ++k) {
    const double t = lo + double(k) * step;
    const double v = utility(p, t, e);
    if (v > best.value) best = {t, v};
  }
  return best;
}

double reduced_gradient(const Pair& p, double e) {
  const TauOpt opt = best_tau(p, e);
  const double c = snr(p, opt.tau, e);
  const double k_rate = p.g * p.eta * p.k / p.noise;
  const double d_e = p.weight * p.bandwidth / kLn2 * k_rate / (1.0 + c);
  // On the boundary tau = e / p_b the charging time moves with e.
  const bool on_boundary = opt.tau <= e / p.p_pb * (1.0 + 1e-12) && e > 0.0;
  return on_boundary ? d_e + utility_dtau(p, opt.tau, e) / p.p_pb : d_e;
}

std::vector<double> project_capped_simplex(std::span<const double> y, std::span<const double> cap, double budget) {
  const std::size_t n = y.size();
  auto clip = [&](double theta) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(y[i] - theta, 0.0, cap[i]);
    return x;
  };
  auto total = [](const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  };
  std::vector<double> x = clip(0.0);
  if (total(x) <= budget) return x;
  double lo = 0.0;
  double hi = *std::max_element(y.begin(), y.end());
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (total(clip(mid)) > budget) lo = mid; else hi = mid;
  }
  return clip(hi);
}

ConvexSolution projected_gradient(std::span<const Pair> pairs, double budget, int max_iter) {
  const std::size_t n = pairs.size();
  std::vector<double> cap(n);
  for (std::size_t i = 0; i < n; ++i) cap[i] = pairs[i].p_pb * (1.0 - 1e-6);
  auto objective = [&](const std::vector<double>& e) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += reduced_utility(pairs[i], e[i]);
    return s;
  };

  std::vector<double> e(n, 0.0);
  double f = objective(e);
  double step = 0.1;
  int it = 0;
  for (; it < max_iter; ++it) {
    std::vector<double> grad(n);
    for (std::size_t i = 0; i < n; ++i) grad[i] = reduced_gradient(pairs[i], e[i]);
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) y[i] = e[i] + step * grad[i];
      std::vector<double> cand = project_capped_simplex(y, cap, budget);
      double lin = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = cand[i] - e[i];
        lin += grad[i] * d;
        sq += d * d;
      }
      if (sq == 0.0) break;
      const double fc = objective(cand);
      if (fc >= f + lin - sq / (2.0 * step)) {
        const double gain = fc - f;
        e = std::move(cand);
        f = fc;
        step *= 2.0;
        moved = gain > 1e-15 * std::max(1.0, std::abs(f)) || sq > 1e-28;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return {e, f, it};
}

double grid_best_welfare(std::span<const Pair> pairs, double budget, int steps) {
  const double h = budget / steps;
  const double neg_inf = -std::numeric_limits<double>::infinity();
  // best[k]: best welfare of the pairs seen so far using exactly k grid units.
  std::vector<double> best(steps + 1, neg_inf);
  best[0] = 0.0;
  for (const Pair& p : pairs) {
    std::vector<double> s(steps + 1, neg_inf);
    for (int k = 0; k <= steps; ++k) {
      const double e = k * h;
      if (e < p.p_pb * (1.0 - 1e-9)) s[k] = reduced_utility(p, e);
    }
    std::vector<double> next(steps + 1, neg_inf);
    for (int used = 0; used <= steps; ++used) {
      if (best[used] == neg_inf) continue;
      for (int k = 0; used + k <= steps; ++k) {
        if (s[k] == neg_inf) continue;
        next[used + k] = std::max(next[used + k], best[used] + s[k]);
      }
    }
    best = std::move(next);
  }
  return *std::max_element(best.begin(), best.end());
}

}  // namespace oracle
