// Acceptance suite. Prints one "ACn PASS|FAIL" line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "instances.hpp"
#include "oracles.hpp"
#include "pbwpcn/auction.hpp"
#include "pbwpcn/coop.hpp"
#include "pbwpcn/experiments.hpp"
#include "pbwpcn/harness.hpp"
#include "pbwpcn/summation.hpp"

using namespace pbwpcn;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool ok, double ms, double limit_ms, const std::string& detail) {
  const bool fast = ms < limit_ms;
  if (!(ok && fast)) ++failures;
  fmt::print("AC{} {} {:.3f} ms (limit {} ms){} | {}\n", id, ok && fast ? "PASS" : "FAIL", ms, limit_ms,
             fast ? "" : " TOO SLOW", detail);
  std::fflush(stdout);
}

bool multiset_close(std::vector<double> got, std::vector<double> want, double rel) {
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  for (std::size_t i = 0; i < got.size(); ++i)
    if (std::abs(got[i] - want[i]) > rel * std::abs(want[i])) return false;
  return got.size() == want.size();
}

std::string join(const std::vector<double>& v, int prec = 6) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt::format("{:.{}f}", v[i], prec);
  return s + "]";
}

void ac1() {
  const PaperInstance inst = load_paper_instance();
  // Warm-up call so the timed call does not pay for page faults.
  (void)derive_pairs(inst.params, inst.channels);
  const auto t0 = Clock::now();
  const auto pairs = derive_pairs(inst.params, inst.channels);
  const double ms = ms_since(t0);
  std::vector<double> alpha, e_lim, e_opt;
  for (const auto& d : pairs) {
    alpha.push_back(d.alpha);
    e_lim.push_back(d.e_lim);
    e_opt.push_back(d.e_opt);
  }
  const bool ok = multiset_close(alpha, {5.6834, 4.7802, 0.4543}, 1e-3) &&
                  multiset_close(e_lim, {0.1676, 0.0989, 0.3299}, 1e-3) &&
                  multiset_close(e_opt, {0.6325, 0.8307, 1.3247}, 1e-3);
  report(1, ok, ms, 1.0, fmt::format("alpha {} e_lim {} e_opt {}", join(alpha), join(e_lim), join(e_opt)));
}

void ac2() {
  const PaperInstance one = load_paper_instance(1.0);
  const PaperInstance three = load_paper_instance(3.0);
  auto t0 = Clock::now();
  const WaterfillResult r1 = waterfill(one.params, one.channels);
  const double ms1 = ms_since(t0);
  t0 = Clock::now();
  const WaterfillResult r3 = waterfill(three.params, three.channels);
  const double ms3 = ms_since(t0);

  double sum = 0.0;
  for (double e : r1.e_star) sum += e;
  const auto pairs = derive_pairs(three.params, three.channels);
  double dev3 = 0.0;
  for (std::size_t i = 0; i < 3; ++i) dev3 = std::max(dev3, std::abs(r3.e_star[i] - pairs[i].e_opt));
  const bool ok = r1.nu > 0.4543 && r1.nu < 4.7802 && std::abs(sum - 1.0) <= 1e-10 && dev3 <= 1e-6;
  report(2, ok, std::max(ms1, ms3), 10.0,
         fmt::format("nu {:.8f} sum-1 {:.2e} E*(1) {} max|E*(3)-E_opt| {:.2e}", r1.nu, sum - 1.0, join(r1.e_star),
                     dev3));
}

void ac3() {
  const PaperInstance inst = load_paper_instance(1.0);
  const AuctionConfig cfg{0.001, 0.01};
  const auto t0 = Clock::now();
  const AuctionOutcome a = run_auction(inst.params, inst.channels, cfg);
  const double ms = ms_since(t0);

  const auto pairs = derive_pairs(inst.params, inst.channels);
  const std::size_t low =
      std::min_element(pairs.begin(), pairs.end(), [](auto& x, auto& y) { return x.alpha < y.alpha; }) -
      pairs.begin();
  double last_bid = 0.0;
  for (const auto& r : a.transcript)
    if (r.bids[low] > 0.0) last_bid = r.bids[low];
  // The last round at which the pair still bids has price within 2 delta
  // below its cap, so its bid lies between the knee and the demand there.
  const double hi = demand_at_price(pairs[low], pairs[low].alpha - 2 * cfg.price_step);
  const double sum = compensated_sum(a.e_final);
  const long bound = static_cast<long>(std::ceil((5.6834 - 0.001) / 0.01)) + 1;
  const bool ok = !a.pb_quit && last_bid >= pairs[low].e_lim - 1e-12 && last_bid <= hi &&
                  std::abs(last_bid - 0.3299) <= (hi - pairs[low].e_lim) + 1e-4 && sum == 1.0 &&
                  a.rounds_used <= bound;
  report(3, ok, ms, 100.0,
         fmt::format("last bid {:.6f} in [{:.6f}, {:.6f}], sum {:.17g}, rounds {} <= {}, E {}", last_bid,
                     pairs[low].e_lim, hi, sum, a.rounds_used, bound, join(a.e_final)));
}

void ac4() {
  const PaperInstance inst = load_paper_instance(1.0);
  const auto t0 = Clock::now();
  const AuctionOutcome a = run_auction(inst.params, inst.channels, {1e-6, 1e-4});
  const double ms = ms_since(t0);
  const WaterfillResult w = waterfill(inst.params, inst.channels);
  double dev = 0.0;
  for (std::size_t i = 0; i < 3; ++i) dev = std::max(dev, std::abs(a.e_final[i] - w.e_star[i]));
  report(4, !a.pb_quit && dev <= 1e-2, ms, 5000.0,
         fmt::format("auction {} coop {} max dev {:.2e}, rounds {}", join(a.e_final), join(w.e_star), dev,
                     a.rounds_used));
}

void ac5() {
  std::mt19937_64 rng(20240501);
  std::uniform_real_distribution<double> budget(0.05, 3.5);
  double worst_pg = 0.0, worst_grid = -1e300;
  int bad = 0;
  const auto t0 = Clock::now();
  for (int t = 0; t < 50; ++t) {
    const auto inst = testing_support::random_instance(rng, 2 + t % 3, budget(rng));
    const WaterfillResult r = waterfill(inst.params, inst.channels);
    const auto op = oracle::make_pairs(inst.params, inst.channels);
    const auto pg = oracle::projected_gradient(op, inst.params.e_b_tot);
    const double grid = oracle::grid_best_welfare(op, inst.params.e_b_tot, 200);
    const double rel = std::abs(r.welfare - pg.welfare) / pg.welfare;
    // <= 0 up to the price search's budget tolerance; a grid vertex can be
    // the optimum itself when one pair takes the whole budget.
    const double margin = (grid - r.welfare) / r.welfare;
    worst_pg = std::max(worst_pg, rel);
    worst_grid = std::max(worst_grid, margin);
    if (rel > 1e-6 || margin > 1e-12) ++bad;
  }
  const double ms = ms_since(t0);
  report(5, bad == 0, ms, 30000.0,
         fmt::format("50 instances, worst |W-W_pg|/W_pg {:.2e}, worst (W_grid-W)/W {:.2e}", worst_pg, worst_grid));
}

void ac6() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int bad_tau = 0, bad_grad = 0, bad_concave = 0, grad_checked = 0;
  double worst_tau = -1e300, worst_grad = 0.0, worst_curv = -1e300;
  const auto t0 = Clock::now();
  for (int s = 0; s < 1000; ++s) {
    const auto inst = testing_support::random_instance(rng, 1, 0.0);
    const PairDerived d = derive_pair(inst.params.link(0), inst.channels[0]);
    const oracle::Pair op = oracle::make_pair(inst.params, 0, inst.channels[0]);
    const double e_max = std::min(1.5 * d.e_opt, 0.999 * op.p_pb);
    const double e = e_max * unit(rng);

    // Charging time: closed form against a dense grid.
    const double v_closed = oracle::utility(op, tau_of_e(d, e), e);
    const double v_grid = oracle::grid_best_tau(op, e, 1e-5).value;
    const double gap = (v_grid - v_closed) / std::max(v_grid, 1e-300);
    worst_tau = std::max(worst_tau, gap);
    if (gap > 1e-12) ++bad_tau;

    // Gradient: central differences of the brute-force reduced utility.
    const double h = 1e-5 * std::max(e, 1e-2);
    if (e > h && std::abs(e - d.e_lim) > 1e3 * h) {
      const double fd = (oracle::reduced_utility(op, e + h) - oracle::reduced_utility(op, e - h)) / (2 * h);
      const double g = grad_s(d, e);
      const double rel = std::abs(g - fd) / std::max(std::abs(g), d.alpha);
      worst_grad = std::max(worst_grad, rel);
      ++grad_checked;
      if (rel > 1e-6) ++bad_grad;
    }

    // Concavity on [0, e_opt] by second differences.
    const int m = 50;
    const double step = d.e_opt / m;
    for (int k = 1; k < m; ++k) {
      const double x = k * step;
      const double dd = s_of_e(d, x - step) + s_of_e(d, x + step) - 2 * s_of_e(d, x);
      const double tol = 1e-12 * std::max(1.0, s_of_e(d, x));
      worst_curv = std::max(worst_curv, dd / std::max(1.0, s_of_e(d, x)));
      if (dd > tol) ++bad_concave;
    }
  }
  const double ms = ms_since(t0);
  report(6, bad_tau == 0 && bad_grad == 0 && bad_concave == 0, ms, 60000.0,
         fmt::format("tau: {} bad, worst grid gain {:.2e}; grad: {}/{} bad, worst rel {:.2e}; concavity: {} bad, "
                     "max scaled second diff {:.2e}",
                     bad_tau, worst_tau, bad_grad, grad_checked, worst_grad, bad_concave, worst_curv));
}

void ac7() {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> budget(0.05, 3.5);
  double worst = 0.0;
  std::size_t ap_to_ap = 0, foreign = 0;
  const auto t0 = Clock::now();
  for (int t = 0; t < 20; ++t) {
    const auto inst = testing_support::random_instance(rng, 1 + t % 5, budget(rng));
    const ProtocolSetup setup = make_setup(inst.params, inst.channels);
    const CoopProtocolResult c = run_coop_protocol(setup);
    const WaterfillResult w = waterfill(inst.params, inst.channels);
    const AuctionProtocolResult ap = run_auction_protocol(setup, {});
    const AuctionOutcome a = run_auction(inst.params, inst.channels);
    for (std::size_t i = 0; i < w.e_star.size(); ++i) {
      worst = std::max(worst, std::abs(c.result.e_star[i] - w.e_star[i]));
      worst = std::max(worst, std::abs(c.result.tau_star[i] - w.tau_star[i]));
      worst = std::max(worst, std::abs(ap.outcome.e_final[i] - a.e_final[i]));
      worst = std::max(worst, std::abs(ap.outcome.payment[i] - a.payment[i]));
    }
    worst = std::max(worst, std::abs(c.result.nu - w.nu));
    worst = std::max(worst, std::abs(c.result.welfare - w.welfare) / w.welfare);
    worst = std::max(worst, std::abs(ap.outcome.welfare - a.welfare) / a.welfare);
    for (const auto* tr : {&c.transcript, &ap.transcript}) {
      const LocalityReport rep = audit_locality(*tr);
      ap_to_ap += rep.ap_to_ap;
      foreign += rep.pb_foreign_input;
    }
  }
  const double ms = ms_since(t0);
  report(7, worst <= 1e-10 && ap_to_ap == 0 && foreign == 0, ms, 5000.0,
         fmt::format("20 instances, worst deviation {:.2e}, AP-AP messages {}, non-local PB inputs {}", worst,
                     ap_to_ap, foreign));
}

void ac8() {
  ExperimentConfig cfg;
  cfg.trials = 1000;
  cfg.seed = 1;
  const auto t0 = Clock::now();
  const auto recs = sweep(cfg);
  const double ms = ms_since(t0);
  const auto grid = cfg.grid();
  const std::size_t g = grid.size();

  std::vector<std::string> problems;
  double worst_track = 0.0;
  for (std::size_t n = 0; n < cfg.n_pairs.size(); ++n) {
    const SweepRecord* row = &recs[n * g];
    for (std::size_t k = 1; k < g; ++k)
      if (row[k].welfare_coop < row[k - 1].welfare_coop * (1 - 1e-12))
        problems.push_back(fmt::format("N={} coop decreases at {}", row[k].n_pairs, grid[k]));
    const double gain = row[g - 1].welfare_coop - row[0].welfare_coop;
    const double tail = row[g - 1].welfare_coop - row[g - 2].welfare_coop;
    if (!(gain > 0 && tail <= 1e-3 * gain))
      problems.push_back(fmt::format("N={} coop not saturated (tail {:.3e} of gain {:.3e})", row[0].n_pairs, tail,
                                     gain));
    if (std::abs(row[0].welfare_coop - row[0].welfare_baseline) > 1e-12 * row[0].welfare_baseline)
      problems.push_back(fmt::format("N={} zero budget differs from baseline", row[0].n_pairs));
    for (std::size_t k = 0; k < g; ++k) {
      if (row[k].pb_quit_rate == 0.0) {
        const double rel = (row[k].welfare_coop - row[k].welfare_auction) / row[k].welfare_coop;
        worst_track = std::max(worst_track, rel);
        if (rel > 1e-2 || rel < -1e-12)
          problems.push_back(fmt::format("N={} auction off coop by {:.2e} at {}", row[k].n_pairs, rel, grid[k]));
      }
      if (row[k].pb_quit_rate == 1.0 &&
          std::abs(row[k].welfare_auction - row[k].welfare_baseline) > 1e-12 * row[k].welfare_baseline)
        problems.push_back(fmt::format("N={} all-quit point {} differs from baseline", row[k].n_pairs, grid[k]));
    }
    if (row[g - 1].pb_quit_rate != 1.0)
      problems.push_back(fmt::format("N={} PB still trades at {} J", row[0].n_pairs, grid[g - 1]));
    if (n > 0) {
      const SweepRecord* prev = &recs[(n - 1) * g];
      for (std::size_t k = 0; k < g; ++k) {
        if (!(row[k].welfare_coop > prev[k].welfare_coop))
          problems.push_back(fmt::format("coop N={} <= N={} at {}", row[k].n_pairs, prev[k].n_pairs, grid[k]));
        if (!(row[k].welfare_auction > prev[k].welfare_auction))
          problems.push_back(fmt::format("auction N={} <= N={} at {}", row[k].n_pairs, prev[k].n_pairs, grid[k]));
      }
    }
  }
  std::string detail = fmt::format("{} trials x {} N x {} budgets, worst auction/coop gap while trading {:.2e}",
                                   cfg.trials, cfg.n_pairs.size(), g, worst_track);
  for (std::size_t i = 0; i < std::min<std::size_t>(problems.size(), 5); ++i) detail += "; " + problems[i];
  report(8, problems.empty(), ms, 300000.0, detail);
}

}  // namespace

int main() {
  try {
    ac1();
    ac2();
    ac3();
    ac4();
    ac5();
    ac6();
    ac7();
    ac8();
  } catch (const std::exception& e) {
    fmt::print("acceptance aborted: {}\n", e.what());
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
