#include "pbwpcn/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <system_error>
#include <thread>

#include <fmt/core.h>

#include "pbwpcn/coop.hpp"
#include "pbwpcn/rng.hpp"
#include "pbwpcn/summation.hpp"

namespace pbwpcn {

namespace {

// Sums one trial's contribution at every (N, budget) point.
struct PointSample {
  double e_coop = 0.0;
  double e_auction = 0.0;
  double tau_coop = 0.0;
  double tau_auction = 0.0;
  double welfare_coop = 0.0;
  double welfare_auction = 0.0;
  double welfare_baseline = 0.0;
  bool pb_quit = false;
};

double sum_vec(const std::vector<double>& v) { return compensated_sum(v); }

// Bids depend on the round only, never on the budget, so one trial's bid
// path is computed once and replayed for every budget.
class BidPathCache {
 public:
  BidPathCache(std::span<const PairDerived> pairs, const AuctionConfig& cfg) : pairs_(pairs), cfg_(cfg) {}

  std::vector<double> operator()(long round, double price) {
    const auto t = static_cast<std::size_t>(round);
    while (rows_.size() <= t) {
      const double mu = cfg_.reserve_price + double(rows_.size()) * cfg_.price_step;
      std::vector<double> row(pairs_.size());
      for (std::size_t i = 0; i < pairs_.size(); ++i) row[i] = best_response(pairs_[i], mu).energy;
      rows_.push_back(std::move(row));
    }
    (void)price;
    return rows_[t];
  }

 private:
  std::span<const PairDerived> pairs_;
  const AuctionConfig& cfg_;
  std::vector<std::vector<double>> rows_;
};

std::vector<PointSample> run_trial(const ExperimentConfig& cfg, std::span<const double> grid, std::size_t trial) {
  const bool coop = cfg.protocol != Scenario::Auction;
  const bool auction = cfg.protocol != Scenario::Coop;
  const std::size_t n_max = *std::max_element(cfg.n_pairs.begin(), cfg.n_pairs.end());
  const std::vector<PairChannel> all = draw_channels(cfg.channel, cfg.seed, trial, n_max);

  std::vector<PointSample> out;
  out.reserve(cfg.n_pairs.size() * grid.size());
  for (std::size_t n : cfg.n_pairs) {
    SystemParams params = cfg.base;
    params.weights.assign(n, cfg.base.weights.front());
    const std::span<const PairChannel> channels(all.data(), n);
    const std::vector<PairDerived> pairs = derive_pairs(params, channels);

    CompensatedSum baseline;
    for (const PairDerived& d : pairs) {
      baseline += d.link.weight * throughput(d.link, d.channel, ap_only_tau(d), 0.0);
    }
    BidPathCache cache(pairs, cfg.auction);
    BidOracle oracle = std::ref(cache);

    for (double e_b_tot : grid) {
      PointSample s;
      s.welfare_baseline = baseline.value();
      if (coop) {
        const WaterfillResult w = waterfill(pairs, e_b_tot);
        s.e_coop = sum_vec(w.e_star);
        s.tau_coop = sum_vec(w.tau_star);
        s.welfare_coop = w.welfare;
      }
      if (auction) {
        const AuctionOutcome a =
            settle_auction(pairs, run_clinching_auction(e_b_tot, pairs.size(), cfg.auction, oracle));
        s.e_auction = sum_vec(a.e_final);
        s.tau_auction = sum_vec(a.tau_final);
        s.welfare_auction = a.welfare;  // AP utilities plus PB revenue
        s.pb_quit = a.pb_quit;
      }
      out.push_back(s);
    }
  }
  return out;
}

void append_row(std::string& line, double x) {
  line += ',';
  line += format_double(x);
}

std::string header_with_pairs(std::string_view head, std::string_view prefix, std::size_t n) {
  std::string h(head);
  for (std::size_t i = 0; i < n; ++i) h += fmt::format(",{}{}", prefix, i + 1);
  return h;
}

}  // namespace

void ChannelModel::validate() const {
  if (!(d_ap_src > 0.0) || !(d_pb_src > 0.0)) throw std::invalid_argument("channel distances must be > 0");
  if (!(zeta >= 2.0 && zeta <= 5.0)) throw std::invalid_argument(fmt::format("zeta={} outside [2, 5]", zeta));
  if (antennas < 1) throw std::invalid_argument("antennas must be >= 1");
}

double ChannelModel::path_loss(double distance, double zeta) { return 1e-3 * std::pow(distance, -zeta); }

std::vector<PairChannel> draw_channels(const ChannelModel& model, std::uint64_t seed, std::uint64_t trial,
                                       std::size_t n_pairs) {
  model.validate();
  const double l_ap = ChannelModel::path_loss(model.d_ap_src, model.zeta);
  const double l_pb = ChannelModel::path_loss(model.d_pb_src, model.zeta);
  std::vector<PairChannel> out(n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    SubstreamRng rng(seed, trial, static_cast<std::uint32_t>(i));
    out[i].g_pow = l_ap * rng.exponential();
    double k = 0.0;
    for (std::size_t m = 0; m < model.antennas; ++m) k += rng.exponential();
    out[i].k_pow = l_pb * k;
  }
  return out;
}

PaperInstance load_paper_instance(double e_b_tot) {
  PaperInstance inst;
  inst.params = SystemParams::defaults(3, e_b_tot);
  inst.channels = {
      {0.0446e-5, 0.1616e-4},
      {0.1569e-5, 0.6486e-4},
      {0.8628e-5, 0.4379e-4},
  };
  inst.antennas = 4;
  return inst;
}

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::Coop: return "coop";
    case Scenario::Auction: return "auction";
    case Scenario::Both: return "both";
  }
  return "?";
}

Scenario parse_scenario(std::string_view s) {
  if (s == "coop") return Scenario::Coop;
  if (s == "auction") return Scenario::Auction;
  if (s == "both") return Scenario::Both;
  throw std::invalid_argument(fmt::format("unknown protocol '{}' (expected coop, auction or both)", s));
}

void ExperimentConfig::validate() const {
  if (n_pairs.empty()) throw std::invalid_argument("n_pairs must not be empty");
  for (std::size_t n : n_pairs) {
    if (n < 1) throw std::invalid_argument("every n_pairs entry must be >= 1");
  }
  channel.validate();
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  for (double e : e_b_tot_grid) {
    if (!(e >= 0.0) || !std::isfinite(e)) throw std::invalid_argument(fmt::format("e_b_tot_grid entry {} invalid", e));
  }
  if (base.weights.empty()) throw std::invalid_argument("base parameters need one weight");
  base.validate();
  auction.validate();
}

std::vector<double> ExperimentConfig::grid() const { return e_b_tot_grid.empty() ? default_grid() : e_b_tot_grid; }

std::vector<double> ExperimentConfig::default_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 32; ++k) g.push_back(0.25 * k);
  return g;
}

std::vector<SweepRecord> sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<double> grid = cfg.grid();
  std::vector<std::vector<PointSample>> per_trial(cfg.trials);

  unsigned n_threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, cfg.trials));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t t = next++; t < cfg.trials; t = next++) {
      try {
        per_trial[t] = run_trial(cfg, grid, t);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = cfg.trials;
      }
    }
  };
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < n_threads; ++k) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<SweepRecord> records;
  for (std::size_t ni = 0; ni < cfg.n_pairs.size(); ++ni) {
    const std::size_t n = cfg.n_pairs[ni];
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
      const std::size_t idx = ni * grid.size() + gi;
      CompensatedSum e_c, e_a, t_c, t_a, w_c, w_a, w_b;
      std::size_t quits = 0;
      for (const std::vector<PointSample>& trial : per_trial) {
        const PointSample& s = trial[idx];
        e_c += s.e_coop;
        e_a += s.e_auction;
        t_c += s.tau_coop;
        t_a += s.tau_auction;
        w_c += s.welfare_coop;
        w_a += s.welfare_auction;
        w_b += s.welfare_baseline;
        quits += s.pb_quit;
      }
      const double trials = double(cfg.trials);
      const double samples = trials * double(n);
      SweepRecord r;
      r.n_pairs = n;
      r.e_b_tot = grid[gi];
      r.trials = cfg.trials;
      r.mean_e_coop = e_c.value() / samples;
      r.mean_e_auction = e_a.value() / samples;
      r.mean_tau_coop = t_c.value() / samples;
      r.mean_tau_auction = t_a.value() / samples;
      r.welfare_coop = w_c.value() / trials;
      r.welfare_auction = w_a.value() / trials;
      r.welfare_baseline = w_b.value() / trials;
      r.pb_quit_rate = double(quits) / trials;
      records.push_back(r);
    }
  }
  return records;
}

std::vector<BudgetCurvePoint> budget_curve(const SystemParams& params, std::span<const PairChannel> channels,
                                           std::span<const double> grid, const AuctionConfig& auction) {
  const std::vector<PairDerived> pairs = derive_pairs(params, channels);
  BidPathCache cache(pairs, auction);
  BidOracle oracle = std::ref(cache);
  std::vector<BudgetCurvePoint> out;
  for (double e_b_tot : grid) {
    BudgetCurvePoint p;
    p.e_b_tot = e_b_tot;
    WaterfillResult w = waterfill(pairs, e_b_tot);
    p.e_coop = std::move(w.e_star);
    p.tau_coop = std::move(w.tau_star);
    AuctionOutcome a = settle_auction(pairs, run_clinching_auction(e_b_tot, pairs.size(), auction, oracle));
    p.e_auction = std::move(a.e_final);
    p.tau_auction = std::move(a.tau_final);
    p.pb_quit = a.pb_quit;
    out.push_back(std::move(p));
  }
  return out;
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  if (res.ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

void write_convergence_csv(std::ostream& os, const WaterfillResult& coop, const AuctionOutcome& auction) {
  const std::size_t n = coop.e_star.size();
  os << header_with_pairs("algorithm,iteration,price_per_joule,aggregate_j", "e_j_", n) << '\n';
  for (std::size_t k = 0; k < coop.transcript.size(); ++k) {
    const CoopRound& r = coop.transcript[k];
    std::string line = fmt::format("waterfill,{}", k);
    append_row(line, r.nu);
    append_row(line, r.aggregate);
    for (double e : r.responses) append_row(line, e);
    os << line << '\n';
  }
  for (const AuctionRound& r : auction.transcript) {
    std::string line = fmt::format("auction,{}", r.round);
    append_row(line, r.price);
    append_row(line, compensated_sum(r.bids));
    for (double e : r.bids) append_row(line, e);
    os << line << '\n';
  }
}

void write_energy_csv(std::ostream& os, std::span<const BudgetCurvePoint> curve) {
  const std::size_t n = curve.empty() ? 0 : curve.front().e_coop.size();
  os << header_with_pairs(header_with_pairs("e_b_tot_j", "coop_e_j_", n), "auction_e_j_", n) << ",pb_quit\n";
  for (const BudgetCurvePoint& p : curve) {
    std::string line = format_double(p.e_b_tot);
    for (double e : p.e_coop) append_row(line, e);
    for (double e : p.e_auction) append_row(line, e);
    line += p.pb_quit ? ",1" : ",0";
    os << line << '\n';
  }
}

void write_time_csv(std::ostream& os, std::span<const BudgetCurvePoint> curve) {
  const std::size_t n = curve.empty() ? 0 : curve.front().tau_coop.size();
  os << header_with_pairs(header_with_pairs("e_b_tot_j", "coop_tau_", n), "auction_tau_", n) << ",pb_quit\n";
  for (const BudgetCurvePoint& p : curve) {
    std::string line = format_double(p.e_b_tot);
    for (double t : p.tau_coop) append_row(line, t);
    for (double t : p.tau_auction) append_row(line, t);
    line += p.pb_quit ? ",1" : ",0";
    os << line << '\n';
  }
}

void write_means_csv(std::ostream& os, std::span<const SweepRecord> records, Scenario scenario) {
  const bool coop = scenario != Scenario::Auction;
  const bool auction = scenario != Scenario::Coop;
  os << "n_pairs,e_b_tot_j,trials,mean_e_coop_j,mean_e_auction_j,mean_tau_coop,mean_tau_auction\n";
  for (const SweepRecord& r : records) {
    std::string line = fmt::format("{},{},{}", r.n_pairs, format_double(r.e_b_tot), r.trials);
    line += coop ? "," + format_double(r.mean_e_coop) : ",";
    line += auction ? "," + format_double(r.mean_e_auction) : ",";
    line += coop ? "," + format_double(r.mean_tau_coop) : ",";
    line += auction ? "," + format_double(r.mean_tau_auction) : ",";
    os << line << '\n';
  }
}

void write_welfare_csv(std::ostream& os, std::span<const SweepRecord> records, Scenario scenario) {
  const bool coop = scenario != Scenario::Auction;
  const bool auction = scenario != Scenario::Coop;
  os << "n_pairs,e_b_tot_j,trials,welfare_coop,welfare_auction,welfare_baseline,pb_quit_rate\n";
  for (const SweepRecord& r : records) {
    std::string line = fmt::format("{},{},{}", r.n_pairs, format_double(r.e_b_tot), r.trials);
    line += coop ? "," + format_double(r.welfare_coop) : ",";
    line += auction ? "," + format_double(r.welfare_auction) : ",";
    append_row(line, r.welfare_baseline);
    line += auction ? "," + format_double(r.pb_quit_rate) : ",";
    os << line << '\n';
  }
}

void write_file_atomically(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error(fmt::format("cannot open {} for writing", tmp.string()));
    f << content;
    f.close();
    if (!f) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error(fmt::format("write to {} failed", tmp.string()));
    }
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::filesystem::path> run_experiments(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<double> grid = cfg.grid();

  PaperInstance inst = load_paper_instance(1.0);
  inst.params.bandwidth = cfg.base.bandwidth;
  inst.params.noise_power = cfg.base.noise_power;
  inst.params.eta = cfg.base.eta;
  inst.params.p_ap = cfg.base.p_ap;
  inst.params.p_pb = cfg.base.p_pb;
  inst.params.weights.assign(inst.channels.size(), cfg.base.weights.front());

  const WaterfillResult coop = waterfill(inst.params, inst.channels);
  const AuctionOutcome auction = run_auction(inst.params, inst.channels, cfg.auction);
  const std::vector<BudgetCurvePoint> curve = budget_curve(inst.params, inst.channels, grid, cfg.auction);
  const std::vector<SweepRecord> records = sweep(cfg);

  std::vector<std::pair<std::string, std::string>> files;
  auto render = [&](const char* name, auto&& fn) {
    std::ostringstream os;
    fn(os);
    files.emplace_back(name, os.str());
  };
  render("fig3_convergence.csv", [&](std::ostream& os) { write_convergence_csv(os, coop, auction); });
  render("fig4_energy.csv", [&](std::ostream& os) { write_energy_csv(os, curve); });
  render("fig4_time.csv", [&](std::ostream& os) { write_time_csv(os, curve); });
  render("fig5_means.csv", [&](std::ostream& os) { write_means_csv(os, records, cfg.protocol); });
  render("fig6_welfare.csv", [&](std::ostream& os) { write_welfare_csv(os, records, cfg.protocol); });

  std::filesystem::create_directories(cfg.output_dir);
  std::vector<std::filesystem::path> written;
  for (const auto& [name, content] : files) {
    const std::filesystem::path p = cfg.output_dir / name;
    write_file_atomically(p, content);
    written.push_back(p);
  }
  return written;
}

}  // namespace pbwpcn
