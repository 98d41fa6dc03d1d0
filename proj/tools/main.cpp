// pbwpcn: command-line front end for the allocation solvers, the message
// protocols and the Monte Carlo sweeps.
//
// Exit codes: 0 success, 1 numerical or I/O failure, 2 invalid configuration.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "pbwpcn/auction.hpp"
#include "pbwpcn/coop.hpp"
#include "pbwpcn/errors.hpp"
#include "pbwpcn/experiments.hpp"
#include "pbwpcn/harness.hpp"
#include "pbwpcn/summation.hpp"
#include "run_config.hpp"

namespace {

using namespace pbwpcn;
using cli::ConfigError;
using cli::RunConfig;

constexpr int kExitNumeric = 1;
constexpr int kExitConfig = 2;

struct Overrides {
  std::string config;
  std::optional<double> ebtot;
  std::optional<double> delta;
  std::optional<double> mu0;
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool verbose = false;
};

void setup_logging(bool verbose) {
  auto logger = spdlog::stderr_color_mt("pbwpcn");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("PBWPCN_LOG")) spdlog::set_level(spdlog::level::from_str(env));
  if (verbose) spdlog::set_level(spdlog::level::debug);
}

RunConfig resolve(const Overrides& o) {
  RunConfig cfg = o.config.empty() ? cli::default_run_config() : cli::load_run_config(o.config);
  if (o.ebtot) cfg.params.e_b_tot = *o.ebtot;
  if (o.delta) cfg.auction.price_step = *o.delta;
  if (o.mu0) cfg.auction.reserve_price = *o.mu0;
  if (o.trials) cfg.sweep.trials = *o.trials;
  if (o.seed) cfg.sweep.seed = *o.seed;
  if (o.out) cfg.output_dir = *o.out;
  cfg.sweep.auction = cfg.auction;
  cfg.sweep.output_dir = cfg.output_dir;
  cli::validate(cfg);
  spdlog::debug("config: N={} e_b_tot={} J mu0={} delta={} trials={} seed={}", cfg.channels.size(),
                cfg.params.e_b_tot, cfg.auction.reserve_price, cfg.auction.price_step, cfg.sweep.trials,
                cfg.sweep.seed);
  return cfg;
}

std::string fmt_vec(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += fmt::format("{}{:.6g}", i ? ", " : "", v[i]);
  return s + "]";
}

void print_pairs(const std::vector<PairDerived>& pairs) {
  fmt::print("{:>4}  {:>16}  {:>10}  {:>10}\n", "pair", "alpha[utility/J]", "E_lim[J]", "E_opt[J]");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    fmt::print("{:>4}  {:>16.6f}  {:>10.6f}  {:>10.6f}\n", i + 1, pairs[i].alpha, pairs[i].e_lim, pairs[i].e_opt);
  }
}

void write_out(const RunConfig& cfg, const std::string& name, const std::string& content) {
  std::filesystem::create_directories(cfg.output_dir);
  const auto path = cfg.output_dir / name;
  write_file_atomically(path, content);
  spdlog::info("wrote {}", path.string());
}

int cmd_reference_instance(const RunConfig& cfg, bool check) {
  const std::vector<PairDerived> pairs = derive_pairs(cfg.params, cfg.channels);
  print_pairs(pairs);
  if (!check) return 0;

  // Values for the reference instance, compared as multisets.
  const std::vector<double> ref_alpha{5.6834, 4.7802, 0.4543};
  const std::vector<double> ref_elim{0.1676, 0.0989, 0.3299};
  const std::vector<double> ref_eopt{0.6325, 0.8307, 1.3247};
  auto sorted = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  auto compare = [&](const char* name, std::vector<double> got, std::vector<double> want) {
    got = sorted(std::move(got));
    want = sorted(std::move(want));
    bool ok = got.size() == want.size();
    for (std::size_t i = 0; ok && i < got.size(); ++i) ok = std::abs(got[i] - want[i]) <= 1e-3 * std::abs(want[i]);
    fmt::print("{} {}: got {} want {}\n", ok ? "PASS" : "FAIL", name, fmt_vec(got), fmt_vec(want));
    return ok;
  };
  std::vector<double> a, l, o;
  for (const PairDerived& d : pairs) {
    a.push_back(d.alpha);
    l.push_back(d.e_lim);
    o.push_back(d.e_opt);
  }
  bool ok = compare("alpha [utility/J]", a, ref_alpha);
  ok &= compare("E_lim [J]", l, ref_elim);
  ok &= compare("E_opt [J]", o, ref_eopt);
  return ok ? 0 : kExitNumeric;
}

int cmd_coop(const RunConfig& cfg, bool write) {
  const std::vector<PairDerived> pairs = derive_pairs(cfg.params, cfg.channels);
  const WaterfillResult r = waterfill(pairs, cfg.params.e_b_tot);
  fmt::print("water-filling: N={} E_b_tot={} J rounds={}\n", pairs.size(), cfg.params.e_b_tot, r.rounds);
  fmt::print("nu [utility/J]: {:.10g}\n", r.nu);
  fmt::print("{:>4}  {:>14}  {:>10}  {:>16}\n", "pair", "E*[J]", "tau*", "throughput[Mbps]");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const PairDerived& d = pairs[i];
    fmt::print("{:>4}  {:>14.10f}  {:>10.6f}  {:>16.6f}\n", i + 1, r.e_star[i], r.tau_star[i],
               throughput(d.link, d.channel, r.tau_star[i], r.e_star[i]));
  }
  fmt::print("sum E* [J]: {:.12g}\n", compensated_sum(r.e_star));
  fmt::print("welfare [utility]: {:.10g}\n", r.welfare);
  if (write) {
    nlohmann::ordered_json j;
    j["nu_utility_per_j"] = r.nu;
    j["e_star_j"] = r.e_star;
    j["tau_star"] = r.tau_star;
    j["welfare_utility"] = r.welfare;
    j["rounds"] = r.rounds;
    write_out(cfg, "coop.json", j.dump(2) + "\n");
  }
  return 0;
}

int cmd_auction(const RunConfig& cfg, bool write) {
  const AuctionOutcome a = run_auction(cfg.params, cfg.channels, cfg.auction);
  fmt::print("clinching auction: N={} E_b_tot={} J mu0={} delta={} rounds={}{}\n", cfg.channels.size(),
             cfg.params.e_b_tot, cfg.auction.reserve_price, cfg.auction.price_step, a.rounds_used,
             a.pb_quit ? " (PB quit)" : "");
  fmt::print("final price [utility/J]: {:.10g}\n", a.final_price);
  fmt::print("{:>4}  {:>14}  {:>10}  {:>18}  {:>18}\n", "pair", "E[J]", "tau", "payment[utility]", "AP utility");
  for (std::size_t i = 0; i < a.e_final.size(); ++i) {
    fmt::print("{:>4}  {:>14.10f}  {:>10.6f}  {:>18.10f}  {:>18.10f}\n", i + 1, a.e_final[i], a.tau_final[i],
               a.payment[i], a.ap_utility[i]);
  }
  fmt::print("sum E [J]: {:.12g}\n", compensated_sum(a.e_final));
  fmt::print("PB utility [utility]: {:.10g}\n", a.pb_utility);
  fmt::print("welfare [utility]: {:.10g}\n", a.welfare);
  if (write) {
    std::ostringstream os;
    write_transcript_jsonl(os, std::span<const AuctionRound>(a.transcript));
    write_out(cfg, "auction_transcript.jsonl", os.str());
  }
  return 0;
}

int cmd_protocol(const RunConfig& cfg, Scenario algorithm) {
  const ProtocolSetup setup = make_setup(cfg.params, cfg.channels);
  std::vector<Message> transcript;
  std::string name;
  if (algorithm == Scenario::Coop) {
    CoopProtocolResult r = run_coop_protocol(setup);
    fmt::print("coop protocol: nu={:.10g} utility/J, welfare={:.10g} utility, E*={} J\n", r.result.nu,
               r.result.welfare, fmt_vec(r.result.e_star));
    transcript = std::move(r.transcript);
    name = "protocol_coop.jsonl";
  } else {
    AuctionProtocolResult r = run_auction_protocol(setup, cfg.auction);
    fmt::print("auction protocol: rounds={} final price={:.10g} utility/J, welfare={:.10g} utility, E={} J{}\n",
               r.outcome.rounds_used, r.outcome.final_price, r.outcome.welfare, fmt_vec(r.outcome.e_final),
               r.outcome.pb_quit ? " (PB quit)" : "");
    transcript = std::move(r.transcript);
    name = "protocol_auction.jsonl";
  }
  const LocalityReport loc = audit_locality(transcript);
  fmt::print("messages: {}, AP-to-AP: {}, non-report inputs to PB: {}\n", transcript.size(), loc.ap_to_ap,
             loc.pb_foreign_input);
  std::ostringstream os;
  write_transcript_jsonl(os, std::span<const Message>(transcript));
  write_out(cfg, name, os.str());
  return loc.ok() ? 0 : kExitNumeric;
}

int cmd_sweep(const RunConfig& cfg) {
  spdlog::info("sweep: {} trials, N in {} pairs, seed {}", cfg.sweep.trials, cfg.sweep.n_pairs.size(), cfg.sweep.seed);
  for (const auto& p : run_experiments(cfg.sweep)) fmt::print("{}\n", p.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resource allocation for power-beacon-assisted wireless-powered networks"};
  app.require_subcommand(1, 1);
  Overrides o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON configuration file");
    sub->add_option("--out", o.out, "output directory");
    sub->add_flag("-v,--verbose", o.verbose, "debug logging (PBWPCN_LOG also sets the level)");
  };
  auto add_budget = [&](CLI::App* sub) { sub->add_option("--ebtot", o.ebtot, "PB energy budget, J"); };
  auto add_auction = [&](CLI::App* sub) {
    sub->add_option("--delta", o.delta, "auction price step, utility/J");
    sub->add_option("--mu0", o.mu0, "auction reserve price, utility/J");
  };

  CLI::App* coop = app.add_subcommand("coop", "cooperative water-filling allocation");
  add_common(coop);
  add_budget(coop);

  CLI::App* auction = app.add_subcommand("auction", "ascending clinching auction");
  add_common(auction);
  add_budget(auction);
  add_auction(auction);

  std::string algorithm = "coop";
  CLI::App* protocol = app.add_subcommand("protocol", "run a protocol over the message bus and dump its transcript");
  add_common(protocol);
  add_budget(protocol);
  add_auction(protocol);
  protocol->add_option("--algorithm", algorithm, "coop or auction")->check(CLI::IsMember({"coop", "auction"}));

  CLI::App* sweep = app.add_subcommand("sweep", "Monte Carlo sweep over the PB budget, writes CSV files");
  add_common(sweep);
  add_auction(sweep);
  sweep->add_option("--trials", o.trials, "channel realizations per point");
  sweep->add_option("--seed", o.seed, "64-bit RNG seed");

  bool check = false;
  CLI::App* reference = app.add_subcommand("paper-instance", "per-pair constants of the reference instance");
  add_common(reference);
  reference->add_flag("--check", check, "compare against the reference values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  setup_logging(o.verbose);

  RunConfig cfg;
  try {
    cfg = resolve(o);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kExitConfig;
  }

  const bool write = o.out.has_value();
  try {
    if (*coop) return cmd_coop(cfg, write);
    if (*auction) return cmd_auction(cfg, write);
    if (*protocol) return cmd_protocol(cfg, parse_scenario(algorithm));
    if (*sweep) return cmd_sweep(cfg);
    if (*reference) return cmd_reference_instance(cfg, check);
  } catch (const ConvergenceError& e) {
    fmt::print(stderr, "numerical failure: {}\n", e.what());
  } catch (const ProtocolViolation& e) {
    fmt::print(stderr, "protocol violation: {}\n", e.what());
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
  }
  return kExitNumeric;
}
