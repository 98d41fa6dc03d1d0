#include "run_config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include <fmt/core.h>
#include <json.hpp>

namespace pbwpcn::cli {

namespace {

using nlohmann::json;

void expect_object(const json& j, const std::string& path, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "/" : path, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError(path + "/" + key, "unknown key");
    }
  }
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

std::uint64_t get_unsigned(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0) return static_cast<std::uint64_t>(j.get<long long>());
  throw ConfigError(path, "expected a non-negative integer");
}

template <class T, class Fn>
void read_opt(const json& obj, const std::string& path, const char* key, T& out, Fn get) {
  if (auto it = obj.find(key); it != obj.end()) out = static_cast<T>(get(*it, path + "/" + key));
}

// Runs `check` and reattributes any std::invalid_argument to `path`.
template <class Fn>
void checked(const std::string& path, Fn check) {
  try {
    check();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + offset, '\n'));
}

}  // namespace

RunConfig default_run_config() {
  RunConfig cfg;
  const PaperInstance inst = load_paper_instance(1.0);
  cfg.params = inst.params;
  cfg.channels = inst.channels;
  cfg.sweep.output_dir = cfg.output_dir;
  return cfg;
}

RunConfig parse_run_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("line {}", line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1)),
                      "JSON syntax error");
  }

  RunConfig cfg = default_run_config();
  expect_object(root, "", {"system", "channels", "auction", "sweep", "output_dir"});

  if (auto it = root.find("channels"); it != root.end()) {
    if (!it->is_array() || it->empty()) throw ConfigError("/channels", "expected a non-empty array");
    cfg.channels.clear();
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string p = fmt::format("/channels/{}", i);
      const json& c = (*it)[i];
      expect_object(c, p, {"g", "k"});
      if (!c.contains("g") || !c.contains("k")) throw ConfigError(p, "needs both \"g\" and \"k\"");
      PairChannel ch{get_number(c["g"], p + "/g"), get_number(c["k"], p + "/k")};
      checked(p, [&] { ch.validate(); });
      cfg.channels.push_back(ch);
    }
  }

  SystemParams& sp = cfg.params;
  double weight = sp.weights.front();
  std::vector<double> weights;
  if (auto it = root.find("system"); it != root.end()) {
    const std::string p = "/system";
    expect_object(*it, p,
                  {"bandwidth_mhz", "noise_power_w", "eta", "p_ap_w", "p_pb_w", "weight_per_mbps", "weights",
                   "e_b_tot_j"});
    read_opt(*it, p, "bandwidth_mhz", sp.bandwidth, get_number);
    read_opt(*it, p, "noise_power_w", sp.noise_power, get_number);
    read_opt(*it, p, "eta", sp.eta, get_number);
    read_opt(*it, p, "p_ap_w", sp.p_ap, get_number);
    read_opt(*it, p, "p_pb_w", sp.p_pb, get_number);
    read_opt(*it, p, "e_b_tot_j", sp.e_b_tot, get_number);
    read_opt(*it, p, "weight_per_mbps", weight, get_number);
    if (it->contains("weights")) {
      if (it->contains("weight_per_mbps")) throw ConfigError(p, "give either weights or weight_per_mbps");
      const json& w = (*it)["weights"];
      if (!w.is_array()) throw ConfigError(p + "/weights", "expected an array");
      for (std::size_t i = 0; i < w.size(); ++i) weights.push_back(get_number(w[i], fmt::format("{}/weights/{}", p, i)));
      if (weights.size() != cfg.channels.size()) {
        throw ConfigError(p + "/weights", fmt::format("{} weights for {} channels", weights.size(), cfg.channels.size()));
      }
    }
  }
  sp.weights = weights.empty() ? std::vector<double>(cfg.channels.size(), weight) : weights;
  checked("/system", [&] { sp.validate(); });

  if (auto it = root.find("auction"); it != root.end()) {
    const std::string p = "/auction";
    expect_object(*it, p, {"reserve_price", "price_step", "max_rounds"});
    read_opt(*it, p, "reserve_price", cfg.auction.reserve_price, get_number);
    read_opt(*it, p, "price_step", cfg.auction.price_step, get_number);
    read_opt(*it, p, "max_rounds", cfg.auction.max_rounds, get_unsigned);
    checked(p, [&] { cfg.auction.validate(); });
  }

  if (auto it = root.find("output_dir"); it != root.end()) {
    if (!it->is_string()) throw ConfigError("/output_dir", "expected a string");
    cfg.output_dir = it->get<std::string>();
  }

  ExperimentConfig& ex = cfg.sweep;
  if (auto it = root.find("sweep"); it != root.end()) {
    const std::string p = "/sweep";
    expect_object(*it, p,
                  {"n_pairs", "trials", "seed", "e_b_tot_grid_j", "protocol", "threads", "d_ap_src_m", "d_pb_src_m",
                   "zeta", "antennas"});
    if (auto n = it->find("n_pairs"); n != it->end()) {
      if (!n->is_array()) throw ConfigError(p + "/n_pairs", "expected an array");
      ex.n_pairs.clear();
      for (std::size_t i = 0; i < n->size(); ++i) {
        ex.n_pairs.push_back(get_unsigned((*n)[i], fmt::format("{}/n_pairs/{}", p, i)));
      }
    }
    if (auto g = it->find("e_b_tot_grid_j"); g != it->end()) {
      if (!g->is_array()) throw ConfigError(p + "/e_b_tot_grid_j", "expected an array");
      ex.e_b_tot_grid.clear();
      for (std::size_t i = 0; i < g->size(); ++i) {
        ex.e_b_tot_grid.push_back(get_number((*g)[i], fmt::format("{}/e_b_tot_grid_j/{}", p, i)));
      }
    }
    read_opt(*it, p, "trials", ex.trials, get_unsigned);
    read_opt(*it, p, "seed", ex.seed, get_unsigned);
    read_opt(*it, p, "threads", ex.threads, get_unsigned);
    read_opt(*it, p, "d_ap_src_m", ex.channel.d_ap_src, get_number);
    read_opt(*it, p, "d_pb_src_m", ex.channel.d_pb_src, get_number);
    read_opt(*it, p, "zeta", ex.channel.zeta, get_number);
    read_opt(*it, p, "antennas", ex.channel.antennas, get_unsigned);
    if (auto s = it->find("protocol"); s != it->end()) {
      if (!s->is_string()) throw ConfigError(p + "/protocol", "expected a string");
      checked(p + "/protocol", [&] { ex.protocol = parse_scenario(s->get<std::string>()); });
    }
  }
  ex.base = sp;
  ex.base.weights = {sp.weights.front()};
  ex.auction = cfg.auction;
  ex.output_dir = cfg.output_dir;
  checked("/sweep", [&] { ex.validate(); });
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError(path.string(), "cannot open config file");
  std::ostringstream ss;
  ss << f.rdbuf();
  try {
    return parse_run_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ":" + e.where(), e.message());
  }
}

void validate(const RunConfig& cfg) {
  checked("/system", [&] { cfg.params.validate(); });
  if (cfg.params.n_pairs() != cfg.channels.size()) throw ConfigError("/system/weights", "weights do not match channels");
  checked("/auction", [&] { cfg.auction.validate(); });
  checked("/sweep", [&] { cfg.sweep.validate(); });
}

}  // namespace pbwpcn::cli
