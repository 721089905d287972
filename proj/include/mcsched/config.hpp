#pragma once

// JSON experiment configuration: network, library, simulation and sweep
// settings with the default desk-scale parameter set.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcsched/model.hpp"
#include "mcsched/policy.hpp"

namespace mcs {

struct ExperimentConfig {
  // network
  double cell_radius = 500.0;
  double node_radius = 90.0;
  int node_count = 21;              // laid out by default_node_layout when no
  std::vector<Disk> explicit_nodes; // explicit disks are given
  int bs_antennas = 8;
  double stbc_rate = 0.5;
  double pathloss_exponent = 3.76;
  double pathloss_ref = 0.0295;
  double shadowing_sigma_db = 10.0;
  double noise_power = 6.3e-13;
  double peak_power = 50.12;
  double symbol_weight = 1.0;
  std::vector<AnnularRegion> user_regions;  // empty = uniform over the cell

  // library
  int file_count = 10;
  double file_bits = 14e6;
  double zipf_gamma = 1.0;
  std::vector<double> explicit_popularity;
  double request_prob = 1e-3;
  long lifetime_frames = 100000;
  int cache_capacity = 6;

  // simulation
  double epsilon = 1e-6;            // stage-budget tail mass
  long episodes = 500;
  long region_samples = 40000;      // Monte Carlo size for the region stats
  long bound_samples = 40000;
  std::vector<PolicyKind> policies{PolicyKind::Proposed, PolicyKind::Baseline1,
                                   PolicyKind::Baseline2, PolicyKind::Baseline3};
  uint64_t seed = 1;
  int threads = 0;                  // 0 = hardware concurrency

  // sweep: axis in {"none", "beta_l", "zipf_gamma", "cache_ratio"}
  std::string sweep_axis = "none";
  std::vector<double> sweep_values;

  std::string output_dir = ".";

  void validate() const {
    if (episodes < 30) throw std::invalid_argument("config: episodes >= 30");
    for (size_t i = 1; i < sweep_values.size(); ++i)
      if (sweep_values[i] < sweep_values[i - 1])
        throw std::invalid_argument("config: sweep values must be sorted");
    if (sweep_axis != "none" && sweep_axis != "beta_l" && sweep_axis != "zipf_gamma" &&
        sweep_axis != "cache_ratio")
      throw std::invalid_argument("config: unknown sweep axis");
    if (cache_capacity < 0 || cache_capacity > file_count)
      throw std::invalid_argument("config: cache capacity in [0, file_count]");
  }

  NetworkModel make_model() const {
    NetworkModel m;
    m.cell_radius = cell_radius;
    m.cache_nodes = explicit_nodes.empty()
                        ? default_node_layout(cell_radius, node_radius)
                        : explicit_nodes;
    if (explicit_nodes.empty() && node_count < int(m.cache_nodes.size()))
      m.cache_nodes.resize(node_count);
    m.bs_antennas = bs_antennas;
    m.stbc_rate = stbc_rate;
    m.pathloss_exponent = pathloss_exponent;
    m.pathloss_ref = pathloss_ref;
    m.shadowing_sigma_db = shadowing_sigma_db;
    m.noise_power = noise_power;
    m.peak_power = peak_power;
    m.symbol_weight = symbol_weight;
    m.user_distribution = user_regions.empty() ? UserDistribution::uniform(cell_radius)
                                               : UserDistribution{user_regions};
    m.validate();
    return m;
  }

  FileLibrary make_library() const {
    FileLibrary lib;
    lib.file_count = file_count;
    lib.file_bits = file_bits;
    lib.popularity = explicit_popularity.empty()
                         ? FileLibrary::zipf_popularity(file_count, zipf_gamma)
                         : explicit_popularity;
    lib.request_prob = request_prob;
    lib.lifetime_frames = lifetime_frames;
    lib.validate();
    return lib;
  }

  std::vector<int> make_capacities() const {
    int n = explicit_nodes.empty() ? node_count : int(explicit_nodes.size());
    return std::vector<int>(n, cache_capacity);
  }
};

inline PolicyKind policy_from_string(const std::string& s) {
  if (s == "proposed") return PolicyKind::Proposed;
  if (s == "baseline1") return PolicyKind::Baseline1;
  if (s == "baseline2") return PolicyKind::Baseline2;
  if (s == "baseline3") return PolicyKind::Baseline3;
  throw std::invalid_argument("unknown policy: " + s);
}

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{
      {"cell_radius", c.cell_radius},
      {"node_radius", c.node_radius},
      {"node_count", c.node_count},
      {"bs_antennas", c.bs_antennas},
      {"stbc_rate", c.stbc_rate},
      {"pathloss_exponent", c.pathloss_exponent},
      {"pathloss_ref", c.pathloss_ref},
      {"shadowing_sigma_db", c.shadowing_sigma_db},
      {"noise_power", c.noise_power},
      {"peak_power", c.peak_power},
      {"symbol_weight", c.symbol_weight},
      {"file_count", c.file_count},
      {"file_bits", c.file_bits},
      {"zipf_gamma", c.zipf_gamma},
      {"request_prob", c.request_prob},
      {"lifetime_frames", c.lifetime_frames},
      {"cache_capacity", c.cache_capacity},
      {"epsilon", c.epsilon},
      {"episodes", c.episodes},
      {"region_samples", c.region_samples},
      {"bound_samples", c.bound_samples},
      {"seed", c.seed},
      {"threads", c.threads},
      {"sweep_axis", c.sweep_axis},
      {"sweep_values", c.sweep_values},
      {"output_dir", c.output_dir},
  };
  std::vector<std::string> pols;
  for (auto p : c.policies) pols.push_back(policy_name(p));
  j["policies"] = pols;
  if (!c.user_regions.empty()) {
    nlohmann::json regs = nlohmann::json::array();
    for (const auto& r : c.user_regions)
      regs.push_back({{"r_inner", r.r_inner}, {"r_outer", r.r_outer}, {"weight", r.weight}});
    j["user_regions"] = regs;
  }
  if (!c.explicit_popularity.empty()) j["popularity"] = c.explicit_popularity;
  if (!c.explicit_nodes.empty()) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& d : c.explicit_nodes)
      nodes.push_back({{"x", d.center.x}, {"y", d.center.y}, {"radius", d.radius}});
    j["nodes"] = nodes;
  }
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("cell_radius", c.cell_radius);
  get("node_radius", c.node_radius);
  get("node_count", c.node_count);
  get("bs_antennas", c.bs_antennas);
  get("stbc_rate", c.stbc_rate);
  get("pathloss_exponent", c.pathloss_exponent);
  get("pathloss_ref", c.pathloss_ref);
  get("shadowing_sigma_db", c.shadowing_sigma_db);
  get("noise_power", c.noise_power);
  get("peak_power", c.peak_power);
  get("symbol_weight", c.symbol_weight);
  get("file_count", c.file_count);
  get("file_bits", c.file_bits);
  get("zipf_gamma", c.zipf_gamma);
  get("request_prob", c.request_prob);
  get("lifetime_frames", c.lifetime_frames);
  get("cache_capacity", c.cache_capacity);
  get("epsilon", c.epsilon);
  get("episodes", c.episodes);
  get("region_samples", c.region_samples);
  get("bound_samples", c.bound_samples);
  get("seed", c.seed);
  get("threads", c.threads);
  get("sweep_axis", c.sweep_axis);
  get("sweep_values", c.sweep_values);
  get("output_dir", c.output_dir);
  get("popularity", c.explicit_popularity);
  if (j.contains("policies")) {
    c.policies.clear();
    for (const auto& s : j.at("policies"))
      c.policies.push_back(policy_from_string(s.get<std::string>()));
  }
  if (j.contains("user_regions")) {
    c.user_regions.clear();
    for (const auto& r : j.at("user_regions"))
      c.user_regions.push_back({r.at("r_inner").get<double>(), r.at("r_outer").get<double>(),
                                r.at("weight").get<double>()});
  }
  if (j.contains("nodes")) {
    c.explicit_nodes.clear();
    for (const auto& d : j.at("nodes"))
      c.explicit_nodes.push_back(
          {{d.at("x").get<double>(), d.at("y").get<double>()}, d.at("radius").get<double>()});
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  nlohmann::json j;
  in >> j;
  ExperimentConfig c = j.get<ExperimentConfig>();
  c.validate();
  return c;
}

inline void save_config(const ExperimentConfig& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config: " + path);
  nlohmann::json j = c;
  out << j.dump(2) << "\n";
}

}  // namespace mcs
