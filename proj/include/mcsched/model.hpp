#pragma once

// Network / channel / file model, cache-state algebra and the random request
// process. All types are immutable values after construction; operations are
// pure given an explicit RNG stream.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcsched/numerics.hpp"

namespace mcs {

using Rng = std::mt19937_64;

struct Point {
  double x = 0, y = 0;
  double norm() const { return std::hypot(x, y); }
};

struct Disk {
  Point center;
  double radius = 0;
  // closed disk: boundary points count as covered
  bool contains(const Point& p) const {
    double dx = p.x - center.x, dy = p.y - center.y;
    return dx * dx + dy * dy <= radius * radius;
  }
};

/// Piecewise-uniform spatial density over concentric annular regions
/// (r_inner = 0 gives a disk). Region weights sum to 1.
struct AnnularRegion {
  double r_inner = 0, r_outer = 0, weight = 0;
};

struct UserDistribution {
  std::vector<AnnularRegion> regions;

  static UserDistribution uniform(double cell_radius) {
    return UserDistribution{{{0.0, cell_radius, 1.0}}};
  }

  void validate() const {
    double s = 0;
    for (const auto& r : regions) {
      if (r.r_inner < 0 || r.r_outer <= r.r_inner || r.weight < 0)
        throw std::invalid_argument("UserDistribution: bad region");
      s += r.weight;
    }
    if (std::abs(s - 1.0) > 1e-9)
      throw std::invalid_argument("UserDistribution: weights must sum to 1");
  }

  Point sample(Rng& rng) const {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double u = u01(rng), acc = 0;
    const AnnularRegion* chosen = &regions.back();
    for (const auto& r : regions) {
      acc += r.weight;
      if (u <= acc) { chosen = &r; break; }
    }
    double a = chosen->r_inner * chosen->r_inner;
    double b = chosen->r_outer * chosen->r_outer;
    double r = std::sqrt(a + u01(rng) * (b - a));
    double phi = 2.0 * M_PI * u01(rng);
    return {r * std::cos(phi), r * std::sin(phi)};
  }
};

struct NetworkModel {
  double cell_radius = 500.0;
  std::vector<Disk> cache_nodes;
  int bs_antennas = 8;
  double stbc_rate = 0.5;
  double pathloss_exponent = 3.76;
  double pathloss_ref = 0.0295;     // gain at 1 m
  double shadowing_sigma_db = 10.0;
  double noise_power = 6.3e-13;     // W
  double peak_power = 50.12;        // 47 dBm
  double symbol_weight = 1.0;
  UserDistribution user_distribution;

  int node_count() const { return int(cache_nodes.size()); }

  void validate() const {
    if (cell_radius <= 0 || bs_antennas < 1 || pathloss_exponent <= 0 ||
        pathloss_ref <= 0 || shadowing_sigma_db < 0 || noise_power <= 0 ||
        peak_power <= 0 || symbol_weight <= 0)
      throw std::invalid_argument("NetworkModel: physical quantities must be positive");
    if (stbc_rate <= 0 || stbc_rate > 1)
      throw std::invalid_argument("NetworkModel: stbc_rate in (0,1]");
    for (size_t i = 0; i < cache_nodes.size(); ++i) {
      const auto& d = cache_nodes[i];
      if (d.radius <= 0) throw std::invalid_argument("NetworkModel: node radius must be positive");
      if (d.center.norm() + d.radius > cell_radius + 1e-9)
        throw std::invalid_argument("NetworkModel: node disk not inside the cell");
      for (size_t j = i + 1; j < cache_nodes.size(); ++j) {
        const auto& e = cache_nodes[j];
        double dx = d.center.x - e.center.x, dy = d.center.y - e.center.y;
        if (std::hypot(dx, dy) < d.radius + e.radius - 1e-9)
          throw std::invalid_argument("NetworkModel: node service regions overlap");
      }
    }
    user_distribution.validate();
  }

  // distance floored at 1 m to avoid the singularity at the BS
  double pathloss(double dist) const {
    return pathloss_ref * std::pow(std::max(dist, 1.0), -pathloss_exponent);
  }
  double pathloss_at(const Point& p) const { return pathloss(p.norm()); }
  double node_pathloss(int c) const { return pathloss(cache_nodes[c].center.norm()); }

  /// log-normal shadowing: 10^(X/10), X ~ Normal(0, sigma_db^2)
  double sample_shadowing(Rng& rng) const {
    if (shadowing_sigma_db == 0.0) return 1.0;
    std::normal_distribution<double> n(0.0, shadowing_sigma_db);
    return std::pow(10.0, n(rng) / 10.0);
  }

  /// index of the cache node whose disk covers p, or -1
  int covering_node(const Point& p) const {
    for (int c = 0; c < node_count(); ++c)
      if (cache_nodes[c].contains(p)) return c;
    return -1;
  }

  CostKernelParams cost_params(double file_bits, int quadrature_nodes = 64) const {
    CostKernelParams p;
    p.stbc_rate = stbc_rate;
    p.file_bits = file_bits;
    p.symbol_weight = symbol_weight;
    p.peak_power = peak_power;
    p.bs_antennas = bs_antennas;
    p.noise_power = noise_power;
    p.quadrature_nodes = quadrature_nodes;
    return p;
  }
};

struct FileLibrary {
  int file_count = 10;
  double file_bits = 14e6;        // R_F
  std::vector<double> popularity; // nonincreasing, sums to 1
  double request_prob = 1e-3;     // beta
  long lifetime_frames = 100000;  // L

  void validate() const {
    if (file_count < 1 || int(popularity.size()) != file_count)
      throw std::invalid_argument("FileLibrary: popularity size mismatch");
    if (file_bits <= 0) throw std::invalid_argument("FileLibrary: file_bits must be positive");
    if (request_prob < 0 || request_prob > 1)
      throw std::invalid_argument("FileLibrary: request_prob in [0,1]");
    if (lifetime_frames < 1) throw std::invalid_argument("FileLibrary: lifetime_frames >= 1");
    double s = 0;
    for (int f = 0; f < file_count; ++f) {
      if (popularity[f] <= 0 || popularity[f] >= 1)
        throw std::invalid_argument("FileLibrary: popularity entries in (0,1)");
      if (f > 0 && popularity[f] > popularity[f - 1] + 1e-15)
        throw std::invalid_argument("FileLibrary: popularity must be nonincreasing");
      s += popularity[f];
    }
    if (std::abs(s - 1.0) > 1e-12)
      throw std::invalid_argument("FileLibrary: popularity must sum to 1");
  }

  static std::vector<double> zipf_popularity(int m, double gamma) {
    std::vector<double> p(m);
    double s = 0;
    for (int f = 0; f < m; ++f) s += std::pow(f + 1.0, -gamma);
    for (int f = 0; f < m; ++f) p[f] = std::pow(f + 1.0, -gamma) / s;
    return p;
  }
};

/// Binary CaSI matrix with per-node capacities.
struct CacheState {
  int nodes = 0, files = 0;
  std::vector<uint8_t> bits;     // nodes x files, row-major
  std::vector<int> capacities;   // M_c

  CacheState() = default;
  CacheState(int n_nodes, int n_files, std::vector<int> caps)
      : nodes(n_nodes), files(n_files),
        bits(size_t(n_nodes) * n_files, 0), capacities(std::move(caps)) {
    if (int(capacities.size()) != nodes)
      throw std::invalid_argument("CacheState: capacity vector size mismatch");
  }
  CacheState(int n_nodes, int n_files, int cap_all)
      : CacheState(n_nodes, n_files, std::vector<int>(n_nodes, cap_all)) {}

  bool holds(int c, int f) const { return bits[size_t(c) * files + f] != 0; }
  void set(int c, int f, bool v) { bits[size_t(c) * files + f] = v ? 1 : 0; }
  int cached_count(int c) const {
    int s = 0;
    for (int f = 0; f < files; ++f) s += bits[size_t(c) * files + f];
    return s;
  }
  void validate() const {
    for (int c = 0; c < nodes; ++c)
      if (cached_count(c) > capacities[c])
        throw std::invalid_argument("CacheState: capacity exceeded at node " + std::to_string(c));
  }
  bool operator==(const CacheState& o) const {
    return nodes == o.nodes && files == o.files && bits == o.bits;
  }
};

/// One request event with its sampled large-scale coefficients.
struct RequestState {
  long stage = 1;                 // k, 1-based
  int file = 0;                   // A_k, 0-based
  Point location;
  double user_gain = 0;           // rho_k * eta_k
  std::vector<double> node_gains; // rho^c * eta_k^c
};

struct CacheUpdate {
  int node = 0, file = 0, delta = 0;  // delta in {-1, +1}
};

struct ScheduleDecision {
  bool transmit = false;  // false when the request is offloaded to a cache node
  double power = 0;       // P
  double symbols = 0;     // N (continuous; round up only when reporting)
  std::vector<CacheUpdate> cache_updates;
};

inline RequestState sample_request(const NetworkModel& model, const FileLibrary& lib,
                                   long stage, Rng& rng) {
  RequestState r;
  r.stage = stage;
  std::discrete_distribution<int> file_dist(lib.popularity.begin(), lib.popularity.end());
  r.file = file_dist(rng);
  r.location = model.user_distribution.sample(rng);
  r.user_gain = model.pathloss_at(r.location) * model.sample_shadowing(rng);
  r.node_gains.resize(model.node_count());
  for (int c = 0; c < model.node_count(); ++c)
    r.node_gains[c] = model.node_pathloss(c) * model.sample_shadowing(rng);
  return r;
}

/// One lifetime's request sequence: each frame carries a request with
/// probability beta, so the count is Binomial(L, beta). Stage index is the
/// cumulative request count.
inline std::vector<RequestState> sample_request_sequence(const NetworkModel& model,
                                                         const FileLibrary& lib,
                                                         uint64_t rng_seed) {
  Rng rng(rng_seed);
  std::binomial_distribution<long> count(lib.lifetime_frames, lib.request_prob);
  long n = count(rng);
  std::vector<RequestState> out;
  out.reserve(size_t(n));
  for (long k = 1; k <= n; ++k) out.push_back(sample_request(model, lib, k, rng));
  return out;
}

/// Membership test for the union of disks of nodes holding file f.
inline bool coverage_contains(const CacheState& cache, const NetworkModel& model,
                              int file, const Point& p) {
  for (int c = 0; c < cache.nodes; ++c)
    if (cache.holds(c, file) && model.cache_nodes[c].contains(p)) return true;
  return false;
}

/// List of node indices holding file f (the coverage region is the union of
/// their disks).
inline std::vector<int> coverage_region(const CacheState& cache, int file) {
  std::vector<int> out;
  for (int c = 0; c < cache.nodes; ++c)
    if (cache.holds(c, file)) out.push_back(c);
  return out;
}

/// Stage cost (P N + w N) * I[user not offloadable], validating the peak
/// power constraint.
inline double stage_cost(const RequestState& state, const ScheduleDecision& d,
                         const CacheState& cache, const NetworkModel& model) {
  if (d.transmit && d.power > model.peak_power * (1.0 + 1e-12))
    throw std::invalid_argument("stage_cost: peak power constraint violated");
  if (coverage_contains(cache, model, state.file, state.location)) return 0.0;
  if (!d.transmit) return 0.0;
  return (d.power + model.symbol_weight) * d.symbols;
}

/// Apply the decision's cache updates. Insertion of the requested file is only
/// legal at nodes in the decoding set; removals must target cached files; every
/// row must respect its capacity afterwards.
inline CacheState apply_cache_updates(const CacheState& cache, const ScheduleDecision& d,
                                      const std::vector<int>& decoding_set,
                                      int requested_file) {
  CacheState next = cache;
  for (const auto& u : d.cache_updates) {
    if (u.node < 0 || u.node >= cache.nodes || u.file < 0 || u.file >= cache.files)
      throw std::invalid_argument("apply_cache_updates: index out of range");
    if (u.delta == 1) {
      if (u.file != requested_file)
        throw std::invalid_argument("apply_cache_updates: can only insert the requested file");
      if (std::find(decoding_set.begin(), decoding_set.end(), u.node) == decoding_set.end())
        throw std::invalid_argument("apply_cache_updates: insertion at a non-decoding node");
      next.set(u.node, u.file, true);
    } else if (u.delta == -1) {
      if (!cache.holds(u.node, u.file))
        throw std::invalid_argument("apply_cache_updates: removing a non-cached file");
      next.set(u.node, u.file, false);
    } else {
      throw std::invalid_argument("apply_cache_updates: delta must be +-1");
    }
  }
  next.validate();
  return next;
}

/// Default 21-node layout used by the experiments: two rings of disjoint
/// cell-edge disks (a single ring of 21 radius-90 disks does not fit in a
/// 500 m cell).
inline std::vector<Disk> default_node_layout(double cell_radius = 500.0,
                                             double node_radius = 90.0) {
  std::vector<Disk> disks;
  auto ring = [&](int n, double r, double phase) {
    for (int i = 0; i < n; ++i) {
      double a = phase + 2.0 * M_PI * i / n;
      disks.push_back({{r * std::cos(a), r * std::sin(a)}, node_radius});
    }
  };
  ring(14, cell_radius - node_radius, 0.0);
  ring(7, 0.45 * cell_radius, M_PI / 7);
  return disks;
}

}  // namespace mcs
