#pragma once

// Brute-force backward-induction solver for tiny discretized instances.
// The instance is a genuinely finite MDP: user locations, shadowing and the
// candidate (P, N) pairs all live on finite grids, and a receiver decodes
// exactly when its large-scale gain reaches the targeted receiver's gain.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "mcsched/bounds.hpp"
#include "mcsched/model.hpp"
#include "mcsched/numerics.hpp"
#include "mcsched/region_stats.hpp"

namespace mcs {

struct DiscreteInstance {
  struct LocationAtom {
    double prob = 0;
    int node = -1;        // covering cache node, -1 when uncovered
    double pathloss = 0;  // rho at this location
  };
  struct ShadowAtom {
    double prob = 0;
    double gain_mult = 0;
  };

  int file_count = 2;
  std::vector<double> popularity;
  int node_count = 2;
  std::vector<int> capacities;
  std::vector<double> node_pathloss;
  double request_prob = 0.25;  // beta
  long lifetime_frames = 200;  // L
  CostKernelParams params;
  std::vector<LocationAtom> locations;
  std::vector<ShadowAtom> shadow;  // shared per-link grid

  void validate() const {
    double s = 0;
    for (const auto& l : locations) s += l.prob;
    if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("instance: location probs must sum to 1");
    s = 0;
    for (const auto& a : shadow) s += a.prob;
    if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("instance: shadow probs must sum to 1");
    if (int(popularity.size()) != file_count || int(capacities.size()) != node_count ||
        int(node_pathloss.size()) != node_count)
      throw std::invalid_argument("instance: size mismatch");
  }

  double delivery_cost(double gain) const {
    return cost_min_delivery(theta_exponent(gain, params), params).cost;
  }
};

/// One sampled (or enumerated) request event on the instance grids.
struct InstanceEvent {
  int file = 0;
  int loc_idx = 0;
  double user_gain = 0;
  std::vector<double> node_gains;
};

/// Result of acting at an event: realized stage cost and the next CaSI.
struct InstanceAction {
  double cost = 0;           // (P + w) N, zero when offloaded
  double power = 0;
  double symbols = 0;
  int target_node = -2;      // -2 offloaded, -1 user-targeted, >=0 node index
  CacheState next;
};

class ExactOracle {
 public:
  explicit ExactOracle(DiscreteInstance inst, size_t state_cap = 4096)
      : inst_(std::move(inst)) {
    inst_.validate();
    // allowed per-node masks, popcount <= capacity
    node_masks_.resize(inst_.node_count);
    for (int c = 0; c < inst_.node_count; ++c) {
      for (uint32_t m = 0; m < (1u << inst_.file_count); ++m)
        if (__builtin_popcount(m) <= inst_.capacities[c]) node_masks_[c].push_back(m);
      mask_index_.emplace_back(1u << inst_.file_count, -1);
      for (size_t i = 0; i < node_masks_[c].size(); ++i)
        mask_index_[c][node_masks_[c][i]] = int(i);
    }
    state_count_ = 1;
    for (int c = 0; c < inst_.node_count; ++c) state_count_ *= node_masks_[c].size();
    if (state_count_ > state_cap)
      throw std::invalid_argument("ExactOracle: state space above the configured cap");
    q_.assign(inst_.lifetime_frames + 2, 0.0);
    for (long k = 1; k <= inst_.lifetime_frames; ++k)
      q_[k] = binom_tail(k, inst_.lifetime_frames, inst_.request_prob);
  }

  const DiscreteInstance& instance() const { return inst_; }
  size_t state_count() const { return state_count_; }
  double stage_weight(long k) const { return q_[k]; }

  CacheState state_of(size_t id) const {
    CacheState b(inst_.node_count, inst_.file_count, inst_.capacities);
    for (int c = 0; c < inst_.node_count; ++c) {
      uint32_t m = node_masks_[c][id % node_masks_[c].size()];
      id /= node_masks_[c].size();
      for (int f = 0; f < inst_.file_count; ++f)
        if (m & (1u << f)) b.set(c, f, true);
    }
    return b;
  }

  size_t id_of(const CacheState& b) const {
    size_t id = 0, radix = 1;
    for (int c = 0; c < inst_.node_count; ++c) {
      uint32_t m = 0;
      for (int f = 0; f < inst_.file_count; ++f)
        if (b.holds(c, f)) m |= 1u << f;
      id += radix * size_t(mask_index_[c][m]);
      radix *= node_masks_[c].size();
    }
    return id;
  }

  /// Backward induction over k = L..1; result[k][state], result[L+1] = 0.
  std::vector<std::vector<double>> solve() const {
    std::vector<std::vector<double>> w(inst_.lifetime_frames + 2,
                                       std::vector<double>(state_count_, 0.0));
    for (long k = inst_.lifetime_frames; k >= 1; --k)
      for (size_t s = 0; s < state_count_; ++s)
        w[k][s] = expected_stage_value(k, state_of(s), w[k + 1]);
    return w;
  }

  /// Max over (k, state) of |table[k][s] - Bellman RHS|.
  double bellman_residual(const std::vector<std::vector<double>>& w) const {
    double worst = 0;
    for (long k = inst_.lifetime_frames; k >= 1; --k)
      for (size_t s = 0; s < state_count_; ++s)
        worst = std::max(worst,
                         std::abs(w[k][s] - expected_stage_value(k, state_of(s), w[k + 1])));
    return worst;
  }

  /// Argmin of the Bellman RHS at a concrete event. Ties break toward the
  /// smaller decodable set, then lower power.
  InstanceAction greedy_action(long k, const CacheState& b, const InstanceEvent& ev,
                               const std::vector<double>& w_next) const {
    InstanceAction best;
    double best_val = 0;
    bool found = false;
    for_each_action(b, ev, [&](const InstanceAction& a) {
      double val = a.cost * q_[k] + w_next[id_of(a.next)];
      if (!found || val < best_val - 1e-12) {
        best = a;
        best_val = val;
        found = true;
      }
    });
    return best;
  }

  InstanceEvent sample_event(Rng& rng) const {
    InstanceEvent ev;
    std::discrete_distribution<int> fd(inst_.popularity.begin(), inst_.popularity.end());
    ev.file = fd(rng);
    std::vector<double> lp;
    for (const auto& l : inst_.locations) lp.push_back(l.prob);
    std::discrete_distribution<int> ld(lp.begin(), lp.end());
    ev.loc_idx = ld(rng);
    std::vector<double> sp;
    for (const auto& a : inst_.shadow) sp.push_back(a.prob);
    std::discrete_distribution<int> sd(sp.begin(), sp.end());
    ev.user_gain = inst_.locations[ev.loc_idx].pathloss * inst_.shadow[sd(rng)].gain_mult;
    ev.node_gains.resize(inst_.node_count);
    for (int c = 0; c < inst_.node_count; ++c)
      ev.node_gains[c] = inst_.node_pathloss[c] * inst_.shadow[sd(rng)].gain_mult;
    return ev;
  }

  /// Simulate one lifetime under a policy; returns the realized total cost.
  template <typename Policy>
  double rollout(Policy&& policy, Rng& rng) const {
    std::binomial_distribution<long> count(inst_.lifetime_frames, inst_.request_prob);
    long n = count(rng);
    CacheState b(inst_.node_count, inst_.file_count, inst_.capacities);
    double total = 0;
    for (long k = 1; k <= n; ++k) {
      InstanceEvent ev = sample_event(rng);
      InstanceAction a = policy(k, b, ev);
      total += a.cost;
      b = a.next;
    }
    return total;
  }

  /// Enumerate every feasible action at an event: candidate binding receivers
  /// (the user, or any node not outgunning the user), each with all legal
  /// store/evict combinations over the implied decoding set.
  template <typename Fn>
  void for_each_action(const CacheState& b, const InstanceEvent& ev, Fn&& fn) const {
    const auto& loc = inst_.locations[ev.loc_idx];
    if (loc.node >= 0 && b.holds(loc.node, ev.file)) {
      InstanceAction a;
      a.next = b;
      fn(a);  // offloaded: no BS transmission
      return;
    }
    // candidate targets sorted: user first (smallest decode set), then nodes
    // by descending gain
    struct Cand { int node; double gain; };
    std::vector<Cand> cands{{-1, ev.user_gain}};
    for (int c = 0; c < inst_.node_count; ++c)
      if (ev.node_gains[c] <= ev.user_gain) cands.push_back({c, ev.node_gains[c]});
    std::stable_sort(cands.begin() + 1, cands.end(),
                     [](const Cand& a, const Cand& b) { return a.gain > b.gain; });
    for (const auto& cand : cands) {
      auto plan = cost_min_delivery(theta_exponent(cand.gain, inst_.params), inst_.params);
      std::vector<int> decode;
      for (int c = 0; c < inst_.node_count; ++c)
        if (ev.node_gains[c] >= cand.gain) decode.push_back(c);
      // cross product of per-node cache options
      std::function<void(size_t, CacheState&)> rec = [&](size_t i, CacheState& cur) {
        if (i == decode.size()) {
          InstanceAction a;
          a.cost = plan.cost;
          a.power = plan.power;
          a.symbols = plan.symbols;
          a.target_node = cand.node;
          a.next = cur;
          fn(a);
          return;
        }
        int c = decode[i];
        rec(i + 1, cur);  // do not store
        if (!b.holds(c, ev.file)) {
          if (b.cached_count(c) < b.capacities[c]) {
            cur.set(c, ev.file, true);
            rec(i + 1, cur);
            cur.set(c, ev.file, false);
          } else {
            for (int v = 0; v < inst_.file_count; ++v) {
              if (!b.holds(c, v)) continue;
              cur.set(c, ev.file, true);
              cur.set(c, v, false);
              rec(i + 1, cur);
              cur.set(c, ev.file, false);
              cur.set(c, v, true);
            }
          }
        }
      };
      CacheState scratch = b;
      rec(0, scratch);
    }
  }

 private:
  double expected_stage_value(long k, const CacheState& b,
                              const std::vector<double>& w_next) const {
    double acc = 0;
    InstanceEvent ev;
    ev.node_gains.resize(inst_.node_count);
    std::vector<size_t> sh(inst_.node_count, 0);
    for (int f = 0; f < inst_.file_count; ++f) {
      ev.file = f;
      for (size_t li = 0; li < inst_.locations.size(); ++li) {
        ev.loc_idx = int(li);
        for (size_t ui = 0; ui < inst_.shadow.size(); ++ui) {
          ev.user_gain = inst_.locations[li].pathloss * inst_.shadow[ui].gain_mult;
          // odometer over per-node shadowing assignments
          std::fill(sh.begin(), sh.end(), 0);
          while (true) {
            double p = inst_.popularity[f] * inst_.locations[li].prob * inst_.shadow[ui].prob;
            for (int c = 0; c < inst_.node_count; ++c) {
              ev.node_gains[c] = inst_.node_pathloss[c] * inst_.shadow[sh[c]].gain_mult;
              p *= inst_.shadow[sh[c]].prob;
            }
            double best = 0;
            bool found = false;
            for_each_action(b, ev, [&](const InstanceAction& a) {
              double val = a.cost * q_[k] + w_next[id_of(a.next)];
              if (!found || val < best) {
                best = val;
                found = true;
              }
            });
            acc += p * best;
            int c = 0;
            for (; c < inst_.node_count; ++c) {
              if (++sh[c] < inst_.shadow.size()) break;
              sh[c] = 0;
            }
            if (c == inst_.node_count) break;
          }
        }
      }
    }
    return acc;
  }

  DiscreteInstance inst_;
  std::vector<std::vector<uint32_t>> node_masks_;
  std::vector<std::vector<int>> mask_index_;
  size_t state_count_ = 0;
  std::vector<double> q_;
};

/// Exact region statistics of a discrete instance (no Monte Carlo error),
/// suitable for building value tables consistent with the oracle's MDP.
inline RegionStatistics instance_statistics(const DiscreteInstance& inst) {
  const int nc = inst.node_count;
  RegionStatistics st;
  st.coverage_prob.assign(nc + 1, 0.0);
  st.mu.assign(nc + 1, 0.0);
  st.mu_se.assign(nc + 1, 0.0);
  st.mean_node_cost.assign(nc, 0.0);
  st.cov_other_prob.assign(nc, 0.0);
  st.le_prob.assign(nc, 0.0);
  st.le_mean_cost.assign(nc, 0.0);
  st.gt_pairs.assign(nc, {});
  st.sample_count = 0;

  for (const auto& loc : inst.locations) st.coverage_prob[loc.node + 1] += loc.prob;
  for (const auto& loc : inst.locations)
    for (const auto& ush : inst.shadow)
      st.mu[loc.node + 1] +=
          loc.prob * ush.prob * inst.delivery_cost(loc.pathloss * ush.gain_mult);
  for (int c = 0; c < nc; ++c)
    for (const auto& nsh : inst.shadow)
      st.mean_node_cost[c] += nsh.prob * inst.delivery_cost(inst.node_pathloss[c] * nsh.gain_mult);

  for (int c = 0; c < nc; ++c) {
    double outside = 0;
    for (const auto& loc : inst.locations)
      if (loc.node == -1 || loc.node == c) outside += loc.prob;
    st.cov_other_prob[c] = 1.0 - outside;
    if (outside <= 0) continue;
    double le_w = 0, le_cost = 0, gt_w = 0;
    for (const auto& loc : inst.locations) {
      if (!(loc.node == -1 || loc.node == c)) continue;
      for (const auto& ush : inst.shadow) {
        double gu = loc.pathloss * ush.gain_mult;
        double cu = inst.delivery_cost(gu);
        for (const auto& nsh : inst.shadow) {
          double gn = inst.node_pathloss[c] * nsh.gain_mult;
          double w = loc.prob * ush.prob * nsh.prob / outside;
          if (gu <= gn) {
            le_w += w;
            le_cost += w * cu;
          } else {
            gt_w += w;
            st.gt_pairs[c].push_back({w, cu, inst.delivery_cost(gn)});
          }
        }
      }
    }
    st.le_prob[c] = le_w;
    st.le_mean_cost[c] = le_w > 0 ? le_cost / le_w : 0.0;
    for (auto& pr : st.gt_pairs[c]) pr.weight = gt_w > 0 ? pr.weight / gt_w : 0.0;
  }
  return st;
}

/// Bounds evaluator driven by the instance's exact atom weights (the sample
/// set enumerates every (file, location, shadowing) combination, so the
/// standard errors are zero up to floating point).
inline BoundsEvaluator instance_bounds(const DiscreteInstance& inst, long horizon) {
  BoundsEvaluator be;
  be.lifetime_frames = inst.lifetime_frames;
  be.request_prob = inst.request_prob;
  be.horizon = horizon;
  be.popularity = inst.popularity;
  be.q.assign(horizon + 2, 0.0);
  be.tail_q.assign(horizon + 2, 0.0);
  for (long k = 1; k <= horizon + 1; ++k)
    be.q[k] = binom_tail(k, inst.lifetime_frames, inst.request_prob);
  for (long k = horizon; k >= 1; --k) be.tail_q[k] = be.tail_q[k + 1] + be.q[k];

  double rho_min = inst.locations.front().pathloss;
  for (const auto& l : inst.locations) rho_min = std::min(rho_min, l.pathloss);
  be.g_max_value = 0;
  for (const auto& sh : inst.shadow)
    be.g_max_value += sh.prob * inst.delivery_cost(rho_min * sh.gain_mult);
  be.g_max_se = 0;

  for (int f = 0; f < inst.file_count; ++f)
    for (const auto& loc : inst.locations)
      for (const auto& sh : inst.shadow) {
        BoundsEvaluator::Sample s;
        s.weight = inst.popularity[f] * loc.prob * sh.prob;
        s.file = f;
        s.node = loc.node;
        s.cost = inst.delivery_cost(loc.pathloss * sh.gain_mult);
        if (loc.node < 0) be.mu0 += s.weight * s.cost;
        be.samples.push_back(s);
      }
  return be;
}

/// Standard simplified scenario: two single-slot cache nodes, two files,
/// discretized location and shadowing grids with comfortably high SINR.
inline DiscreteInstance make_test_instance() {
  DiscreteInstance inst;
  inst.file_count = 2;
  inst.popularity = FileLibrary::zipf_popularity(2, 1.0);
  inst.node_count = 2;
  inst.capacities = {1, 1};
  inst.node_pathloss = {14.0, 9.0};
  inst.request_prob = 0.25;
  inst.lifetime_frames = 200;
  inst.params.stbc_rate = 1.0;
  inst.params.file_bits = 100.0;
  inst.params.symbol_weight = 1.0;
  inst.params.peak_power = 100.0;
  inst.params.bs_antennas = 2;
  inst.params.noise_power = 1.0;
  inst.locations = {
      {0.20, 0, 16.0},   // inside node 0
      {0.20, 1, 10.0},   // inside node 1
      {0.25, -1, 24.0},  // uncovered, close to the BS
      {0.20, -1, 12.0},
      {0.15, -1, 6.0},   // uncovered, cell edge
  };
  inst.shadow = {{0.25, 0.5}, {0.50, 1.0}, {0.25, 2.0}};
  return inst;
}

}  // namespace mcs
