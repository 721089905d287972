#pragma once

// Analytical upper and lower bounds on the exact value function: the
// truncation upper bound, the cache-evolution operator pi with its iterated
// lower bound, and the sufficient-memory lower bound.

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "mcsched/model.hpp"
#include "mcsched/numerics.hpp"
#include "mcsched/region_stats.hpp"
#include "mcsched/value_tables.hpp"

namespace mcs {

/// Deterministic cache-evolution map: per node, insert the most popular
/// uncached file when there is spare capacity, otherwise swap the least
/// popular cached file out for it when that improves the cached set.
inline CacheState pi_step(const CacheState& b) {
  CacheState next = b;
  for (int c = 0; c < b.nodes; ++c) {
    int f_min = -1, f_max = -1;
    for (int f = 0; f < b.files; ++f) {
      if (!b.holds(c, f) && f_min < 0) f_min = f;
      if (b.holds(c, f)) f_max = f;
    }
    if (f_min < 0) continue;  // everything cached
    if (b.cached_count(c) < b.capacities[c]) {
      next.set(c, f_min, true);
    } else if (f_max >= 0 && f_min < f_max) {
      next.set(c, f_min, true);
      next.set(c, f_max, false);
    }
  }
  return next;
}

struct BoundsEvaluator {
  struct Sample {
    double weight = 0;
    int file = 0;
    int node = -1;    // covering node of the sampled location, -1 if none
    double cost = 0;  // delivery cost at the sampled user gain
  };

  long lifetime_frames = 0;
  double request_prob = 0;
  long horizon = 0;
  std::vector<double> q;       // q[k] = Pr(N_R >= k), k = 1..horizon+1
  std::vector<double> tail_q;  // suffix sums of q over 1..horizon
  std::vector<double> popularity;
  double g_max_value = 0;  // mean cost at the cell-edge pathloss
  double g_max_se = 0;
  double mu0 = 0;  // Pr(l in C_0) * E[cost | C_0], from the same samples
  std::vector<Sample> samples;

  /// Minimum expected stage cost serving only the requesting user.
  double g_min(const CacheState& b) const {
    double acc = 0;
    for (const auto& s : samples)
      if (s.node < 0 || !b.holds(s.node, s.file)) acc += s.weight * s.cost;
    return acc;
  }

  /// As g_min but for a fixed requested file.
  double g_min_f(const CacheState& b, int f) const {
    double acc = 0;
    for (const auto& s : samples)
      if (s.node < 0 || !b.holds(s.node, f)) acc += s.weight * s.cost;
    return acc;
  }

  /// Standard error of g_min under the stored sample weights.
  double g_min_se(const CacheState& b) const {
    double m = 0, m2 = 0, wsum = 0;
    for (const auto& s : samples) {
      double v = (s.node < 0 || !b.holds(s.node, s.file)) ? s.cost : 0.0;
      m += s.weight * v;
      m2 += s.weight * v * v;
      wsum += s.weight;
    }
    if (wsum <= 0) return 0;
    m /= wsum;
    double var = std::max(0.0, m2 / wsum - m * m);
    return std::sqrt(var / double(std::max<size_t>(samples.size(), 1)));
  }

  /// Iterated-pi lower bound: sum of g_min along the pi trajectory, with the
  /// fixed-point tail collapsed to a constant times the remaining weights.
  double lower1(const CacheState& b, long k) const {
    if (k > horizon) return 0.0;
    double acc = 0;
    CacheState cur = b;
    for (long tau = k; tau <= horizon; ++tau) {
      double g = g_min(cur);
      CacheState nxt = pi_step(cur);
      if (nxt == cur) {
        acc += g * (tail_q[tau]);
        return acc;
      }
      acc += g * q[tau];
      cur = nxt;
    }
    return acc;
  }

  /// Sufficient-memory lower bound, closed form per file without the O(L)
  /// binomial sum (log1p-based powers for tiny beta*p_f).
  double lower2(const CacheState& b, long k) const {
    const long m = lifetime_frames - k + 1;
    if (m <= 0) return 0.0;
    double acc = 0;
    for (size_t f = 0; f < popularity.size(); ++f) {
      const double bp = request_prob * popularity[f];
      if (bp <= 0) continue;
      const double gf = g_min_f(b, int(f));
      const double p_any = -std::expm1(double(m) * std::log1p(-bp));  // 1-(1-bp)^m
      acc += (gf - mu0) * p_any + mu0 * double(m) * bp;
    }
    return std::max(0.0, acc);
  }

  /// Combined lower bound. The sufficient-memory form counts future requests
  /// over L-k+1 frames, which is exact at k = 1 but overcounts at later
  /// stages (stage indices count requests, not frames), so it only
  /// participates at k = 1.
  double lower(const CacheState& b, long k) const {
    double l1 = lower1(b, k);
    return k == 1 ? std::max(l1, lower2(b, 1)) : l1;
  }

  /// Truncation upper bound J_k(B) + g_max * E[max(N_R - horizon, 0)].
  double upper(const CacheState& b, long k, const ValueTables& t) const {
    return j_total(t, b, k) +
           g_max_value * binom_excess_mass(horizon, lifetime_frames, request_prob);
  }
};

/// Mean delivery cost at the cell-edge pathloss, Monte Carlo over shadowing.
inline std::pair<double, double> estimate_g_max(const NetworkModel& model,
                                                const CostKernelParams& params,
                                                long n_samples, Rng& rng,
                                                CostModel cost_model) {
  const double rho_min = model.pathloss(model.cell_radius);
  double m = 0, m2 = 0;
  for (long i = 0; i < n_samples; ++i) {
    double cost = gain_cost(rho_min * model.sample_shadowing(rng), params, cost_model);
    m += cost;
    m2 += cost * cost;
  }
  m /= n_samples;
  m2 /= n_samples;
  return {m, std::sqrt(std::max(0.0, m2 - m * m) / n_samples)};
}

inline BoundsEvaluator make_bounds_evaluator(const NetworkModel& model,
                                             const FileLibrary& lib,
                                             const CostKernelParams& params,
                                             long horizon, long n_samples, Rng& rng,
                                             CostModel cost_model = CostModel::ExactRate) {
  BoundsEvaluator be;
  be.lifetime_frames = lib.lifetime_frames;
  be.request_prob = lib.request_prob;
  be.horizon = horizon;
  be.popularity = lib.popularity;
  be.q.assign(horizon + 2, 0.0);
  be.tail_q.assign(horizon + 2, 0.0);
  for (long k = 1; k <= horizon + 1; ++k)
    be.q[k] = binom_tail(k, lib.lifetime_frames, lib.request_prob);
  for (long k = horizon; k >= 1; --k) be.tail_q[k] = be.tail_q[k + 1] + be.q[k];

  auto gm = estimate_g_max(model, params, n_samples, rng, cost_model);
  be.g_max_value = gm.first;
  be.g_max_se = gm.second;

  std::discrete_distribution<int> file_dist(lib.popularity.begin(), lib.popularity.end());
  be.samples.resize(size_t(n_samples));
  double mu0_acc = 0;
  const double w = 1.0 / double(n_samples);
  for (long i = 0; i < n_samples; ++i) {
    Point l = model.user_distribution.sample(rng);
    double gain = model.pathloss_at(l) * model.sample_shadowing(rng);
    auto& s = be.samples[size_t(i)];
    s.weight = w;
    s.file = file_dist(rng);
    s.node = model.covering_node(l);
    s.cost = gain_cost(gain, params, cost_model);
    if (s.node < 0) mu0_acc += w * s.cost;
  }
  be.mu0 = mu0_acc;
  return be;
}

}  // namespace mcs
