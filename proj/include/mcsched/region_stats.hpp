#pragma once

// Monte Carlo estimation of the per-region statistics the value-table build
// consumes: coverage probabilities, mean delivery costs mu_c, per-node mean
// costs, and the conditional decode-comparison terms.

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "mcsched/model.hpp"
#include "mcsched/numerics.hpp"

namespace mcs {

enum class CostModel {
  HighSinr,   // closed-form F(theta, P_B)
  ExactRate,  // symbol count corrected against the exact ergodic rate
};

/// Minimum delivery cost for a receiver with the given large-scale gain.
inline double gain_cost(double gain, const CostKernelParams& p, CostModel m) {
  if (m == CostModel::HighSinr)
    return cost_min_delivery(theta_exponent(gain, p), p).cost;
  return delivery_plan_exact(gain, p).cost;
}

/// Weighted (user cost, node cost) sample for the decode-comparison branch
/// where the user's link beats the node's.
struct CostPair {
  double weight = 0;
  double user_cost = 0;
  double node_cost = 0;
};

struct RegionStatistics {
  // index 0 = region with no cache node, index c+1 = node c's disk
  std::vector<double> coverage_prob;
  std::vector<double> mu;        // Pr(l in C_c) * E[cost | l in C_c]
  std::vector<double> mu_se;     // standard errors of mu
  std::vector<double> mean_node_cost;  // E[cost at node c's gain]

  // per node c, conditioned on the user lying outside the union of the other
  // nodes' disks:
  std::vector<double> cov_other_prob;  // Pr(l in union of disks except c)
  std::vector<double> le_prob;         // Pr(user gain <= node gain | outside)
  std::vector<double> le_mean_cost;    // E[user cost | outside, user <= node]
  std::vector<std::vector<CostPair>> gt_pairs;  // weights sum to 1 per node

  long sample_count = 0;

  int node_count() const { return int(mean_node_cost.size()); }
};

/// Monte Carlo over user locations and shadowing. Degenerate conditionals
/// (zero-probability events) leave the corresponding terms at zero weight.
inline RegionStatistics estimate_region_statistics(const NetworkModel& model,
                                                   const CostKernelParams& params,
                                                   long sample_count, Rng& rng,
                                                   CostModel cost_model = CostModel::ExactRate,
                                                   size_t pair_cap = 4000) {
  if (sample_count < 10000)
    throw std::invalid_argument("estimate_region_statistics: need at least 1e4 samples");
  const int nc = model.node_count();
  RegionStatistics st;
  st.sample_count = sample_count;
  st.coverage_prob.assign(nc + 1, 0.0);
  st.mu.assign(nc + 1, 0.0);
  st.mu_se.assign(nc + 1, 0.0);
  st.mean_node_cost.assign(nc, 0.0);
  st.cov_other_prob.assign(nc, 0.0);
  st.le_prob.assign(nc, 0.0);
  st.le_mean_cost.assign(nc, 0.0);
  st.gt_pairs.assign(nc, {});

  std::vector<double> mu_sq(nc + 1, 0.0);
  std::vector<long> region_count(nc + 1, 0);
  std::vector<long> outside_count(nc, 0), le_count(nc, 0), gt_count(nc, 0);
  std::vector<double> le_cost_sum(nc, 0.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  for (long s = 0; s < sample_count; ++s) {
    Point l = model.user_distribution.sample(rng);
    double user_gain = model.pathloss_at(l) * model.sample_shadowing(rng);
    double user_cost = gain_cost(user_gain, params, cost_model);
    int cov = model.covering_node(l);  // -1 when uncovered
    int region = cov + 1;
    region_count[region]++;
    st.mu[region] += user_cost;
    mu_sq[region] += user_cost * user_cost;

    for (int c = 0; c < nc; ++c) {
      double node_gain = model.node_pathloss(c) * model.sample_shadowing(rng);
      double node_cost = gain_cost(node_gain, params, cost_model);
      st.mean_node_cost[c] += node_cost;
      if (cov != -1 && cov != c) continue;  // user inside another node's disk
      outside_count[c]++;
      if (user_gain <= node_gain) {
        le_count[c]++;
        le_cost_sum[c] += user_cost;
      } else {
        gt_count[c]++;
        auto& pairs = st.gt_pairs[c];
        if (pairs.size() < pair_cap) {
          pairs.push_back({1.0, user_cost, node_cost});
        } else {
          // reservoir subsample
          size_t j = size_t(u01(rng) * double(gt_count[c]));
          if (j < pair_cap) pairs[j] = {1.0, user_cost, node_cost};
        }
      }
    }
  }

  const double n = double(sample_count);
  for (int r = 0; r <= nc; ++r) {
    st.coverage_prob[r] = region_count[r] / n;
    double mean = st.mu[r] / n;
    st.mu[r] = mean;
    double var = std::max(0.0, mu_sq[r] / n - mean * mean);
    st.mu_se[r] = std::sqrt(var / n);
  }
  for (int c = 0; c < nc; ++c) {
    st.mean_node_cost[c] /= n;
    st.cov_other_prob[c] = 1.0 - outside_count[c] / n;
    if (outside_count[c] > 0) {
      st.le_prob[c] = double(le_count[c]) / outside_count[c];
      st.le_mean_cost[c] = le_count[c] > 0 ? le_cost_sum[c] / le_count[c] : 0.0;
    }
    double w = st.gt_pairs[c].empty() ? 0.0 : 1.0 / double(st.gt_pairs[c].size());
    for (auto& pr : st.gt_pairs[c]) pr.weight = w;
  }
  return st;
}

}  // namespace mcs
