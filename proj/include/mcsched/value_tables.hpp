#pragma once

// Approximate value-function tables: the per-file no-cache-region values
// J_{k,f,0}, the backward-induction placement values for high-popularity
// files, and the closed-form low-popularity values with the eviction law.
// Build complexity is O(horizon * N_C * M_F); after construction the tables
// are immutable and shared read-only.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mcsched/model.hpp"
#include "mcsched/numerics.hpp"
#include "mcsched/region_stats.hpp"

namespace mcs {

struct ValueTables {
  long horizon = 0;  // truncated stage count M_R^eps
  // all stage-indexed vectors run k = 1..horizon+1 (index 0 unused)
  std::vector<double> q;        // Pr(N_R >= k)
  std::vector<double> tail_q;   // sum_{tau=k}^{horizon} q_tau; 0 at horizon+1
  std::vector<std::vector<double>> j_zero;   // [k][f]
  // per node c, per high-popularity file f (f < capacity[c]):
  std::vector<std::vector<std::vector<double>>> w_hat;    // [c][f][k]
  std::vector<std::vector<std::vector<double>>> upsilon;  // [c][f][k], k <= horizon
  std::vector<double> mu;  // size N_C+1, mu[0] = uncovered region
  std::vector<double> popularity;
  std::vector<int> capacities;
  double request_prob = 0;
  long lifetime_frames = 0;

  int node_count() const { return int(capacities.size()); }
  int file_count() const { return int(popularity.size()); }
};

/// The estimator-facing inputs of a table build: everything the analytic path
/// derives from region statistics, and the learner estimates online.
struct ValueTableInputs {
  std::vector<double> popularity;
  std::vector<double> mu;  // size N_C+1
  std::vector<std::vector<std::vector<double>>> upsilon;  // [c][f][k]
};

namespace detail {

inline void build_stage_weights(ValueTables& t, long L, double beta) {
  t.q.assign(t.horizon + 2, 0.0);
  t.tail_q.assign(t.horizon + 2, 0.0);
  for (long k = 1; k <= t.horizon + 1; ++k) t.q[k] = binom_tail(k, L, beta);
  for (long k = t.horizon; k >= 1; --k) t.tail_q[k] = t.tail_q[k + 1] + t.q[k];
}

inline void build_j_zero(ValueTables& t) {
  const int mf = t.file_count();
  t.j_zero.assign(t.horizon + 2, std::vector<double>(mf, 0.0));
  for (long k = t.horizon; k >= 1; --k)
    for (int f = 0; f < mf; ++f)
      t.j_zero[k][f] = t.j_zero[k + 1][f] + t.popularity[f] * t.q[k] * t.mu[0];
}

// backward induction from given per-stage placement terms upsilon
inline void build_w_hat_from_upsilon(ValueTables& t) {
  const int nc = t.node_count();
  t.w_hat.assign(nc, {});
  for (int c = 0; c < nc; ++c) {
    const int cap = t.capacities[c];
    t.w_hat[c].assign(cap, std::vector<double>(t.horizon + 2, 0.0));
    for (int f = 0; f < cap; ++f) {
      auto& w = t.w_hat[c][f];
      const double pf = t.popularity[f];
      for (long k = t.horizon; k >= 1; --k)
        w[k] = (1.0 - pf) * w[k + 1] + pf * t.upsilon[c][f][k];
    }
  }
}

}  // namespace detail

/// Build tables from Monte Carlo region statistics: the placement term of
/// stage k mixes the covered branch with the decode-comparison branch, the
/// latter evaluated over the stored conditional cost pairs.
inline ValueTables build_value_tables(const RegionStatistics& stats,
                                      const FileLibrary& lib,
                                      const std::vector<int>& capacities,
                                      long horizon) {
  const int nc = stats.node_count();
  if (int(capacities.size()) != nc)
    throw std::invalid_argument("build_value_tables: capacities size mismatch");
  ValueTables t;
  t.horizon = horizon;
  t.mu = stats.mu;
  t.popularity = lib.popularity;
  t.capacities = capacities;
  t.request_prob = lib.request_prob;
  t.lifetime_frames = lib.lifetime_frames;
  detail::build_stage_weights(t, lib.lifetime_frames, lib.request_prob);
  detail::build_j_zero(t);

  t.w_hat.assign(nc, {});
  t.upsilon.assign(nc, {});
  for (int c = 0; c < nc; ++c) {
    const int cap = capacities[c];
    t.w_hat[c].assign(cap, std::vector<double>(horizon + 2, 0.0));
    t.upsilon[c].assign(cap, std::vector<double>(horizon + 2, 0.0));
    const double cov = stats.cov_other_prob[c];
    const double le = stats.le_prob[c];
    const auto& pairs = stats.gt_pairs[c];
    for (int f = 0; f < cap; ++f) {
      auto& w = t.w_hat[c][f];
      auto& ups = t.upsilon[c][f];
      const double pf = t.popularity[f];
      for (long k = horizon; k >= 1; --k) {
        const double w_next = w[k + 1];
        const double j0_next = t.j_zero[k + 1][f];
        double gt_term = 0.0;
        for (const auto& pr : pairs)
          gt_term += pr.weight * std::min(pr.user_cost * t.q[k] + w_next,
                                          pr.node_cost * t.q[k] + j0_next);
        double u = cov * w_next +
                   (1.0 - cov) * (le * (stats.le_mean_cost[c] * t.q[k] + j0_next) +
                                  (1.0 - le) * gt_term);
        ups[k] = u;
        w[k] = (1.0 - pf) * w_next + pf * u;
      }
    }
  }
  return t;
}

/// Build tables from estimator inputs (the learner's refresh path): the
/// placement recursion consumes the provided per-stage terms directly.
inline ValueTables build_value_tables(const ValueTableInputs& in,
                                      const FileLibrary& lib,
                                      const std::vector<int>& capacities,
                                      long horizon) {
  ValueTables t;
  t.horizon = horizon;
  t.mu = in.mu;
  t.popularity = in.popularity;
  t.capacities = capacities;
  t.upsilon = in.upsilon;
  t.request_prob = lib.request_prob;
  t.lifetime_frames = lib.lifetime_frames;
  detail::build_stage_weights(t, lib.lifetime_frames, lib.request_prob);
  detail::build_j_zero(t);
  detail::build_w_hat_from_upsilon(t);
  return t;
}

/// Probability that a cached low-popularity file at node c is evicted exactly
/// at the n-th future request, given the current cache state. D counts the
/// high-popularity slots still to fill before eviction reaches file f.
inline double eviction_prob(const CacheState& cache, int file, int node, long n,
                            const std::vector<double>& popularity) {
  const int cap = cache.capacities[node];
  if (file < cap) throw std::invalid_argument("eviction_prob: file is high-popularity at this node");
  if (n < 0) throw std::invalid_argument("eviction_prob: n must be nonnegative");
  double phi = 0.0;
  int cached_high = 0;
  for (int m = 0; m < cap; ++m) {
    if (cache.holds(node, m))
      cached_high++;
    else
      phi += popularity[m];
  }
  const int d = cap - cached_high;
  if (d == 0) return phi * std::pow(1.0 - phi, double(n));  // transient state
  if (phi <= 0.0) return 0.0;
  if (n < d) return 0.0;
  // negative binomial: C(n-1, d-1) phi^d (1-phi)^(n-d)
  double lp = d * std::log(phi) + (n - d) * std::log1p(-phi);
  if (n > d)
    lp += std::lgamma(double(n)) - std::lgamma(double(d)) - std::lgamma(double(n - d + 1));
  return std::exp(lp);
}

namespace detail {

// sum over n of (sum_{tau=k}^{k+n} q_tau) * eviction_prob(n), shared by all
// cached low-popularity files of a node
inline double low_pop_eviction_term(const ValueTables& t, long k, int d, double phi) {
  if (phi <= 0.0 && d > 0) return 0.0;
  const long n_max = t.horizon - k;
  double acc = 0.0;
  double pn;
  long n0;
  if (d == 0) {
    pn = phi;  // phi * (1-phi)^0
    n0 = 0;
  } else {
    pn = std::pow(phi, double(d));
    n0 = d;
  }
  for (long n = n0; n <= n_max; ++n) {
    double s_kn = t.tail_q[k] - (k + n + 1 <= t.horizon + 1 ? t.tail_q[k + n + 1] : 0.0);
    acc += pn * s_kn;
    // recurrence to n+1
    if (d == 0)
      pn *= (1.0 - phi);
    else
      pn *= (1.0 - phi) * double(n) / double(n + 1 - d);
  }
  return acc;
}

}  // namespace detail

/// Per-region value J_k^c(B) = sum_f J_{k,f,c}(B) for node c (region c+1).
inline double j_region(const ValueTables& t, const CacheState& cache, long k, int c) {
  if (k > t.horizon + 1) throw std::invalid_argument("j_region: k beyond horizon+1");
  if (k == t.horizon + 1) return 0.0;
  const int cap = t.capacities[c];
  const int mf = t.file_count();
  double s = 0.0;
  double phi = 0.0;
  int cached_high = 0;
  for (int f = 0; f < cap; ++f) {
    if (cache.holds(c, f)) {
      cached_high++;
    } else {
      phi += t.popularity[f];
      s += std::max(0.0, t.w_hat[c][f][k] - t.j_zero[k][f]);
    }
  }
  // low-popularity files: plain tail sum when uncached, tail sum minus the
  // eviction-weighted partial sums when cached
  double p_low_all = 0.0, p_low_cached = 0.0;
  for (int f = cap; f < mf; ++f) {
    p_low_all += t.popularity[f];
    if (cache.holds(c, f)) p_low_cached += t.popularity[f];
  }
  const double mu_c = t.mu[c + 1];
  double low = p_low_all * t.tail_q[k];
  if (p_low_cached > 0.0) {
    const double ek = detail::low_pop_eviction_term(t, k, cap - cached_high, phi);
    low -= p_low_cached * ek;
  }
  s += std::max(0.0, mu_c * low);
  return s;
}

/// Single-file per-region value J_{k,f,c}; test/reporting accessor.
inline double j_file_region(const ValueTables& t, const CacheState& cache, long k,
                            int f, int c) {
  if (k == t.horizon + 1) return 0.0;
  const int cap = t.capacities[c];
  if (f < cap) {
    if (cache.holds(c, f)) return 0.0;
    return std::max(0.0, t.w_hat[c][f][k] - t.j_zero[k][f]);
  }
  const double base = t.popularity[f] * t.mu[c + 1];
  if (!cache.holds(c, f)) return base * t.tail_q[k];
  double phi = 0.0;
  int cached_high = 0;
  for (int m = 0; m < cap; ++m) {
    if (cache.holds(c, m))
      cached_high++;
    else
      phi += t.popularity[m];
  }
  const double ek = detail::low_pop_eviction_term(t, k, cap - cached_high, phi);
  return std::max(0.0, base * (t.tail_q[k] - ek));
}

/// Aggregate J_k(B) = sum_f J_{k,f,0} + sum_c J_k^c(B); zero beyond horizon.
inline double j_total(const ValueTables& t, const CacheState& cache, long k) {
  if (k > t.horizon + 1) throw std::invalid_argument("j_total: k beyond horizon+1");
  if (k == t.horizon + 1) return 0.0;
  double s = 0.0;
  for (int f = 0; f < t.file_count(); ++f) s += t.j_zero[k][f];
  for (int c = 0; c < t.node_count(); ++c) s += j_region(t, cache, k, c);
  return s;
}

}  // namespace mcs
