#pragma once

// Online estimation of popularity, per-region mean costs and the per-stage
// placement terms from observed requests, with periodic table refresh and
// sup-norm convergence detection. All estimators are plain running averages
// with t/(t+1) weights; popularity is deliberately NOT renormalized, the
// drift of its sum is exposed for logging.

#include <cmath>
#include <limits>
#include <random>
#include <utility>
#include <stdexcept>
#include <vector>

#include "mcsched/model.hpp"
#include "mcsched/region_stats.hpp"
#include "mcsched/value_tables.hpp"

namespace mcs {

/// One observation: the multi-cell request-count window feeding the
/// popularity estimate, plus a single in-cell request sample with its
/// realized large-scale gains and delivery costs.
struct LearningEvent {
  std::vector<long> request_counts;  // per file, summed over the cell group
  long window_frames = 1;            // frames spanned by the count window
  int covering_node = -1;            // -1 when the sampled user is uncovered
  double user_cost = 0;              // delivery cost at the user's gain
  double user_gain = 0;
  std::vector<double> node_gains;
  std::vector<double> node_costs;
};

struct LearnerState {
  long t = 0;
  int n_cells = 1;
  long horizon = 0;
  double convergence_threshold = 0;
  FileLibrary library;          // popularity field unused; beta and L are
  std::vector<int> capacities;

  std::vector<double> p_hat;
  std::vector<double> mu_hat;   // size N_C + 1
  std::vector<std::vector<std::vector<double>>> upsilon_hat;  // [c][f][k]

  ValueTables tables;           // current snapshot driving the upsilon updates
  bool has_snapshot = false;

  double popularity_drift() const {
    double s = 0;
    for (double p : p_hat) s += p;
    return s - 1.0;
  }
};

/// Seed the estimators from a stated prior and build the initial tables.
inline LearnerState init_learner(const FileLibrary& lib, const std::vector<int>& capacities,
                                 long horizon, int n_cells, double convergence_threshold,
                                 const std::vector<double>& prior_popularity,
                                 const std::vector<double>& prior_mu,
                                 const std::vector<std::vector<std::vector<double>>>&
                                     prior_upsilon = {}) {
  LearnerState st;
  st.n_cells = n_cells;
  st.horizon = horizon;
  st.convergence_threshold = convergence_threshold;
  st.library = lib;
  st.capacities = capacities;
  st.p_hat = prior_popularity;
  st.mu_hat = prior_mu;
  if (int(st.p_hat.size()) != lib.file_count)
    throw std::invalid_argument("init_learner: prior popularity size mismatch");
  if (int(st.mu_hat.size()) != int(capacities.size()) + 1)
    throw std::invalid_argument("init_learner: prior mu size mismatch");
  if (!prior_upsilon.empty()) {
    st.upsilon_hat = prior_upsilon;
  } else {
    st.upsilon_hat.assign(capacities.size(), {});
    for (size_t c = 0; c < capacities.size(); ++c)
      st.upsilon_hat[c].assign(capacities[c], std::vector<double>(horizon + 2, 0.0));
  }
  ValueTableInputs in{st.p_hat, st.mu_hat, st.upsilon_hat};
  st.tables = build_value_tables(in, lib, capacities, horizon);
  return st;
}

/// Uniform-prior convenience overload: uniform popularity and a flat cost
/// guess shared by every region.
inline LearnerState init_learner(const FileLibrary& lib, const std::vector<int>& capacities,
                                 long horizon, int n_cells, double convergence_threshold,
                                 double mu_prior = 0.0) {
  std::vector<double> p(lib.file_count, 1.0 / lib.file_count);
  std::vector<double> mu(capacities.size() + 1, mu_prior);
  return init_learner(lib, capacities, horizon, n_cells, convergence_threshold, p, mu);
}

/// One running-average step over every estimator. The placement-term samples
/// plug the event's gains into the decode-comparison expression with the
/// continuation values taken from the current table snapshot.
inline void observe(LearnerState& st, const LearningEvent& ev) {
  const int mf = st.library.file_count;
  const int nc = int(st.capacities.size());
  if (int(ev.request_counts.size()) != mf || int(ev.node_gains.size()) != nc ||
      int(ev.node_costs.size()) != nc || ev.window_frames < 1)
    throw std::invalid_argument("observe: malformed event");
  // update t+1 carries weight 1/(t+2): the prior acts as one pseudo-sample,
  // so after n observations every sample (and the prior) weighs 1/(n+1)
  const double a = double(st.t + 1) / double(st.t + 2);
  const double b = 1.0 / double(st.t + 2);

  const double denom =
      st.library.request_prob * double(st.n_cells) * double(ev.window_frames);
  for (int f = 0; f < mf; ++f)
    st.p_hat[f] = a * st.p_hat[f] + b * double(ev.request_counts[f]) / denom;

  for (int r = 0; r <= nc; ++r) {
    double sample = (ev.covering_node + 1 == r) ? ev.user_cost : 0.0;
    st.mu_hat[r] = a * st.mu_hat[r] + b * sample;
  }

  const ValueTables& t = st.tables;
  for (int c = 0; c < nc; ++c) {
    const bool covered_other = ev.covering_node >= 0 && ev.covering_node != c;
    for (int f = 0; f < st.capacities[c]; ++f) {
      for (long k = 1; k <= st.horizon; ++k) {
        double sample;
        if (covered_other) {
          sample = t.w_hat[c][f][k + 1];
        } else if (ev.user_gain <= ev.node_gains[c]) {
          sample = ev.user_cost * t.q[k] + t.j_zero[k + 1][f];
        } else {
          sample = std::min(ev.user_cost * t.q[k] + t.w_hat[c][f][k + 1],
                            ev.node_costs[c] * t.q[k] + t.j_zero[k + 1][f]);
        }
        st.upsilon_hat[c][f][k] = a * st.upsilon_hat[c][f][k] + b * sample;
      }
    }
  }
  st.t += 1;
}

/// Rebuild the tables from the current estimates; report the sup-norm change
/// against the previous snapshot and whether it clears the threshold.
inline std::pair<double, bool> refresh_and_check(LearnerState& st) {
  ValueTableInputs in{st.p_hat, st.mu_hat, st.upsilon_hat};
  ValueTables fresh = build_value_tables(in, st.library, st.capacities, st.horizon);
  double delta = 0;
  if (st.has_snapshot) {
    for (long k = 1; k <= st.horizon; ++k)
      for (int f = 0; f < st.library.file_count; ++f)
        delta = std::max(delta, std::abs(fresh.j_zero[k][f] - st.tables.j_zero[k][f]));
    for (size_t c = 0; c < st.capacities.size(); ++c)
      for (int f = 0; f < st.capacities[c]; ++f)
        for (long k = 1; k <= st.horizon; ++k)
          delta = std::max(delta,
                           std::abs(fresh.w_hat[c][f][k] - st.tables.w_hat[c][f][k]));
  } else {
    delta = std::numeric_limits<double>::infinity();
  }
  bool converged = st.has_snapshot && delta <= st.convergence_threshold;
  st.tables = std::move(fresh);
  st.has_snapshot = true;
  return {delta, converged};
}

/// Draw a synthetic observation from the true model: the popularity window
/// aggregates independent per-cell request streams, and the in-cell sample
/// carries one request's location and link realizations.
inline LearningEvent sample_learning_event(const NetworkModel& model, const FileLibrary& lib,
                                           int n_cells, long window_frames,
                                           const CostKernelParams& params,
                                           CostModel cost_model, Rng& rng) {
  LearningEvent ev;
  ev.window_frames = window_frames;
  ev.request_counts.assign(lib.file_count, 0);
  std::binomial_distribution<long> frame_req(window_frames, lib.request_prob);
  std::discrete_distribution<int> file_dist(lib.popularity.begin(), lib.popularity.end());
  for (int cell = 0; cell < n_cells; ++cell) {
    long n = frame_req(rng);
    for (long i = 0; i < n; ++i) ev.request_counts[file_dist(rng)]++;
  }
  RequestState rs = sample_request(model, lib, 1, rng);
  ev.covering_node = model.covering_node(rs.location);
  ev.user_gain = rs.user_gain;
  ev.user_cost = gain_cost(rs.user_gain, params, cost_model);
  ev.node_gains = rs.node_gains;
  ev.node_costs.resize(model.node_count());
  for (int c = 0; c < model.node_count(); ++c)
    ev.node_costs[c] = gain_cost(rs.node_gains[c], params, cost_model);
  return ev;
}

}  // namespace mcs
