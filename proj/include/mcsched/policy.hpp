#pragma once

// Online scheduling policies: the approximate-value policy built on the
// per-file per-region tables, three reference baselines, and the constraint
// validator the simulation runs on every decision.

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "mcsched/model.hpp"
#include "mcsched/numerics.hpp"
#include "mcsched/region_stats.hpp"
#include "mcsched/value_tables.hpp"

namespace mcs {

enum class PolicyKind { Proposed, Baseline1, Baseline2, Baseline3 };

inline const char* policy_name(PolicyKind k) {
  switch (k) {
    case PolicyKind::Proposed: return "proposed";
    case PolicyKind::Baseline1: return "baseline1";
    case PolicyKind::Baseline2: return "baseline2";
    case PolicyKind::Baseline3: return "baseline3";
  }
  return "?";
}

/// Per-episode policy memory: which files the BS has already transmitted
/// (the two baselines with a distinguished first transmission need it).
struct EpisodeFlags {
  std::vector<uint8_t> transmitted;
  explicit EpisodeFlags(int file_count = 0) : transmitted(file_count, 0) {}
};

/// (P, N) for a binding receiver at the given gain, under either cost model.
/// The exact-rate model sizes N so the ergodic rate meets the file size with
/// equality at finite SINR; the closed form is the high-SINR limit.
inline DeliveryPlan plan_for_gain(double gain, const CostKernelParams& p, CostModel m) {
  if (m == CostModel::HighSinr)
    return cost_min_delivery(theta_exponent(gain, p), p);
  return delivery_plan_exact(gain, p);
}

/// Nodes whose large-scale gain reaches the binding receiver's.
inline std::vector<int> decode_set_for_target(const RequestState& rs, double target_gain) {
  std::vector<int> out;
  for (int c = 0; c < int(rs.node_gains.size()); ++c)
    if (rs.node_gains[c] >= target_gain * (1.0 - 1e-12)) out.push_back(c);
  return out;
}

/// Cache-update rule applied at every decoding node: store the requested file
/// when there is spare memory or some cached file is less popular; eviction
/// removes the least popular cached file.
inline std::vector<CacheUpdate> insertion_updates(const CacheState& cache,
                                                  const std::vector<int>& decode,
                                                  int file) {
  std::vector<CacheUpdate> ups;
  for (int c : decode) {
    if (cache.holds(c, file)) continue;
    if (cache.cached_count(c) < cache.capacities[c]) {
      ups.push_back({c, file, +1});
      continue;
    }
    int worst = -1;  // least popular cached file = highest index
    for (int f = cache.files - 1; f >= 0; --f)
      if (cache.holds(c, f)) { worst = f; break; }
    if (worst > file) {
      ups.push_back({c, worst, -1});
      ups.push_back({c, file, +1});
    }
  }
  return ups;
}

inline bool is_offloaded(const RequestState& rs, const CacheState& cache,
                         const NetworkModel& model) {
  return coverage_contains(cache, model, rs.file, rs.location);
}

/// Approximate-value policy: rank the candidate binding receivers (each node
/// not outgunning the user, plus the user), and pick the one minimizing
/// stage cost * q_k plus the per-region values of the post-update CaSI.
/// Candidates are scanned from the smallest decoding set down, so ties break
/// toward fewer receivers and lower power.
inline ScheduleDecision schedule_proposed(const RequestState& rs, const CacheState& cache,
                                          const ValueTables& t,
                                          const CostKernelParams& params,
                                          CostModel cost_model) {
  const int nc = int(rs.node_gains.size());
  const long k = std::min(rs.stage, t.horizon);  // clamp past the truncated horizon
  struct Cand { double gain; std::vector<int> decode; };
  std::vector<Cand> cands;
  cands.push_back({rs.user_gain, decode_set_for_target(rs, rs.user_gain)});
  std::vector<int> order(nc);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return rs.node_gains[a] > rs.node_gains[b];
  });
  for (int c : order)  // descending gain: decoding sets grow down the list
    if (rs.node_gains[c] <= rs.user_gain)
      cands.push_back({rs.node_gains[c], decode_set_for_target(rs, rs.node_gains[c])});

  std::vector<double> j_base(nc);
  for (int c = 0; c < nc; ++c) j_base[c] = j_region(t, cache, k + 1, c);

  ScheduleDecision best;
  double best_q = 0;
  bool found = false;
  CacheState scratch = cache;
  for (const auto& cand : cands) {
    auto plan = plan_for_gain(cand.gain, params, cost_model);
    auto ups = insertion_updates(cache, cand.decode, rs.file);
    double q_val = plan.cost * t.q[k];
    // apply updates on the scratch state, add the changed regions' values
    for (const auto& u : ups) scratch.set(u.node, u.file, u.delta > 0);
    std::vector<int> touched;
    for (const auto& u : ups)
      if (touched.empty() || touched.back() != u.node) touched.push_back(u.node);
    for (int c = 0; c < nc; ++c) q_val += j_base[c];
    for (int c : touched) q_val += j_region(t, scratch, k + 1, c) - j_base[c];
    for (const auto& u : ups) scratch.set(u.node, u.file, u.delta < 0);  // revert
    if (!found || q_val < best_q - 1e-9 * std::max(1.0, best_q)) {
      found = true;
      best_q = q_val;
      best.transmit = true;
      best.power = plan.power;
      best.symbols = plan.symbols;
      best.cache_updates = ups;
    }
  }
  return best;
}

/// Baseline 1: size the transmission for the requesting user only; nodes that
/// happen to decode store opportunistically.
inline ScheduleDecision schedule_baseline1(const RequestState& rs, const CacheState& cache,
                                           const CostKernelParams& params,
                                           CostModel cost_model) {
  auto plan = plan_for_gain(rs.user_gain, params, cost_model);
  ScheduleDecision d;
  d.transmit = true;
  d.power = plan.power;
  d.symbols = plan.symbols;
  d.cache_updates = insertion_updates(cache, decode_set_for_target(rs, rs.user_gain), rs.file);
  return d;
}

/// Baseline 2: the first BS transmission of a file is sized so every cache
/// node (and the user) decodes; afterwards behave as Baseline 1.
inline ScheduleDecision schedule_baseline2(const RequestState& rs, const CacheState& cache,
                                           const CostKernelParams& params,
                                           CostModel cost_model, EpisodeFlags& flags) {
  if (flags.transmitted[rs.file])
    return schedule_baseline1(rs, cache, params, cost_model);
  double target = rs.user_gain;
  for (double g : rs.node_gains) target = std::min(target, g);
  auto plan = plan_for_gain(target, params, cost_model);
  ScheduleDecision d;
  d.transmit = true;
  d.power = plan.power;
  d.symbols = plan.symbols;
  d.cache_updates = insertion_updates(cache, decode_set_for_target(rs, target), rs.file);
  return d;
}

/// Baseline 3: the first transmission is sized for the nodes where the file
/// ranks high-popularity (and the user), and only those nodes store it;
/// afterwards the file is delivered to the user alone.
inline ScheduleDecision schedule_baseline3(const RequestState& rs, const CacheState& cache,
                                           const CostKernelParams& params,
                                           CostModel cost_model, EpisodeFlags& flags) {
  if (flags.transmitted[rs.file]) {
    auto plan = plan_for_gain(rs.user_gain, params, cost_model);
    ScheduleDecision d;
    d.transmit = true;
    d.power = plan.power;
    d.symbols = plan.symbols;
    return d;  // user-only: no opportunistic storage
  }
  double target = rs.user_gain;
  std::vector<int> high_nodes;
  for (int c = 0; c < int(rs.node_gains.size()); ++c)
    if (rs.file < cache.capacities[c]) {
      high_nodes.push_back(c);
      target = std::min(target, rs.node_gains[c]);
    }
  auto plan = plan_for_gain(target, params, cost_model);
  ScheduleDecision d;
  d.transmit = true;
  d.power = plan.power;
  d.symbols = plan.symbols;
  std::vector<int> decode;
  for (int c : high_nodes)
    if (rs.node_gains[c] >= target * (1.0 - 1e-12)) decode.push_back(c);
  d.cache_updates = insertion_updates(cache, decode, rs.file);
  return d;
}

struct SchedulerContext {
  const NetworkModel* model = nullptr;
  CostKernelParams params;
  CostModel cost_model = CostModel::ExactRate;
  const ValueTables* tables = nullptr;  // required by Proposed
};

inline ScheduleDecision dispatch(PolicyKind kind, const RequestState& rs,
                                 const CacheState& cache, const SchedulerContext& ctx,
                                 EpisodeFlags& flags) {
  if (is_offloaded(rs, cache, *ctx.model)) return {};  // no-transmit, cost 0
  ScheduleDecision d;
  switch (kind) {
    case PolicyKind::Proposed:
      if (!ctx.tables)
        throw std::invalid_argument("dispatch: the approximate-value policy needs built tables");
      d = schedule_proposed(rs, cache, *ctx.tables, ctx.params, ctx.cost_model);
      break;
    case PolicyKind::Baseline1:
      d = schedule_baseline1(rs, cache, ctx.params, ctx.cost_model);
      break;
    case PolicyKind::Baseline2:
      d = schedule_baseline2(rs, cache, ctx.params, ctx.cost_model, flags);
      break;
    case PolicyKind::Baseline3:
      d = schedule_baseline3(rs, cache, ctx.params, ctx.cost_model, flags);
      break;
  }
  if (d.transmit) flags.transmitted[rs.file] = 1;
  return d;
}

/// Nodes whose exact ergodic rate at (P, N) reaches the file size.
inline std::vector<int> decoding_set_of(const RequestState& rs, const ScheduleDecision& d,
                                        const CostKernelParams& params) {
  std::vector<int> out;
  if (!d.transmit) return out;
  for (int c = 0; c < int(rs.node_gains.size()); ++c)
    if (ergodic_rate_exact(d.power, d.symbols, rs.node_gains[c], params) >=
        params.file_bits * (1.0 - 1e-9))
      out.push_back(c);
  return out;
}

/// Hard feasibility check run on every simulated decision: peak power, the
/// user's decoding constraint, insertions only at decoding nodes and only of
/// the requested file, removals of cached files, capacities, and the
/// offloading short-circuit.
inline void validate_decision(const RequestState& rs, const ScheduleDecision& d,
                              const CacheState& cache, const NetworkModel& model,
                              const CostKernelParams& params) {
  if (is_offloaded(rs, cache, model)) {
    if (d.transmit || !d.cache_updates.empty())
      throw std::logic_error("validate_decision: action on an offloaded request");
    return;
  }
  if (!d.transmit)
    throw std::logic_error("validate_decision: non-offloaded request left unserved");
  if (!(d.power > 0) || d.power > model.peak_power * (1.0 + 1e-9))
    throw std::logic_error("validate_decision: peak power constraint violated");
  if (!(d.symbols > 0))
    throw std::logic_error("validate_decision: nonpositive symbol count");
  if (ergodic_rate_exact(d.power, d.symbols, rs.user_gain, params) <
      params.file_bits * (1.0 - 1e-6))
    throw std::logic_error("validate_decision: user decoding constraint violated");
  auto decode = decoding_set_of(rs, d, params);
  // apply_cache_updates re-validates insertion legality and capacities
  (void)apply_cache_updates(cache, d, decode, rs.file);
}

}  // namespace mcs
