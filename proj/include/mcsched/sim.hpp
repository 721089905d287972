#pragma once

// Monte Carlo experiment harness: seeded episode simulation with the
// constraint validator in the loop, sweep driver with bound overlays, and
// deterministic CSV / JSON manifest emission.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mcsched/bounds.hpp"
#include "mcsched/config.hpp"
#include "mcsched/model.hpp"
#include "mcsched/policy.hpp"
#include "mcsched/region_stats.hpp"
#include "mcsched/value_tables.hpp"

namespace mcs {

struct EpisodeMetrics {
  double total_cost = 0;
  long n_requests = 0;
  long n_hits = 0;
  bool has_hitting = false;  // absent when the episode had no requests
  double hitting_rate = 0;
};

namespace detail {

// splitmix64: decorrelates (base seed, point, episode) into stream seeds
inline uint64_t mix_seed(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t episode_seed(uint64_t base, long point, long episode) {
  return mix_seed(base ^ mix_seed(uint64_t(point) << 32 ^ uint64_t(episode)));
}

// deterministic parallel map: results land in a preallocated slot per index
inline void parallel_for(long n, int threads, const std::function<void(long)>& body) {
  if (threads <= 0) threads = int(std::thread::hardware_concurrency());
  if (threads <= 1 || n <= 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<long> next{0};
  std::exception_ptr err;
  std::mutex err_mtx;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (long i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mtx);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace detail

/// One lifetime under one policy. The same seed yields the same request
/// sequence for every policy (common random numbers), and every decision
/// passes the constraint validator before it is applied.
inline EpisodeMetrics run_episode(const NetworkModel& model, const FileLibrary& lib,
                                  const SchedulerContext& ctx, PolicyKind policy,
                                  const CacheState& initial, uint64_t seed) {
  auto requests = sample_request_sequence(model, lib, seed);
  EpisodeMetrics m;
  m.n_requests = long(requests.size());
  CacheState cache = initial;
  EpisodeFlags flags(lib.file_count);
  for (const auto& rs : requests) {
    bool hit = is_offloaded(rs, cache, model);
    if (hit) m.n_hits++;
    ScheduleDecision d = dispatch(policy, rs, cache, ctx, flags);
    validate_decision(rs, d, cache, model, ctx.params);
    m.total_cost += stage_cost(rs, d, cache, model);
    cache = apply_cache_updates(cache, d, decoding_set_of(rs, d, ctx.params), rs.file);
  }
  if (m.n_requests > 0) {
    m.has_hitting = true;
    m.hitting_rate = double(m.n_hits) / double(m.n_requests);
  }
  return m;
}

/// All episodes of one policy at one sweep point, parallel over episodes with
/// per-episode seeds; the result vector order is deterministic.
inline std::vector<EpisodeMetrics> run_policy_episodes(
    const NetworkModel& model, const FileLibrary& lib, const SchedulerContext& ctx,
    PolicyKind policy, const CacheState& initial, uint64_t base_seed, long point,
    long episodes, int threads) {
  std::vector<EpisodeMetrics> out(static_cast<size_t>(episodes));
  detail::parallel_for(episodes, threads, [&](long e) {
    out[size_t(e)] = run_episode(model, lib, ctx, policy, initial,
                                 detail::episode_seed(base_seed, point, e));
  });
  return out;
}

struct SweepRow {
  double axis_value = 0;
  std::string policy;
  long episodes = 0;
  double mean_cost = 0, se_cost = 0;
  double mean_hitting = 0, se_hitting = 0;
  long hitting_episodes = 0;
  double lower1 = 0, upper1 = 0;  // bound overlays at the initial CaSI
};

struct SweepResults {
  ExperimentConfig config;
  std::vector<SweepRow> rows;
  // per (point, policy) raw episode metrics for paired analysis
  std::vector<std::vector<std::vector<EpisodeMetrics>>> raw;
};

inline std::pair<double, double> mean_se(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double m = 0;
  for (double x : v) m += x;
  m /= double(v.size());
  double s2 = 0;
  for (double x : v) s2 += (x - m) * (x - m);
  if (v.size() > 1) s2 /= double(v.size() - 1);
  return {m, std::sqrt(s2 / double(v.size()))};
}

/// Instantiate a sweep point: the axis rescales one knob of the base config.
inline ExperimentConfig apply_sweep_value(ExperimentConfig c, const std::string& axis,
                                          double v) {
  if (axis == "beta_l") {
    c.request_prob = v / double(c.lifetime_frames);
  } else if (axis == "zipf_gamma") {
    c.zipf_gamma = v;
    c.explicit_popularity.clear();
  } else if (axis == "cache_ratio") {
    c.cache_capacity = int(std::lround(v * c.file_count));
  } else if (axis != "none") {
    throw std::invalid_argument("apply_sweep_value: unknown axis " + axis);
  }
  return c;
}

inline SweepResults run_sweep(const ExperimentConfig& base) {
  base.validate();
  SweepResults res;
  res.config = base;
  std::vector<double> values =
      base.sweep_axis == "none" ? std::vector<double>{0.0} : base.sweep_values;
  for (long pt = 0; pt < long(values.size()); ++pt) {
    ExperimentConfig cfg = apply_sweep_value(base, base.sweep_axis, values[pt]);
    NetworkModel model = cfg.make_model();
    FileLibrary lib = cfg.make_library();
    CostKernelParams params = model.cost_params(lib.file_bits);
    long horizon = stage_budget(cfg.epsilon, lib.lifetime_frames, lib.request_prob);
    horizon = std::max<long>(horizon, 1);

    Rng stat_rng(detail::mix_seed(cfg.seed ^ 0x5741u) + uint64_t(pt));
    auto stats = estimate_region_statistics(model, params, cfg.region_samples, stat_rng,
                                            CostModel::ExactRate);
    auto capacities = cfg.make_capacities();
    ValueTables tables = build_value_tables(stats, lib, capacities, horizon);
    Rng bound_rng(detail::mix_seed(cfg.seed ^ 0xB0D5u) + uint64_t(pt));
    BoundsEvaluator bounds = make_bounds_evaluator(model, lib, params, horizon,
                                                   cfg.bound_samples, bound_rng,
                                                   CostModel::ExactRate);
    CacheState initial(model.node_count(), lib.file_count, capacities);
    SchedulerContext ctx;
    ctx.model = &model;
    ctx.params = params;
    ctx.cost_model = CostModel::ExactRate;
    ctx.tables = &tables;

    res.raw.emplace_back();
    for (PolicyKind policy : cfg.policies) {
      auto eps = run_policy_episodes(model, lib, ctx, policy, initial, cfg.seed, pt,
                                     cfg.episodes, cfg.threads);
      std::vector<double> costs, hits;
      for (const auto& m : eps) {
        costs.push_back(m.total_cost);
        if (m.has_hitting) hits.push_back(m.hitting_rate);
      }
      auto [mc, sc] = mean_se(costs);
      auto [mh, sh] = mean_se(hits);
      SweepRow row;
      row.axis_value = values[pt];
      row.policy = policy_name(policy);
      row.episodes = cfg.episodes;
      row.mean_cost = mc;
      row.se_cost = sc;
      row.mean_hitting = mh;
      row.se_hitting = sh;
      row.hitting_episodes = long(hits.size());
      row.lower1 = bounds.lower(initial, 1);
      row.upper1 = bounds.upper(initial, 1, tables);
      res.rows.push_back(row);
      res.raw.back().push_back(std::move(eps));
    }
  }
  return res;
}

namespace detail {

inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace detail

/// Tidy CSV (one row per point and policy) plus a JSON manifest with the
/// axes, units and seed; output is byte-stable for a fixed config.
inline void emit_plot_data(const SweepResults& res, const std::string& csv_path,
                           const std::string& manifest_path) {
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot write " + csv_path);
  csv << "axis,axis_value,policy,episodes,mean_cost,se_cost,mean_hitting,se_hitting,"
         "hitting_episodes,lower1,upper1\n";
  for (const auto& r : res.rows) {
    csv << res.config.sweep_axis << ',' << detail::fmt_double(r.axis_value) << ','
        << r.policy << ',' << r.episodes << ',' << detail::fmt_double(r.mean_cost) << ','
        << detail::fmt_double(r.se_cost) << ',' << detail::fmt_double(r.mean_hitting)
        << ',' << detail::fmt_double(r.se_hitting) << ',' << r.hitting_episodes << ','
        << detail::fmt_double(r.lower1) << ',' << detail::fmt_double(r.upper1) << '\n';
  }
  csv.close();

  nlohmann::json manifest;
  manifest["config"] = res.config;
  manifest["axis"] = res.config.sweep_axis;
  manifest["columns"] = {"axis",       "axis_value",   "policy",
                         "episodes",   "mean_cost",    "se_cost",
                         "mean_hitting", "se_hitting", "hitting_episodes",
                         "lower1",     "upper1"};
  manifest["units"] = {{"mean_cost", "weighted symbols (power+weight per symbol)"},
                       {"mean_hitting", "fraction of requests served from cache"}};
  manifest["seed"] = res.config.seed;
  std::ofstream mf(manifest_path);
  if (!mf) throw std::runtime_error("cannot write " + manifest_path);
  mf << manifest.dump(2) << "\n";
}

}  // namespace mcs
