// Command-line front end: build tables, run episodes and sweeps, dump the
// analytical bounds, solve the small discrete reference instance exactly, and
// trace the online estimators' convergence. All outputs are CSV (plus a JSON
// manifest for sweeps) and fully determined by (config, seed).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcsched/learning.hpp"
#include "mcsched/oracle.hpp"
#include "mcsched/sim.hpp"

using namespace mcs;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string output_dir;
  uint64_t seed = 0;
  bool seed_set = false;
  double epsilon = -1;
  std::vector<std::string> policies;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("-c,--config", o.config_path, "JSON experiment config");
  cmd->add_option("-o,--output", o.output_dir, "output directory");
  cmd->add_option("-s,--seed", o.seed, "base RNG seed (overrides config and MCSCHED_SEED)")
      ->each([&](const std::string&) { o.seed_set = true; });
  cmd->add_option("-e,--epsilon", o.epsilon, "stage-budget tail mass");
  cmd->add_option("-p,--policy", o.policies, "policies to run (repeatable)")
      ->check(CLI::IsMember({"proposed", "baseline1", "baseline2", "baseline3"}));
}

ExperimentConfig resolve_config(const CommonOpts& o) {
  ExperimentConfig cfg;
  if (!o.config_path.empty()) cfg = load_config(o.config_path);
  if (const char* env = std::getenv("MCSCHED_SEED")) cfg.seed = std::strtoull(env, nullptr, 10);
  if (o.seed_set) cfg.seed = o.seed;
  if (o.epsilon > 0) cfg.epsilon = o.epsilon;
  if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
  if (!o.policies.empty()) {
    cfg.policies.clear();
    for (const auto& s : o.policies) cfg.policies.push_back(policy_from_string(s));
  }
  cfg.validate();
  std::filesystem::create_directories(cfg.output_dir);
  return cfg;
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.output_dir) / name).string();
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  return f;
}

std::string g17(double x) { return detail::fmt_double(x); }

struct BuiltContext {
  NetworkModel model;
  FileLibrary lib;
  CostKernelParams params;
  long horizon = 0;
  ValueTables tables;
};

BuiltContext build_tables(const ExperimentConfig& cfg) {
  BuiltContext b;
  b.model = cfg.make_model();
  b.lib = cfg.make_library();
  b.params = b.model.cost_params(b.lib.file_bits);
  b.horizon = std::max<long>(1, stage_budget(cfg.epsilon, b.lib.lifetime_frames,
                                             b.lib.request_prob));
  Rng rng(detail::mix_seed(cfg.seed ^ 0x5741u));
  auto stats = estimate_region_statistics(b.model, b.params, cfg.region_samples, rng,
                                          CostModel::ExactRate);
  b.tables = build_value_tables(stats, b.lib, cfg.make_capacities(), b.horizon);
  return b;
}

int cmd_tables(const CommonOpts& o) {
  auto cfg = resolve_config(o);
  auto b = build_tables(cfg);
  auto csv = open_csv(out_path(cfg, "tables.csv"));
  csv << "kind,node,file,stage,value\n";
  for (long k = 1; k <= b.horizon; ++k) {
    csv << "q,-1,-1," << k << ',' << g17(b.tables.q[k]) << '\n';
    for (int f = 0; f < b.lib.file_count; ++f)
      csv << "j_zero,-1," << f << ',' << k << ',' << g17(b.tables.j_zero[k][f]) << '\n';
  }
  for (int c = 0; c < b.tables.node_count(); ++c)
    for (int f = 0; f < b.tables.capacities[c]; ++f)
      for (long k = 1; k <= b.horizon; ++k) {
        csv << "w_hat," << c << ',' << f << ',' << k << ','
            << g17(b.tables.w_hat[c][f][k]) << '\n';
        csv << "upsilon," << c << ',' << f << ',' << k << ','
            << g17(b.tables.upsilon[c][f][k]) << '\n';
      }
  std::cout << "tables: horizon " << b.horizon << ", " << b.tables.node_count()
            << " nodes, written to " << out_path(cfg, "tables.csv") << "\n";
  return 0;
}

int cmd_episode(const CommonOpts& o, long episodes) {
  auto cfg = resolve_config(o);
  auto b = build_tables(cfg);
  SchedulerContext ctx;
  ctx.model = &b.model;
  ctx.params = b.params;
  ctx.cost_model = CostModel::ExactRate;
  ctx.tables = &b.tables;
  CacheState initial(b.model.node_count(), b.lib.file_count, cfg.make_capacities());
  auto csv = open_csv(out_path(cfg, "episodes.csv"));
  csv << "policy,episode,total_cost,n_requests,n_hits,hitting_rate\n";
  for (PolicyKind policy : cfg.policies) {
    auto ms = run_policy_episodes(b.model, b.lib, ctx, policy, initial, cfg.seed, 0,
                                  episodes, cfg.threads);
    for (long e = 0; e < episodes; ++e) {
      const auto& m = ms[size_t(e)];
      csv << policy_name(policy) << ',' << e << ',' << g17(m.total_cost) << ','
          << m.n_requests << ',' << m.n_hits << ','
          << (m.has_hitting ? g17(m.hitting_rate) : "") << '\n';
    }
  }
  std::cout << "episodes written to " << out_path(cfg, "episodes.csv") << "\n";
  return 0;
}

int cmd_sweep(const CommonOpts& o) {
  auto cfg = resolve_config(o);
  auto res = run_sweep(cfg);
  emit_plot_data(res, out_path(cfg, "sweep.csv"), out_path(cfg, "sweep_manifest.json"));
  std::cout << res.rows.size() << " rows written to " << out_path(cfg, "sweep.csv") << "\n";
  return 0;
}

int cmd_bounds(const CommonOpts& o) {
  auto cfg = resolve_config(o);
  auto b = build_tables(cfg);
  Rng rng(detail::mix_seed(cfg.seed ^ 0xB0D5u));
  auto be = make_bounds_evaluator(b.model, b.lib, b.params, b.horizon, cfg.bound_samples,
                                  rng, CostModel::ExactRate);
  CacheState initial(b.model.node_count(), b.lib.file_count, cfg.make_capacities());
  auto csv = open_csv(out_path(cfg, "bounds.csv"));
  csv << "stage,lower1,lower2,lower,j_total,upper\n";
  for (long k = 1; k <= b.horizon; ++k)
    csv << k << ',' << g17(be.lower1(initial, k)) << ',' << g17(be.lower2(initial, k))
        << ',' << g17(be.lower(initial, k)) << ',' << g17(j_total(b.tables, initial, k))
        << ',' << g17(be.upper(initial, k, b.tables)) << '\n';
  std::cout << "bounds written to " << out_path(cfg, "bounds.csv") << "\n";
  return 0;
}

int cmd_oracle(const CommonOpts& o, long lifetime) {
  auto cfg = resolve_config(o);
  auto inst = make_test_instance();
  if (lifetime > 0) inst.lifetime_frames = lifetime;
  ExactOracle oracle(inst);
  auto w = oracle.solve();
  auto csv = open_csv(out_path(cfg, "oracle.csv"));
  csv << "stage,state,value\n";
  for (long k = 1; k <= inst.lifetime_frames + 1; ++k)
    for (size_t s = 0; s < oracle.state_count(); ++s)
      csv << k << ',' << s << ',' << g17(w[k][s]) << '\n';
  std::cout << "exact values for " << oracle.state_count() << " states over "
            << inst.lifetime_frames << " frames written to " << out_path(cfg, "oracle.csv")
            << "; Bellman residual " << oracle.bellman_residual(w) << "\n";
  return 0;
}

int cmd_learn(const CommonOpts& o, long events, long refresh_every, int n_cells,
              long window) {
  auto cfg = resolve_config(o);
  auto model = cfg.make_model();
  auto lib = cfg.make_library();
  auto params = model.cost_params(lib.file_bits);
  long horizon = std::max<long>(1, stage_budget(cfg.epsilon, lib.lifetime_frames,
                                                lib.request_prob));
  // truth for the RMSE columns, from an independent statistics run
  Rng truth_rng(detail::mix_seed(cfg.seed ^ 0x7247u));
  auto stats = estimate_region_statistics(model, params, cfg.region_samples, truth_rng,
                                          CostModel::ExactRate);

  auto st = init_learner(lib, cfg.make_capacities(), horizon, n_cells, 1e-3);
  Rng rng(detail::mix_seed(cfg.seed ^ 0x1EA2u));
  auto csv = open_csv(out_path(cfg, "learn_trace.csv"));
  csv << "t,sup_delta,rmse_popularity,rmse_mu\n";
  for (long i = 1; i <= events; ++i) {
    observe(st, sample_learning_event(model, lib, n_cells, window, params,
                                      CostModel::ExactRate, rng));
    if (i % refresh_every == 0 || i == events) {
      auto [delta, converged] = refresh_and_check(st);
      (void)converged;
      double se_p = 0, se_mu = 0;
      for (int f = 0; f < lib.file_count; ++f) {
        double d = st.p_hat[f] - lib.popularity[f];
        se_p += d * d;
      }
      for (size_t r = 0; r < st.mu_hat.size(); ++r) {
        double d = st.mu_hat[r] - stats.mu[r];
        se_mu += d * d;
      }
      csv << i << ',' << (std::isinf(delta) ? "inf" : g17(delta)) << ','
          << g17(std::sqrt(se_p / lib.file_count)) << ','
          << g17(std::sqrt(se_mu / double(st.mu_hat.size()))) << '\n';
    }
  }
  std::cout << "learning trace (" << events << " events, drift "
            << st.popularity_drift() << ") written to "
            << out_path(cfg, "learn_trace.csv") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cache-assisted multicast scheduling simulator"};
  app.require_subcommand(1);

  CommonOpts ot, oe, os, ob, oo, ol;
  long episodes = 1, lifetime = 0;
  long events = 100000, refresh_every = 100;
  int n_cells = 5;
  long window = 200;

  add_common(app.add_subcommand("tables", "build and dump the value tables"), ot);
  auto* ep = app.add_subcommand("episode", "run seeded episodes per policy");
  add_common(ep, oe);
  ep->add_option("-n,--episodes", episodes, "episodes per policy");
  add_common(app.add_subcommand("sweep", "run the configured sweep"), os);
  add_common(app.add_subcommand("bounds", "dump bound curves at the initial cache state"), ob);
  auto* oc = app.add_subcommand("oracle", "solve the small discrete reference instance");
  add_common(oc, oo);
  oc->add_option("-L,--lifetime", lifetime, "override the instance lifetime");
  auto* ln = app.add_subcommand("learn", "online estimation convergence trace");
  add_common(ln, ol);
  ln->add_option("-n,--events", events, "learning events");
  ln->add_option("--refresh-every", refresh_every, "events between table refreshes");
  ln->add_option("--cells", n_cells, "cells aggregated in the popularity window");
  ln->add_option("--window", window, "frames per observation window");

  CLI11_PARSE(app, argc, argv);
  try {
    if (app.got_subcommand("tables")) return cmd_tables(ot);
    if (app.got_subcommand("episode")) return cmd_episode(oe, episodes);
    if (app.got_subcommand("sweep")) return cmd_sweep(os);
    if (app.got_subcommand("bounds")) return cmd_bounds(ob);
    if (app.got_subcommand("oracle")) return cmd_oracle(oo, lifetime);
    if (app.got_subcommand("learn")) return cmd_learn(ol, events, refresh_every, n_cells, window);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
