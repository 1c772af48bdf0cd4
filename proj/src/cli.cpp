#include "uwbsel/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>

#include "CLI11.hpp"

#include "uwbsel/rng.hpp"
#include "uwbsel/runner.hpp"

namespace uwbsel {

namespace {

namespace fs = std::filesystem;

struct CommonOpts {
  std::string scenario_path;
  std::string out_dir = ".";
  std::string policy;
  std::int64_t seed = -1;  // -1: keep the scenario's seed
  bool quiet = false;
};

Scenario load_scenario(const CommonOpts& opts) {
  Scenario sc = opts.scenario_path.empty() ? Scenario::defaults()
                                           : Scenario::load(opts.scenario_path);
  if (opts.seed >= 0) {
    sc.seed = static_cast<std::uint64_t>(opts.seed);
  }
  if (!opts.policy.empty()) {
    if (opts.policy == "greedy") {
      sc.policy = SelectionPolicy::greedy();
    } else if (opts.policy == "sequential") {
      if (sc.policy.kind != PolicyKind::kSequential) {
        sc.policy = SelectionPolicy::sequential({});
      }
    } else {
      throw ScenarioError("unknown policy '" + opts.policy + "'");
    }
  }
  sc.validate_and_finalize();
  return sc;
}

void write_file(const std::string& dir, const std::string& name,
                const std::function<void(std::ostream&)>& writer) {
  fs::create_directories(dir);
  const fs::path path = fs::path(dir) / name;
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  writer(out);
}

int cmd_run(const CommonOpts& opts, const std::string& dump_streams) {
  const Scenario sc = load_scenario(opts);
  const RunResult res = run_scenario(sc);
  write_file(opts.out_dir, "timeseries.csv", [&](std::ostream& out) {
    write_timeseries_csv(out, res.log);
  });
  if (!dump_streams.empty()) {
    std::ofstream out(dump_streams);
    if (!out) throw Error("cannot write " + dump_streams);
    dump_streams_csv(out, sc);
  }
  if (!opts.quiet) {
    const RunMetrics& m = res.metrics;
    std::printf("seed %llu, %s policy\n",
                static_cast<unsigned long long>(sc.seed),
                sc.policy.kind == PolicyKind::kGreedy ? "greedy"
                                                      : "sequential");
    std::printf("rmse position  %.4f m  (axes %.4f %.4f %.4f)\n",
                m.rmse_position, m.rmse_position_axes.x(),
                m.rmse_position_axes.y(), m.rmse_position_axes.z());
    std::printf("rmse velocity  %.4f m/s\n", m.rmse_velocity);
    std::printf("rmse attitude  %.2f deg\n", m.rmse_attitude_deg);
    std::printf("mean cov trace %.5f, median position NEES %.2f\n",
                m.mean_cov_trace, m.median_nees_pos);
    std::printf("updates: %ld applied, %ld gated, %ld skipped\n",
                m.updates_applied, m.updates_gated, m.updates_skipped);
    std::printf("anchor histogram:");
    for (const auto& [id, count] : m.anchor_histogram) {
      std::printf(" %d:%ld", id, count);
    }
    std::printf("\n");
  }
  return 0;
}

int cmd_compare(const CommonOpts& opts, int runs) {
  const Scenario sc = load_scenario(opts);
  const EnsembleSummary s = monte_carlo(sc, runs);
  write_file(opts.out_dir, "summary.csv", [&](std::ostream& out) {
    write_summary_csv(out, s);
  });
  for (const PairedRun& pr : s.runs) {
    if (!pr.ok) {
      std::cerr << "run " << pr.run << " (seed " << pr.seed
                << ") failed: " << pr.error << "\n";
    }
  }
  if (!opts.quiet) {
    std::printf("%-5s %9s %9s %9s %9s %9s %9s\n", "run", "pos_seq", "pos_opt",
                "vel_seq", "vel_opt", "att_seq", "att_opt");
    for (const PairedRun& pr : s.runs) {
      if (!pr.ok) {
        std::printf("%-5d failed\n", pr.run);
        continue;
      }
      std::printf("%-5d %9.3f %9.3f %9.3f %9.3f %9.2f %9.2f\n", pr.run,
                  pr.sequential.rmse_position, pr.greedy.rmse_position,
                  pr.sequential.rmse_velocity, pr.greedy.rmse_velocity,
                  pr.sequential.rmse_attitude_deg,
                  pr.greedy.rmse_attitude_deg);
    }
    if (s.n_ok > 0) {
      std::printf("%-5s %9.3f %9.3f %9.3f %9.3f %9.2f %9.2f\n", "avg",
                  s.avg_pos_seq, s.avg_pos_opt, s.avg_vel_seq, s.avg_vel_opt,
                  s.avg_att_seq, s.avg_att_opt);
      std::printf("%-5s %9s %8.1f%% %9s %8.1f%% %9s %8.1f%%\n", "diff.", "",
                  s.diff_pos_pct, "", s.diff_vel_pct, "", s.diff_att_pct);
    }
  }
  if (s.n_ok == 0) {
    throw Error("compare: every run failed");
  }
  return 0;
}

// Self-check of the selection formula against the plain 9x9 update,
// plus the one-step optimality of the greedy pick.
int cmd_validate(int trials, std::uint64_t seed, bool quiet) {
  GaussianRng rng(split_seed(seed, 17));
  auto random_psd = [&rng]() {
    Mat9 g;
    for (int i = 0; i < 9; ++i)
      for (int j = 0; j < 9; ++j) g(i, j) = rng.gaussian();
    return Mat9((g * g.transpose()).eval());
  };
  auto dense_trace_delta = [](const Mat9& cov, const Vec3& e, double r) {
    Eigen::Matrix<double, 1, 9> h = Eigen::Matrix<double, 1, 9>::Zero();
    h.block<1, 3>(0, 0) = e.transpose();
    const double s = (h * cov * h.transpose())(0, 0) + r;
    const Vec9 k = cov * h.transpose() / s;
    const Mat9 post = (Mat9::Identity() - k * h) * cov;
    return post.trace() - cov.trace();
  };

  double max_rel = 0.0;
  for (int i = 0; i < trials; ++i) {
    const Covariance cov(random_psd());
    const Vec3 x_hat = rng.gaussian3(3.0);
    const Vec3 dir = rng.gaussian3(1.0).normalized();
    const Anchor anchor{0, x_hat + rng.uniform(0.5, 10.0) * dir};
    const double r = rng.uniform(1e-4, 1.0);
    const double closed =
        score_anchor(cov, x_hat, anchor, r).trace_delta;
    const double dense =
        dense_trace_delta(cov.full(), (x_hat - anchor.p).normalized(), r);
    max_rel = std::max(max_rel,
                       std::abs(closed - dense) / std::max(1e-300, std::abs(dense)));
  }
  const bool formula_ok = max_rel <= 1e-9;
  if (!quiet) {
    std::printf("closed-form vs dense trace delta: max rel err %.3e over %d "
                "trials — %s\n",
                max_rel, trials, formula_ok ? "ok" : "MISMATCH");
  }

  int optimality_fails = 0;
  const int configs = std::max(1, trials / 10);
  for (int c = 0; c < configs; ++c) {
    const Covariance cov(random_psd());
    const Vec3 x_hat = rng.gaussian3(2.0);
    std::vector<Anchor> anchors;
    for (int a = 0; a < 5; ++a) {
      const Vec3 dir = rng.gaussian3(1.0).normalized();
      anchors.push_back(Anchor{a + 1, x_hat + rng.uniform(0.5, 8.0) * dir});
    }
    const double r = rng.uniform(1e-4, 1.0);
    const auto picked = select_anchor(cov, x_hat, anchors, r,
                                      SelectionPolicy::greedy(), 0);
    double best_dense = 0.0, picked_dense = 0.0;
    bool first = true;
    for (const Anchor& a : anchors) {
      const double d =
          dense_trace_delta(cov.full(), (x_hat - a.p).normalized(), r);
      if (first || d < best_dense) best_dense = d;
      first = false;
      if (picked && a.id == *picked) picked_dense = d;
    }
    if (!picked || picked_dense > best_dense + 1e-12 * std::abs(best_dense)) {
      ++optimality_fails;
    }
  }
  const bool greedy_ok = optimality_fails == 0;
  if (!quiet) {
    std::printf("greedy one-step optimality: %d/%d configs ok — %s\n",
                configs - optimality_fails, configs,
                greedy_ok ? "ok" : "SUBOPTIMAL PICKS");
  }

  if (!formula_ok || !greedy_ok) {
    throw Error("validate: selection self-check failed");
  }
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const argv[]) {
  CLI::App app{
      "6DOF range+IMU state estimation testbed with greedy anchor selection"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string dump_streams;
  int runs = 10;
  int trials = 1000;

  CLI::App* run = app.add_subcommand(
      "run", "simulate one flight and write timeseries.csv");
  run->add_option("--scenario", opts.scenario_path, "scenario JSON file");
  run->add_option("--policy", opts.policy,
                  "override the policy (sequential|greedy)");
  run->add_option("--seed", opts.seed, "override the scenario seed")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--out", opts.out_dir, "output directory");
  run->add_option("--dump-streams", dump_streams,
                  "also dump truth/measurement streams to this CSV file");
  run->add_flag("--quiet", opts.quiet, "suppress stdout");

  CLI::App* compare = app.add_subcommand(
      "compare",
      "paired Monte Carlo of sequential vs greedy; writes summary.csv");
  compare->add_option("--scenario", opts.scenario_path, "scenario JSON file");
  compare->add_option("--runs", runs, "number of paired seeds")
      ->check(CLI::PositiveNumber);
  compare->add_option("--seed", opts.seed, "base seed")
      ->check(CLI::NonNegativeNumber);
  compare->add_option("--out", opts.out_dir, "output directory");
  compare->add_flag("--quiet", opts.quiet, "suppress stdout");

  CLI::App* validate = app.add_subcommand(
      "validate", "run the selection-formula oracle-equivalence suite");
  validate->add_option("--trials", trials, "number of randomized trials")
      ->check(CLI::PositiveNumber);
  validate->add_option("--seed", opts.seed, "rng seed")
      ->check(CLI::NonNegativeNumber);
  validate->add_flag("--quiet", opts.quiet, "suppress stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) return cmd_run(opts, dump_streams);
    if (compare->parsed()) return cmd_compare(opts, runs);
    return cmd_validate(trials,
                        opts.seed >= 0 ? static_cast<std::uint64_t>(opts.seed)
                                       : 1u,
                        opts.quiet);
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

int cli_main(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("uwbsel");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace uwbsel
