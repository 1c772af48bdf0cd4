#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "uwbsel/scenario.hpp"

namespace uwbsel {

/// Per-tick record: truth, estimate, one-standard-deviation band (square
/// roots of the covariance diagonal) and the anchor measured at this tick
/// (-1 when none).
struct LogRow {
  double t = 0.0;
  Vec3 true_x, true_v, true_rpy_deg;
  Vec3 est_x, est_v, est_rpy_deg;
  double att_err_deg = 0.0;
  Vec9 sigma_sqrt = Vec9::Zero();
  int anchor_id = -1;
  // derived per-tick diagnostics, not written to the time-series CSV
  double cov_trace = 0.0;
  double yaw_axis_att_var = 0.0;  // gravity-axis component of Sigma_dd
  double nees_pos = 0.0;          // 3-dof position NEES
};

struct RunMetrics {
  double rmse_position = 0.0;      // m
  double rmse_velocity = 0.0;      // m/s
  double rmse_attitude_deg = 0.0;  // geodesic angle
  Vec3 rmse_position_axes = Vec3::Zero();
  double mean_cov_trace = 0.0;
  double median_nees_pos = 0.0;
  std::map<int, long> anchor_histogram;
  long updates_applied = 0;
  long updates_gated = 0;
  long updates_skipped = 0;  // singular geometry, skipped and reported
  long large_delta_warnings = 0;
};

struct RunResult {
  RunMetrics metrics;
  std::vector<LogRow> log;
};

/// One deterministic flight: IMU-clock event loop with prediction every
/// tick and policy-selected range updates at the ranging ticks. Covariance
/// symmetry/PSD health is verified every tick; a violation aborts the run
/// with a timestamped FilterError.
RunResult run_scenario(const Scenario& scenario);

struct PairedRun {
  int run = 0;  // 1-based
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  RunMetrics sequential;
  RunMetrics greedy;
};

/// Paired-seed ensemble comparison of the two policies.
struct EnsembleSummary {
  std::vector<PairedRun> runs;
  int n_ok = 0;
  double avg_pos_seq = 0.0, avg_pos_opt = 0.0;
  double avg_vel_seq = 0.0, avg_vel_opt = 0.0;
  double avg_att_seq = 0.0, avg_att_opt = 0.0;
  // (opt - seq) / seq * 100, per metric
  double diff_pos_pct = 0.0, diff_vel_pct = 0.0, diff_att_pct = 0.0;
};

/// Runs seeds seed..seed+n_runs-1 under both policies. Each seed feeds both
/// policies the same initial perturbation, IMU noise and per-tick range
/// noise, so the runs differ only in which anchor each draw is applied to.
/// Failed runs are recorded and excluded from the averages.
EnsembleSummary monte_carlo(const Scenario& base, int n_runs);

/// timeseries.csv: fixed column order, full decimal precision.
void write_timeseries_csv(std::ostream& out, const std::vector<LogRow>& log);

/// summary.csv: one row per run (run, pos_seq, pos_opt, vel_seq, vel_opt,
/// att_seq, att_opt), then an "avg" row and a "diff_pct" row with the
/// percent differences in the *_opt columns.
void write_summary_csv(std::ostream& out, const EnsembleSummary& summary);

/// Truth and measurement streams as flat CSV events:
/// t, kind(truth|imu|range), then kind-specific payload columns.
void dump_streams_csv(std::ostream& out, const Scenario& scenario);

}  // namespace uwbsel
