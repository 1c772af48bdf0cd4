#include "uwbsel/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace uwbsel {

namespace {

// Ranging ticks on the IMU clock: the k-th range event (k >= 1) lands on
// the nearest IMU tick of t = k / range_hz.
std::vector<char> range_tick_mask(const Rates& rates, long n_ticks) {
  std::vector<char> mask(static_cast<std::size_t>(n_ticks) + 1, 0);
  const double ratio = rates.imu_hz / rates.range_hz;
  for (long k = 1;; ++k) {
    const long tick = std::lround(static_cast<double>(k) * ratio);
    if (tick > n_ticks) break;
    mask[static_cast<std::size_t>(tick)] = 1;
  }
  return mask;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + mid));
  }
  return m;
}

double position_nees(const Vec3& err, const Mat3& sigma_xx) {
  if (!(sigma_xx.determinant() > 0.0)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return err.dot(sigma_xx.ldlt().solve(err));
}

void check_covariance_health(const Covariance& cov, double t) {
  if (!cov.full().allFinite()) {
    throw FilterError("covariance has nonfinite entries at t=" +
                      std::to_string(t));
  }
  if (!cov.is_symmetric(1e-9)) {
    throw FilterError("covariance asymmetric beyond 1e-9 at t=" +
                      std::to_string(t));
  }
  if (!cov.is_psd(1e-9)) {
    throw FilterError("covariance lost positive semidefiniteness at t=" +
                      std::to_string(t));
  }
}

LogRow make_row(double t, const TruthState& truth, const Ekf& ekf,
                int anchor_id) {
  LogRow row;
  row.t = t;
  row.true_x = truth.x;
  row.true_v = truth.v;
  row.true_rpy_deg = rotation_to_rpy_deg(truth.R);

  const Snapshot snap = ekf.snapshot();
  row.est_x = snap.x_hat;
  row.est_v = snap.v_hat;
  row.est_rpy_deg = rotation_to_rpy_deg(snap.attitude);
  row.att_err_deg = rotation_angle_deg(truth.R, snap.attitude);
  row.sigma_sqrt = snap.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  row.anchor_id = anchor_id;

  row.cov_trace = snap.covariance.trace();
  const Vec3 grav_body = snap.attitude.inverse() * Vec3(0.0, 0.0, 1.0);
  row.yaw_axis_att_var =
      grav_body.dot(snap.covariance.block<3, 3>(6, 6) * grav_body);
  row.nees_pos = position_nees(truth.x - snap.x_hat,
                               snap.covariance.block<3, 3>(0, 0));
  return row;
}

RunMetrics metrics_from_log(const std::vector<LogRow>& log,
                            const EkfStats& stats, long skipped) {
  RunMetrics m;
  double pos2 = 0.0, vel2 = 0.0, att2 = 0.0, trace_sum = 0.0;
  Vec3 axes2 = Vec3::Zero();
  std::vector<double> nees;
  nees.reserve(log.size());
  for (const LogRow& row : log) {
    const Vec3 pe = row.true_x - row.est_x;
    const Vec3 ve = row.true_v - row.est_v;
    pos2 += pe.squaredNorm();
    vel2 += ve.squaredNorm();
    att2 += row.att_err_deg * row.att_err_deg;
    axes2 += pe.cwiseProduct(pe);
    trace_sum += row.cov_trace;
    if (std::isfinite(row.nees_pos)) nees.push_back(row.nees_pos);
    if (row.anchor_id >= 0) ++m.anchor_histogram[row.anchor_id];
  }
  const double n = static_cast<double>(log.size());
  m.rmse_position = std::sqrt(pos2 / n);
  m.rmse_velocity = std::sqrt(vel2 / n);
  m.rmse_attitude_deg = std::sqrt(att2 / n);
  m.rmse_position_axes = (axes2 / n).cwiseSqrt();
  m.mean_cov_trace = trace_sum / n;
  m.median_nees_pos = median_of(std::move(nees));
  m.updates_applied = stats.updates_applied;
  m.updates_gated = stats.updates_gated;
  m.updates_skipped = skipped;
  m.large_delta_warnings = stats.large_delta_warnings;
  return m;
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void put_vec3(std::ostream& out, const Vec3& v) {
  out << ',' << g17(v.x()) << ',' << g17(v.y()) << ',' << g17(v.z());
}

}  // namespace

RunResult run_scenario(const Scenario& scenario) {
  Scenario sc = scenario;
  sc.validate_and_finalize();

  const double dt = 1.0 / sc.rates.imu_hz;
  const long n_ticks = std::lround(sc.duration_s * sc.rates.imu_hz);
  const std::vector<char> range_tick = range_tick_mask(sc.rates, n_ticks);
  const double range_var = sc.noise.range_variance();

  GaussianRng rng_init(split_seed(sc.seed, 0));
  GaussianRng rng_imu(split_seed(sc.seed, 1));
  GaussianRng rng_range(split_seed(sc.seed, 2));

  FilterParams fp = sc.filter;
  fp.noise = sc.noise;

  const TruthState truth0 = sc.trajectory.sample(0.0);
  StateEstimate init;
  init.x_hat = truth0.x + fp.init_perturbation_scale *
                              rng_init.gaussian3(fp.init_sigma_pos);
  init.v_hat = Vec3::Zero();
  init.R_ref = Rotation::identity();
  Ekf ekf(fp, init, Ekf::initial_covariance(fp));

  RunResult res;
  res.log.reserve(static_cast<std::size_t>(n_ticks) + 1);
  res.log.push_back(make_row(0.0, truth0, ekf, -1));

  long range_step = 0;
  long skipped = 0;
  for (long i = 0; i < n_ticks; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double t_next = static_cast<double>(i + 1) * dt;

    const TruthState truth = sc.trajectory.sample(t);
    const ImuSample imu = synth_imu(truth, sc.noise, rng_imu);
    try {
      ekf.predict(imu, dt);
    } catch (const FilterError& e) {
      throw FilterError("t=" + std::to_string(t) + ": " + e.what());
    }

    const TruthState truth_next = sc.trajectory.sample(t_next);
    int measured_id = -1;
    if (range_tick[static_cast<std::size_t>(i + 1)]) {
      // Score on the prior covariance at the measurement instant, i.e.
      // right after the latest prediction.
      const auto chosen =
          select_anchor(ekf.covariance(), ekf.state().x_hat, sc.anchors,
                        range_var, sc.policy, range_step);
      ++range_step;
      if (chosen) {
        const Anchor& anchor = sc.anchor_by_id(*chosen);
        const RangeMeasurement meas =
            synth_range(truth_next, anchor, sc.noise, rng_range);
        if ((ekf.state().x_hat - anchor.p).norm() <= kMinAnchorDistance) {
          // Singular geometry for this candidate: skip, never fabricate.
          ++skipped;
        } else {
          try {
            ekf.range_update(meas, anchor);
            ekf.reset_attitude();
            measured_id = anchor.id;
          } catch (const FilterError& e) {
            throw FilterError("t=" + std::to_string(t_next) + ": " + e.what());
          }
        }
      } else {
        // No valid candidate this tick; burn the draw so measurement-noise
        // streams stay aligned across policies.
        rng_range.gaussian();
        ++skipped;
      }
    }

    check_covariance_health(ekf.covariance(), t_next);
    res.log.push_back(make_row(t_next, truth_next, ekf, measured_id));
  }

  res.metrics = metrics_from_log(res.log, ekf.stats(), skipped);
  return res;
}

EnsembleSummary monte_carlo(const Scenario& base, int n_runs) {
  if (n_runs < 1) {
    throw ScenarioError("monte_carlo: n_runs must be >= 1");
  }
  Scenario proto = base;
  proto.validate_and_finalize();

  SelectionPolicy seq_policy;
  if (proto.policy.kind == PolicyKind::kSequential) {
    seq_policy = proto.policy;
  } else {
    std::vector<int> order;
    for (const Anchor& a : proto.anchors) order.push_back(a.id);
    std::sort(order.begin(), order.end());
    seq_policy = SelectionPolicy::sequential(std::move(order));
  }

  EnsembleSummary summary;
  for (int k = 0; k < n_runs; ++k) {
    PairedRun pr;
    pr.run = k + 1;
    pr.seed = base.seed + static_cast<std::uint64_t>(k);
    try {
      Scenario s = proto;
      s.seed = pr.seed;
      s.policy = seq_policy;
      pr.sequential = run_scenario(s).metrics;
      s.policy = SelectionPolicy::greedy();
      pr.greedy = run_scenario(s).metrics;
      pr.ok = true;
    } catch (const Error& e) {
      pr.ok = false;
      pr.error = e.what();
    }
    summary.runs.push_back(std::move(pr));
  }

  for (const PairedRun& pr : summary.runs) {
    if (!pr.ok) continue;
    ++summary.n_ok;
    summary.avg_pos_seq += pr.sequential.rmse_position;
    summary.avg_pos_opt += pr.greedy.rmse_position;
    summary.avg_vel_seq += pr.sequential.rmse_velocity;
    summary.avg_vel_opt += pr.greedy.rmse_velocity;
    summary.avg_att_seq += pr.sequential.rmse_attitude_deg;
    summary.avg_att_opt += pr.greedy.rmse_attitude_deg;
  }
  if (summary.n_ok > 0) {
    const double n = summary.n_ok;
    summary.avg_pos_seq /= n;
    summary.avg_pos_opt /= n;
    summary.avg_vel_seq /= n;
    summary.avg_vel_opt /= n;
    summary.avg_att_seq /= n;
    summary.avg_att_opt /= n;
    summary.diff_pos_pct =
        (summary.avg_pos_opt - summary.avg_pos_seq) / summary.avg_pos_seq * 100.0;
    summary.diff_vel_pct =
        (summary.avg_vel_opt - summary.avg_vel_seq) / summary.avg_vel_seq * 100.0;
    summary.diff_att_pct =
        (summary.avg_att_opt - summary.avg_att_seq) / summary.avg_att_seq * 100.0;
  }
  return summary;
}

void write_timeseries_csv(std::ostream& out, const std::vector<LogRow>& log) {
  out << "t,true_x,true_y,true_z,true_vx,true_vy,true_vz,"
         "true_roll_deg,true_pitch_deg,true_yaw_deg,"
         "est_x,est_y,est_z,est_vx,est_vy,est_vz,"
         "est_roll_deg,est_pitch_deg,est_yaw_deg,att_err_deg,"
         "sig_x,sig_y,sig_z,sig_vx,sig_vy,sig_vz,sig_dx,sig_dy,sig_dz,"
         "anchor_id\n";
  for (const LogRow& r : log) {
    out << g17(r.t);
    put_vec3(out, r.true_x);
    put_vec3(out, r.true_v);
    put_vec3(out, r.true_rpy_deg);
    put_vec3(out, r.est_x);
    put_vec3(out, r.est_v);
    put_vec3(out, r.est_rpy_deg);
    out << ',' << g17(r.att_err_deg);
    for (int i = 0; i < 9; ++i) out << ',' << g17(r.sigma_sqrt(i));
    out << ',' << r.anchor_id << '\n';
  }
}

void write_summary_csv(std::ostream& out, const EnsembleSummary& s) {
  out << "run,pos_seq,pos_opt,vel_seq,vel_opt,att_seq,att_opt\n";
  for (const PairedRun& pr : s.runs) {
    out << pr.run;
    if (pr.ok) {
      out << ',' << g17(pr.sequential.rmse_position) << ','
          << g17(pr.greedy.rmse_position) << ','
          << g17(pr.sequential.rmse_velocity) << ','
          << g17(pr.greedy.rmse_velocity) << ','
          << g17(pr.sequential.rmse_attitude_deg) << ','
          << g17(pr.greedy.rmse_attitude_deg);
    } else {
      out << ",,,,,,";
    }
    out << '\n';
  }
  if (s.n_ok > 0) {
    out << "avg," << g17(s.avg_pos_seq) << ',' << g17(s.avg_pos_opt) << ','
        << g17(s.avg_vel_seq) << ',' << g17(s.avg_vel_opt) << ','
        << g17(s.avg_att_seq) << ',' << g17(s.avg_att_opt) << '\n';
    out << "diff_pct,," << g17(s.diff_pos_pct) << ",," << g17(s.diff_vel_pct)
        << ",," << g17(s.diff_att_pct) << '\n';
  }
}

void dump_streams_csv(std::ostream& out, const Scenario& scenario) {
  Scenario sc = scenario;
  sc.validate_and_finalize();

  const double dt = 1.0 / sc.rates.imu_hz;
  const long n_ticks = std::lround(sc.duration_s * sc.rates.imu_hz);
  const std::vector<char> range_tick = range_tick_mask(sc.rates, n_ticks);

  GaussianRng rng_imu(split_seed(sc.seed, 1));
  GaussianRng rng_range(split_seed(sc.seed, 2));

  // Measurement anchors follow the scenario's own order when sequential,
  // ascending ids otherwise; the dump has no filter to drive a greedy pick.
  std::vector<int> order;
  if (sc.policy.kind == PolicyKind::kSequential) {
    order = sc.policy.order;
  } else {
    for (const Anchor& a : sc.anchors) order.push_back(a.id);
    std::sort(order.begin(), order.end());
  }

  out << "t,kind,x,y,z,vx,vy,vz,roll_deg,pitch_deg,yaw_deg,"
         "ax,ay,az,gx,gy,gz,anchor_id,rho\n";
  long range_step = 0;
  for (long i = 0; i <= n_ticks; ++i) {
    const double t = static_cast<double>(i) * dt;
    const TruthState truth = sc.trajectory.sample(t);
    const Vec3 rpy = rotation_to_rpy_deg(truth.R);
    out << g17(t) << ",truth";
    put_vec3(out, truth.x);
    put_vec3(out, truth.v);
    put_vec3(out, rpy);
    out << ",,,,,,,,\n";

    if (i < n_ticks) {
      const ImuSample imu = synth_imu(truth, sc.noise, rng_imu);
      out << g17(imu.t) << ",imu,,,,,,,,,";
      put_vec3(out, imu.alpha_m);
      put_vec3(out, imu.gamma);
      out << ",,\n";
    }
    if (i > 0 && range_tick[static_cast<std::size_t>(i)]) {
      const Anchor& anchor = sc.anchor_by_id(
          order[static_cast<std::size_t>(range_step) % order.size()]);
      ++range_step;
      const RangeMeasurement meas =
          synth_range(truth, anchor, sc.noise, rng_range);
      out << g17(meas.t) << ",range,,,,,,,,,,,,,,,," << meas.anchor_id << ','
          << g17(meas.rho) << '\n';
    }
  }
}

}  // namespace uwbsel
