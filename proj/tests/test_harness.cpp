#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "uwbsel/cli.hpp"
#include "uwbsel/runner.hpp"

using namespace uwbsel;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Scenario zero_noise_scenario() {
  Scenario sc = Scenario::defaults();
  sc.noise = NoiseParams{0.0, 0.0, 0.0};
  sc.filter.init_perturbation_scale = 0.0;
  sc.filter.init_sigma_pos = 0.0;
  sc.filter.init_sigma_vel = 0.0;
  sc.filter.init_sigma_att = 0.0;
  sc.filter.init_sigma_yaw = 0.0;
  return sc;
}

}  // namespace

TEST_CASE("bundled paper.json equals the built-in defaults") {
  const Scenario file = Scenario::load(std::string(UWBSEL_SCENARIO_DIR) + "/paper.json");
  const Scenario code = Scenario::defaults();
  REQUIRE(file.anchors.size() == code.anchors.size());
  for (std::size_t i = 0; i < file.anchors.size(); ++i) {
    CHECK(file.anchors[i].id == code.anchors[i].id);
    CHECK((file.anchors[i].p - code.anchors[i].p).norm() == 0.0);
  }
  CHECK(file.noise.sigma_alpha == code.noise.sigma_alpha);
  CHECK(file.noise.sigma_gamma == code.noise.sigma_gamma);
  CHECK(file.noise.sigma_rho == code.noise.sigma_rho);
  CHECK(file.rates.imu_hz == code.rates.imu_hz);
  CHECK(file.rates.range_hz == code.rates.range_hz);
  CHECK(file.seed == code.seed);
  CHECK(file.duration_s == code.duration_s);
  CHECK(file.trajectory.total_duration() == code.trajectory.total_duration());
  CHECK(file.policy.kind == PolicyKind::kGreedy);
}

TEST_CASE("scenario parsing errors") {
  CHECK_THROWS_WITH_AS(
      (void)Scenario::load("/nonexistent/path/to/scenario.json"),
      "cannot open scenario file: /nonexistent/path/to/scenario.json",
      ScenarioError);
  CHECK_THROWS_AS((void)Scenario::from_json_text("{ not json"), ScenarioError);
  CHECK_THROWS_AS((void)Scenario::from_json_text("{\"anchors\": []}"),
                  ScenarioError);
  CHECK_THROWS_AS((void)Scenario::from_json_text(
                      "{\"rates\": {\"imu_hz\": 10, \"range_hz\": 60}}"),
                  ScenarioError);
  CHECK_THROWS_AS(
      (void)Scenario::from_json_text(
          "{\"policy\": {\"kind\": \"sequential\", \"order\": [1, 1, 2]}}"),
      ScenarioError);
  // unknown policy kind
  CHECK_THROWS_AS((void)Scenario::from_json_text("{\"policy\": \"random\"}"),
                  ScenarioError);
}

TEST_CASE("sequential policy defaults to ascending anchor ids") {
  Scenario sc = Scenario::from_json_text("{\"policy\": \"sequential\"}");
  CHECK(sc.policy.kind == PolicyKind::kSequential);
  CHECK(sc.policy.order == std::vector<int>{1, 2, 3, 4, 5});
}

TEST_CASE("zero-noise flight tracks to integration accuracy") {
  const RunResult res = run_scenario(zero_noise_scenario());
  CHECK(res.metrics.rmse_position < 1e-3);
  double max_pos = 0.0;
  for (const LogRow& r : res.log) {
    max_pos = std::max(max_pos, (r.true_x - r.est_x).norm());
  }
  CHECK(max_pos < 1e-3);
}

TEST_CASE("yaw variance untouched by a pure hover") {
  Scenario sc = Scenario::defaults();
  sc.trajectory = TrajectoryProfile::hover(Vec3(0, 0, 2), 4.0);
  sc.duration_s = 4.0;
  const RunResult res = run_scenario(sc);
  const double init = res.log.front().yaw_axis_att_var;
  for (const LogRow& r : res.log) {
    CHECK(std::abs(r.yaw_axis_att_var - init) <= 0.1 * init);
  }
}

TEST_CASE("single anchor cannot collapse the position covariance") {
  Scenario sc = Scenario::defaults();
  sc.anchors = {{1, Vec3(0.2, 2.5, 0.0)}};
  const RunResult res = run_scenario(sc);
  double min_max_axis_var = 1e100;
  for (const LogRow& r : res.log) {
    const double worst_axis = std::max(
        {r.sigma_sqrt(0), r.sigma_sqrt(1), r.sigma_sqrt(2)});
    min_max_axis_var = std::min(min_max_axis_var, worst_axis * worst_axis);
  }
  CHECK(min_max_axis_var >= 5e-3);
}

TEST_CASE("policies share the same truth, init and noise streams") {
  Scenario sc = Scenario::defaults();
  sc.seed = 99;

  Scenario seq = sc;
  seq.policy = SelectionPolicy::sequential({});
  const RunResult a = run_scenario(seq);
  const RunResult b = run_scenario(sc);  // greedy

  REQUIRE(a.log.size() == b.log.size());
  // identical truth and identical initial estimate (same init draw)
  CHECK((a.log.front().est_x - b.log.front().est_x).norm() == 0.0);
  for (std::size_t i = 0; i < a.log.size(); i += 500) {
    CHECK((a.log[i].true_x - b.log[i].true_x).norm() == 0.0);
  }
  // different anchors get picked
  CHECK(a.metrics.anchor_histogram != b.metrics.anchor_histogram);

  // with a single anchor both policies make identical decisions, so the
  // shared noise streams must make the runs bit-identical
  Scenario one = sc;
  one.anchors = {{1, Vec3(0.2, 2.5, 0.0)}};
  Scenario one_seq = one;
  one_seq.policy = SelectionPolicy::sequential({});
  const RunResult c = run_scenario(one);
  const RunResult d = run_scenario(one_seq);
  REQUIRE(c.log.size() == d.log.size());
  for (std::size_t i = 0; i < c.log.size(); ++i) {
    CHECK((c.log[i].est_x - d.log[i].est_x).norm() == 0.0);
    CHECK((c.log[i].est_v - d.log[i].est_v).norm() == 0.0);
  }
}

TEST_CASE("range tick schedule hits the requested rate") {
  Scenario sc = Scenario::defaults();
  const RunResult res = run_scenario(sc);
  long measured = 0;
  for (const auto& [id, n] : res.metrics.anchor_histogram) measured += n;
  CHECK(measured + res.metrics.updates_skipped +
            res.metrics.updates_gated ==
        std::lround(sc.duration_s * sc.rates.range_hz));
}

TEST_CASE("monte_carlo with one run reproduces the single runs") {
  Scenario sc = Scenario::defaults();
  const EnsembleSummary s = monte_carlo(sc, 1);
  REQUIRE(s.runs.size() == 1);
  REQUIRE(s.runs[0].ok);
  CHECK(s.n_ok == 1);

  Scenario greedy = sc;
  greedy.policy = SelectionPolicy::greedy();
  Scenario seq = sc;
  seq.policy = SelectionPolicy::sequential({});
  CHECK(s.runs[0].greedy.rmse_position ==
        run_scenario(greedy).metrics.rmse_position);
  CHECK(s.runs[0].sequential.rmse_position ==
        run_scenario(seq).metrics.rmse_position);
  CHECK(s.avg_pos_opt == s.runs[0].greedy.rmse_position);
}

TEST_CASE("monte_carlo summary arithmetic is recomputable from the rows") {
  Scenario sc = Scenario::defaults();
  const EnsembleSummary s = monte_carlo(sc, 4);
  REQUIRE(s.n_ok == 4);
  double pos_seq = 0, pos_opt = 0;
  for (const PairedRun& pr : s.runs) {
    pos_seq += pr.sequential.rmse_position;
    pos_opt += pr.greedy.rmse_position;
  }
  CHECK(s.avg_pos_seq == pos_seq / 4);
  CHECK(s.avg_pos_opt == pos_opt / 4);
  CHECK(s.diff_pos_pct ==
        (s.avg_pos_opt - s.avg_pos_seq) / s.avg_pos_seq * 100.0);
  CHECK(s.runs[0].seed == sc.seed);
  CHECK(s.runs[3].seed == sc.seed + 3);
}

TEST_CASE("monte_carlo is deterministic") {
  Scenario sc = Scenario::defaults();
  const EnsembleSummary a = monte_carlo(sc, 3);
  const EnsembleSummary b = monte_carlo(sc, 3);
  CHECK(a.avg_pos_seq == b.avg_pos_seq);
  CHECK(a.avg_att_opt == b.avg_att_opt);
  std::ostringstream csv_a, csv_b;
  write_summary_csv(csv_a, a);
  write_summary_csv(csv_b, b);
  CHECK(csv_a.str() == csv_b.str());
}

TEST_CASE("timeseries csv has the documented shape") {
  Scenario sc = Scenario::defaults();
  sc.duration_s = 1.0;
  const RunResult res = run_scenario(sc);
  std::ostringstream out;
  write_timeseries_csv(out, res.log);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "t,true_x,true_y,true_z,true_vx,true_vy,true_vz,true_roll_deg,"
        "true_pitch_deg,true_yaw_deg,est_x,est_y,est_z,est_vx,est_vy,est_vz,"
        "est_roll_deg,est_pitch_deg,est_yaw_deg,att_err_deg,sig_x,sig_y,"
        "sig_z,sig_vx,sig_vy,sig_vz,sig_dx,sig_dy,sig_dz,anchor_id");
  long rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 29);
  }
  CHECK(rows == 501);
  // sigma columns are the square roots of the covariance diagonal
  for (const LogRow& r : res.log) {
    for (int i = 0; i < 9; ++i) {
      CHECK(r.sigma_sqrt(i) >= 0.0);
      CHECK(std::isfinite(r.sigma_sqrt(i)));
    }
  }
}

TEST_CASE("stream dump covers truth, imu and range events") {
  Scenario sc = Scenario::defaults();
  sc.duration_s = 0.5;
  std::ostringstream out;
  dump_streams_csv(out, sc);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);  // header
  long truth = 0, imu = 0, range = 0;
  while (std::getline(in, line)) {
    if (line.find(",truth") != std::string::npos) ++truth;
    if (line.find(",imu") != std::string::npos) ++imu;
    if (line.find(",range") != std::string::npos) ++range;
  }
  CHECK(truth == 251);
  CHECK(imu == 250);
  CHECK(range == std::lround(0.5 * sc.rates.range_hz));
}

TEST_CASE("cli: run writes timeseries.csv and reports success") {
  const fs::path dir = fs::temp_directory_path() / "uwbsel_cli_run";
  fs::remove_all(dir);
  const fs::path streams = dir / "streams.csv";
  CHECK(cli_main({"run", "--quiet", "--out", dir.string(), "--dump-streams",
                  streams.string()}) == 0);
  CHECK(fs::exists(dir / "timeseries.csv"));
  CHECK(fs::exists(streams));
  CHECK(slurp(streams).rfind("t,kind,", 0) == 0);
}

TEST_CASE("cli: identical invocations produce byte-identical output") {
  const fs::path d1 = fs::temp_directory_path() / "uwbsel_det1";
  const fs::path d2 = fs::temp_directory_path() / "uwbsel_det2";
  fs::remove_all(d1);
  fs::remove_all(d2);
  CHECK(cli_main({"run", "--quiet", "--seed", "7", "--out", d1.string()}) == 0);
  CHECK(cli_main({"run", "--quiet", "--seed", "7", "--out", d2.string()}) == 0);
  CHECK(slurp(d1 / "timeseries.csv") == slurp(d2 / "timeseries.csv"));
}

TEST_CASE("cli: policy flag changes selections but not the truth") {
  const fs::path d1 = fs::temp_directory_path() / "uwbsel_polg";
  const fs::path d2 = fs::temp_directory_path() / "uwbsel_pols";
  fs::remove_all(d1);
  fs::remove_all(d2);
  CHECK(cli_main({"run", "--quiet", "--policy", "greedy", "--seed", "3",
                  "--out", d1.string()}) == 0);
  CHECK(cli_main({"run", "--quiet", "--policy", "sequential", "--seed", "3",
                  "--out", d2.string()}) == 0);
  const std::string a = slurp(d1 / "timeseries.csv");
  const std::string b = slurp(d2 / "timeseries.csv");
  CHECK(a != b);
  // identical truth columns: compare the first five fields of each line
  std::istringstream ia(a), ib(b);
  std::string la, lb;
  while (std::getline(ia, la) && std::getline(ib, lb)) {
    std::size_t ca = 0, cb = 0;
    for (int f = 0; f < 5; ++f) {
      ca = la.find(',', ca + 1);
      cb = lb.find(',', cb + 1);
    }
    CHECK(la.substr(0, ca) == lb.substr(0, cb));
  }
}

TEST_CASE("cli: exit codes") {
  CHECK(cli_main({"run", "--quiet", "--scenario", "/no/such/file.json",
                  "--out", (fs::temp_directory_path() / "x").string()}) == 1);
  CHECK(cli_main({"frobnicate"}) == 1);
  CHECK(cli_main({"validate", "--quiet", "--trials", "50"}) == 0);
  // compare on a bundled scenario
  const fs::path dir = fs::temp_directory_path() / "uwbsel_cmp";
  fs::remove_all(dir);
  CHECK(cli_main({"compare", "--quiet", "--runs", "2", "--scenario",
                  std::string(UWBSEL_SCENARIO_DIR) + "/paper.json", "--out",
                  dir.string()}) == 0);
  const std::string summary = slurp(dir / "summary.csv");
  CHECK(summary.rfind("run,pos_seq,pos_opt,vel_seq,vel_opt,att_seq,att_opt",
                      0) == 0);
  CHECK(summary.find("\navg,") != std::string::npos);
  CHECK(summary.find("\ndiff_pct,") != std::string::npos);
}

TEST_CASE("greedy beats sequential on the default layout (small ensemble)") {
  Scenario sc = Scenario::defaults();
  const EnsembleSummary s = monte_carlo(sc, 5);
  REQUIRE(s.n_ok == 5);
  CHECK(s.avg_pos_opt < s.avg_pos_seq);
}
