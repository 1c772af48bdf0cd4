#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uwbsel/estimator.hpp"
#include "uwbsel/selection.hpp"
#include "uwbsel/sim.hpp"

namespace uwbsel {

struct Rates {
  double imu_hz = 500.0;
  double range_hz = 60.0;
};

/// Everything one simulated flight needs: world, sensors, filter tuning,
/// selection policy, seed. Loadable from a JSON scenario file; every field
/// not present in the file keeps its default value.
struct Scenario {
  std::vector<Anchor> anchors;
  TrajectoryProfile trajectory = TrajectoryProfile::default_flight();
  NoiseParams noise;
  Rates rates;
  FilterParams filter;
  SelectionPolicy policy = SelectionPolicy::greedy();
  std::uint64_t seed = 1;
  double duration_s = 12.0;

  /// 5 anchors at z = 0 inside a 6 m x 6 m area, three of them clustered
  /// within 0.5 m so that their measurements carry nearly identical
  /// information; the default flight profile; 500 Hz IMU, 60 Hz ranging.
  static Scenario defaults();

  static Scenario from_json_text(const std::string& text);
  static Scenario load(const std::string& path);

  /// Throws ScenarioError on any violated invariant. Fills a default
  /// ascending-id order into a sequential policy that has none.
  void validate_and_finalize();

  const Anchor& anchor_by_id(int id) const;
};

}  // namespace uwbsel
