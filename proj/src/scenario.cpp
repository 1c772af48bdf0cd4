#include "uwbsel/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace uwbsel {

using nlohmann::json;

Scenario Scenario::defaults() {
  Scenario sc;
  // Clustered triple near the flight plane plus two spread anchors; only
  // anchor 5 carries real x information, mirroring the reference layout's
  // starved direction.
  sc.anchors = {
      {1, Vec3(0.2, 2.5, 0.0)},   // clustered triple
      {2, Vec3(0.4, 2.7, 0.0)},   //
      {3, Vec3(0.2, 2.9, 0.0)},   //
      {4, Vec3(0.0, -2.5, 0.0)},  //
      {5, Vec3(1.5, 0.5, 0.0)},   //
  };
  sc.trajectory = TrajectoryProfile::default_flight();
  sc.noise = NoiseParams{};
  sc.rates = Rates{};
  sc.filter = FilterParams{};
  sc.policy = SelectionPolicy::greedy();
  sc.seed = 1;
  sc.duration_s = 12.0;
  return sc;
}

static Vec3 parse_vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw ScenarioError(std::string("scenario: ") + what +
                        " must be an array of 3 numbers");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

static SelectionPolicy parse_policy(const json& j) {
  std::string kind;
  std::vector<int> order;
  if (j.is_string()) {
    kind = j.get<std::string>();
  } else if (j.is_object()) {
    kind = j.at("kind").get<std::string>();
    if (j.contains("order")) {
      order = j.at("order").get<std::vector<int>>();
    }
  } else {
    throw ScenarioError("scenario: policy must be a string or an object");
  }
  if (kind == "greedy") {
    return SelectionPolicy::greedy();
  }
  if (kind == "sequential") {
    return SelectionPolicy::sequential(std::move(order));
  }
  throw ScenarioError("scenario: unknown policy kind '" + kind + "'");
}

Scenario Scenario::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ScenarioError(std::string("scenario parse error: ") + e.what());
  }

  Scenario sc = defaults();
  try {
    if (j.contains("anchors")) {
      sc.anchors.clear();
      for (const auto& a : j.at("anchors")) {
        if (!a.is_array() || a.size() != 4) {
          throw ScenarioError(
              "scenario: each anchor must be [id, x, y, z]");
        }
        sc.anchors.push_back(Anchor{
            a[0].get<int>(),
            Vec3(a[1].get<double>(), a[2].get<double>(), a[3].get<double>())});
      }
    }
    if (j.contains("trajectory")) {
      const json& t = j.at("trajectory");
      Vec3 start = Vec3::Zero();
      double yaw_rate = 0.0;
      if (t.contains("start")) start = parse_vec3(t.at("start"), "start");
      if (t.contains("yaw_rate_rad_s")) {
        yaw_rate = t.at("yaw_rate_rad_s").get<double>();
      }
      std::vector<TrajectorySegment> segs;
      for (const auto& s : t.at("segments")) {
        segs.push_back(TrajectorySegment{parse_vec3(s.at("to"), "waypoint"),
                                         s.at("duration_s").get<double>()});
      }
      sc.trajectory = TrajectoryProfile(start, std::move(segs), yaw_rate);
    }
    if (j.contains("noise")) {
      const json& n = j.at("noise");
      if (n.contains("sigma_alpha")) {
        sc.noise.sigma_alpha = n.at("sigma_alpha").get<double>();
      }
      if (n.contains("sigma_gamma")) {
        sc.noise.sigma_gamma = n.at("sigma_gamma").get<double>();
      }
      if (n.contains("sigma_rho")) {
        sc.noise.sigma_rho = n.at("sigma_rho").get<double>();
      }
    }
    if (j.contains("rates")) {
      const json& r = j.at("rates");
      if (r.contains("imu_hz")) sc.rates.imu_hz = r.at("imu_hz").get<double>();
      if (r.contains("range_hz")) {
        sc.rates.range_hz = r.at("range_hz").get<double>();
      }
    }
    if (j.contains("filter")) {
      const json& f = j.at("filter");
      if (f.contains("init_sigma_pos")) {
        sc.filter.init_sigma_pos = f.at("init_sigma_pos").get<double>();
      }
      if (f.contains("init_sigma_vel")) {
        sc.filter.init_sigma_vel = f.at("init_sigma_vel").get<double>();
      }
      if (f.contains("init_sigma_att")) {
        sc.filter.init_sigma_att = f.at("init_sigma_att").get<double>();
      }
      if (f.contains("init_sigma_yaw")) {
        sc.filter.init_sigma_yaw = f.at("init_sigma_yaw").get<double>();
      }
      if (f.contains("innovation_gate")) {
        sc.filter.innovation_gate = f.at("innovation_gate").get<double>();
      }
      if (f.contains("init_perturbation_scale")) {
        sc.filter.init_perturbation_scale =
            f.at("init_perturbation_scale").get<double>();
      }
    }
    if (j.contains("policy")) sc.policy = parse_policy(j.at("policy"));
    if (j.contains("seed")) sc.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("duration_s")) {
      sc.duration_s = j.at("duration_s").get<double>();
    }
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    throw ScenarioError(std::string("scenario field error: ") + e.what());
  }

  sc.validate_and_finalize();
  return sc;
}

Scenario Scenario::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ScenarioError("cannot open scenario file: " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

void Scenario::validate_and_finalize() {
  if (anchors.empty()) {
    throw ScenarioError("scenario: needs at least one anchor");
  }
  std::set<int> ids;
  for (const Anchor& a : anchors) {
    if (!a.p.allFinite()) {
      throw ScenarioError("scenario: anchor " + std::to_string(a.id) +
                          " has a nonfinite position");
    }
    if (!ids.insert(a.id).second) {
      throw ScenarioError("scenario: duplicate anchor id " +
                          std::to_string(a.id));
    }
  }
  if (!noise.valid()) {
    throw ScenarioError("scenario: noise sigmas must be finite and >= 0");
  }
  if (!(rates.range_hz > 0.0) || !(rates.imu_hz >= rates.range_hz)) {
    throw ScenarioError("scenario: rates must satisfy imu_hz >= range_hz > 0");
  }
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    throw ScenarioError("scenario: duration_s must be positive");
  }
  if (!filter.valid()) {
    throw ScenarioError("scenario: invalid filter parameters");
  }
  if (policy.kind == PolicyKind::kSequential) {
    if (policy.order.empty()) {
      for (int id : ids) policy.order.push_back(id);  // ascending
    }
    std::set<int> order_ids(policy.order.begin(), policy.order.end());
    if (order_ids != ids || policy.order.size() != ids.size()) {
      throw ScenarioError(
          "scenario: sequential order must be a permutation of anchor ids");
    }
  }
}

const Anchor& Scenario::anchor_by_id(int id) const {
  auto it = std::find_if(anchors.begin(), anchors.end(),
                         [id](const Anchor& a) { return a.id == id; });
  if (it == anchors.end()) {
    throw ScenarioError("scenario: no anchor with id " + std::to_string(id));
  }
  return *it;
}

}  // namespace uwbsel
