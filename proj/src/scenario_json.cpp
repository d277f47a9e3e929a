#include <stdexcept>

#include <json.hpp>

#include "vtwin/scenario.hpp"

namespace vtwin {

using nlohmann::json;

namespace {

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

Range range_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("range must be a [lo, hi] pair");
  Range r{j[0].get<double>(), j[1].get<double>()};
  if (!(r.lo < r.hi)) throw std::invalid_argument("range must satisfy lo < hi");
  return r;
}

}  // namespace

std::string scenario_to_json(const ScenarioSpec& spec) {
  json j;
  j["vessel"] = spec.vessel;
  if (const auto* z = std::get_if<ZigzagSpec>(&spec.maneuver)) {
    j["maneuver"] = {{"type", "zigzag"}, {"delta_deg", z->delta_deg}, {"psi_deg", z->psi_deg},
                     {"duration", z->duration}, {"propeller", z->propeller},
                     {"initial_heading", z->initial_heading}};
  } else {
    const auto& w = std::get<WaypointSpec>(spec.maneuver);
    json m = {{"type", "waypoint"}, {"n_waypoints", w.n_waypoints}, {"r_switch", w.r_switch},
              {"x_range", range_json(w.x_range)}, {"y_range", range_json(w.y_range)},
              {"propeller", w.propeller}};
    if (w.min_distance) m["min_distance"] = *w.min_distance;
    if (w.z_range) m["z_range"] = range_json(*w.z_range);
    j["maneuver"] = m;
  }
  if (spec.disturbance) {
    const auto& d = *spec.disturbance;
    json dj = {{"kind", to_string(d.kind)}, {"magnitude", d.magnitude}, {"duration", d.duration},
               {"additive_rudder", d.additive_rudder}};
    dj["start"] = d.start ? json(*d.start) : json("random");
    j["disturbance"] = dj;
  }
  j["env"] = {{"current_speed", spec.env.current_speed}, {"current_direction", spec.env.current_direction}};
  j["current_jitter"] = spec.current_jitter;
  j["seed"] = spec.seed;
  j["total_duration"] = spec.total_duration;
  j["sample_period"] = spec.sample_period;
  j["horizon_margin"] = spec.horizon_margin;
  return j.dump(2);
}

ScenarioSpec scenario_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    ScenarioSpec spec;
    spec.vessel = j.at("vessel").get<std::string>();
    const json& m = j.at("maneuver");
    const std::string type = m.at("type").get<std::string>();
    if (type == "zigzag") {
      ZigzagSpec z;
      z.delta_deg = m.at("delta_deg").get<double>();
      z.psi_deg = m.at("psi_deg").get<double>();
      z.duration = m.value("duration", 0.0);
      z.propeller = m.value("propeller", 0.0);
      z.initial_heading = m.value("initial_heading", 0.0);
      spec.maneuver = z;
    } else if (type == "waypoint") {
      WaypointSpec w;
      w.n_waypoints = m.at("n_waypoints").get<int>();
      w.r_switch = m.at("r_switch").get<double>();
      w.x_range = range_from(m.at("x_range"));
      w.y_range = range_from(m.at("y_range"));
      w.propeller = m.value("propeller", 0.0);
      if (m.contains("min_distance")) w.min_distance = m.at("min_distance").get<double>();
      if (m.contains("z_range")) w.z_range = range_from(m.at("z_range"));
      spec.maneuver = w;
    } else {
      throw std::invalid_argument("unknown maneuver type '" + type + "' (expected zigzag or waypoint)");
    }
    if (j.contains("disturbance") && !j.at("disturbance").is_null()) {
      const json& dj = j.at("disturbance");
      DisturbanceSpec d;
      d.kind = parse_disturbance_kind(dj.at("kind").get<std::string>());
      d.magnitude = dj.at("magnitude").get<double>();
      d.duration = dj.value("duration", 120.0);
      d.additive_rudder = dj.value("additive_rudder", false);
      if (dj.contains("start")) {
        const json& s = dj.at("start");
        if (s.is_number()) {
          d.start = s.get<double>();
        } else if (!(s.is_string() && s.get<std::string>() == "random")) {
          throw std::invalid_argument("disturbance start must be a number or \"random\"");
        }
      }
      spec.disturbance = d;
    }
    if (j.contains("env")) {
      spec.env.current_speed = j.at("env").value("current_speed", 0.0);
      spec.env.current_direction = j.at("env").value("current_direction", 0.0);
    }
    spec.current_jitter = j.value("current_jitter", 0.0);
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.total_duration = j.value("total_duration", 600.0);
    spec.sample_period = j.value("sample_period", 1.0);
    spec.horizon_margin = j.value("horizon_margin", 60.0);
    return spec;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("scenario spec: ") + e.what());
  }
}

}  // namespace vtwin
