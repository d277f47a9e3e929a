#include "vtwin/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "vtwin/dataset.hpp"

namespace vtwin {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxWaypointAttempts = 10000;
constexpr double kCurrentCorrelationTime = 30.0;  // s

double deg(double d) { return d * kPi / 180.0; }

double planar_distance(const Waypoint& a, const Waypoint& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

double uniform(Rng& rng, const Range& r) {
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

}  // namespace

std::string to_string(DisturbanceKind kind) {
  switch (kind) {
    case DisturbanceKind::sensor_noise: return "sensor_noise";
    case DisturbanceKind::actuator_extreme: return "actuator_extreme";
    case DisturbanceKind::current_spike: return "current_spike";
  }
  return "unknown";
}

DisturbanceKind parse_disturbance_kind(const std::string& s) {
  if (s == "sensor_noise") return DisturbanceKind::sensor_noise;
  if (s == "actuator_extreme") return DisturbanceKind::actuator_extreme;
  if (s == "current_spike") return DisturbanceKind::current_spike;
  throw std::invalid_argument("unknown disturbance kind '" + s +
                              "' (expected sensor_noise, actuator_extreme or current_spike)");
}

double zigzag_controller(const VesselState& state, const ZigzagSpec& spec, ZigzagMemory& memory,
                         double delta_override_deg) {
  const double psi = deg(spec.psi_deg);
  const double deviation = wrap_angle(state.yaw - memory.initial_course);
  if (memory.sign > 0 && deviation >= psi) memory.sign = -1;
  else if (memory.sign < 0 && deviation <= -psi) memory.sign = 1;
  const double delta = delta_override_deg > 0.0 ? delta_override_deg : spec.delta_deg;
  return memory.sign * deg(delta);
}

std::vector<Waypoint> generate_waypoints(const WaypointSpec& spec, Rng& rng) {
  if (spec.n_waypoints < 2) throw std::invalid_argument("waypoints: n_waypoints must be >= 2");
  if (!(spec.r_switch > 0.0)) throw std::invalid_argument("waypoints: r_switch must be positive");
  if (!(spec.x_range.hi > spec.x_range.lo) || !(spec.y_range.hi > spec.y_range.lo) ||
      (spec.z_range && !(spec.z_range->hi > spec.z_range->lo))) {
    throw std::invalid_argument("waypoints: coordinate ranges must be non-degenerate");
  }
  if (spec.min_distance && !(*spec.min_distance > 2.0 * spec.r_switch)) {
    throw std::invalid_argument("waypoints: min_distance must exceed 2 * r_switch");
  }
  auto draw = [&] {
    Waypoint w;
    w.x = uniform(rng, spec.x_range);
    w.y = uniform(rng, spec.y_range);
    if (spec.z_range) w.z = uniform(rng, *spec.z_range);
    return w;
  };
  std::vector<Waypoint> out;
  out.reserve(static_cast<std::size_t>(spec.n_waypoints));
  out.push_back(draw());
  for (int i = 1; i < spec.n_waypoints; ++i) {
    int attempts = 0;
    for (;;) {
      Waypoint w = draw();
      if (!spec.min_distance || planar_distance(w, out.back()) >= *spec.min_distance) {
        out.push_back(w);
        break;
      }
      if (++attempts >= kMaxWaypointAttempts) {
        throw std::runtime_error(
            "waypoints: could not satisfy min_distance after 10000 attempts; widen the "
            "coordinate ranges or lower min_distance");
      }
    }
  }
  return out;
}

GuidanceCommand los_guidance(const Waypoint& position, std::span<const Waypoint> waypoints,
                             std::size_t active_index, double r_switch, double lookahead,
                             double cross_track_lead) {
  if (waypoints.empty() || active_index >= waypoints.size()) {
    throw std::out_of_range("los_guidance: active index outside the waypoint list");
  }
  GuidanceCommand cmd;
  cmd.active_index = active_index;
  if (planar_distance(position, waypoints[active_index]) <= r_switch) {
    if (active_index + 1 < waypoints.size()) ++cmd.active_index;
    else cmd.finished = true;
  }
  const Waypoint& target = waypoints[cmd.active_index];
  cmd.depth = target.z;

  if (cmd.finished) {
    if (waypoints.size() >= 2) {
      const Waypoint& a = waypoints[waypoints.size() - 2];
      cmd.heading = std::atan2(target.y - a.y, target.x - a.x);
    } else {
      cmd.heading = std::atan2(target.y - position.y, target.x - position.x);
    }
    return cmd;
  }

  if (lookahead > 0.0 && cmd.active_index >= 1) {
    const Waypoint& a = waypoints[cmd.active_index - 1];
    const double lx = target.x - a.x;
    const double ly = target.y - a.y;
    const double len = std::hypot(lx, ly);
    if (len > 0.0) {
      const double along = ((position.x - a.x) * lx + (position.y - a.y) * ly) / len;
      cmd.cross_track = (lx * (position.y - a.y) - ly * (position.x - a.x)) / len;
      if (along + lookahead < len) {
        cmd.heading = wrap_angle(std::atan2(ly, lx) - std::atan((cmd.cross_track + cross_track_lead) / lookahead));
        return cmd;
      }
    }
  }
  cmd.heading = std::atan2(target.y - position.y, target.x - position.x);
  return cmd;
}

double heading_autopilot(const AutopilotGains& gains, double heading_command,
                         const VesselState& state) {
  return gains.heading_gain * wrap_angle(heading_command - state.yaw) - gains.yaw_damping * state.r;
}

Waypoint apply_sensor_noise(const Waypoint& p, double sigma, std::span<const double, 3> draws) {
  return {p.x + sigma * draws[0], p.y + sigma * draws[1], p.z + sigma * draws[2]};
}

Waypoint inject_sensor_noise(const Waypoint& p, double sigma, Rng& rng) {
  std::normal_distribution<double> randn(0.0, 1.0);
  const double draws[3] = {randn(rng), randn(rng), randn(rng)};
  return apply_sensor_noise(p, sigma, std::span<const double, 3>(draws));
}

void validate(const ScenarioSpec& spec, const VesselParams& params) {
  if (!(spec.sample_period > 0.0)) throw std::invalid_argument("scenario: sample_period must be positive");
  if (!(spec.total_duration >= 2.0 * spec.sample_period)) {
    throw std::invalid_argument("scenario: total_duration must cover at least two samples");
  }
  if (spec.env.current_speed < 0.0) throw std::invalid_argument("scenario: current speed must be >= 0");
  if (!params.supports_current && (spec.env.current_speed != 0.0 || spec.current_jitter != 0.0)) {
    throw std::invalid_argument("scenario: preset '" + params.name +
                                "' does not support ocean current");
  }
  const bool zigzag = std::holds_alternative<ZigzagSpec>(spec.maneuver);
  if (zigzag) {
    const auto& z = std::get<ZigzagSpec>(spec.maneuver);
    if (!params.supports_zigzag) {
      throw std::invalid_argument("scenario: preset '" + params.name + "' does not support zigzag maneuvers");
    }
    if (!(z.delta_deg > 0.0) || !(z.psi_deg > 0.0) || z.duration < 0.0) {
      throw std::invalid_argument("scenario: zigzag requires delta > 0, psi > 0, duration >= 0");
    }
  } else {
    if (!params.supports_waypoint) {
      throw std::invalid_argument("scenario: preset '" + params.name + "' does not support waypoint maneuvers");
    }
    const auto& w = std::get<WaypointSpec>(spec.maneuver);
    if (params.path_3d != w.z_range.has_value()) {
      throw std::invalid_argument(params.path_3d ? "scenario: 3D preset requires z_range"
                                                 : "scenario: 2D preset must not set z_range");
    }
  }
  if (!spec.disturbance) return;
  const auto& d = *spec.disturbance;
  if (!(d.duration > 0.0)) throw std::invalid_argument("disturbance: duration must be positive");
  switch (d.kind) {
    case DisturbanceKind::sensor_noise:
      if (!(d.magnitude > 0.0)) throw std::invalid_argument("disturbance: sensor noise sigma must be positive");
      if (zigzag) throw std::invalid_argument("disturbance: sensor_noise requires a waypoint maneuver");
      break;
    case DisturbanceKind::actuator_extreme:
      if (!(d.magnitude > 0.0)) throw std::invalid_argument("disturbance: extreme rudder angle must be positive");
      if (!zigzag) throw std::invalid_argument("disturbance: actuator_extreme requires a zigzag maneuver");
      break;
    case DisturbanceKind::current_spike:
      if (d.magnitude < 0.0) throw std::invalid_argument("disturbance: current speed must be >= 0");
      if (!params.supports_current) {
        throw std::invalid_argument("disturbance: current_spike requires a preset with ocean current support ('" +
                                    params.name + "' has none)");
      }
      break;
  }
  if (d.start) {
    if (*d.start < 0.0 || *d.start + d.duration > spec.total_duration) {
      throw std::invalid_argument("disturbance: window must lie within [0, total_duration]");
    }
  } else if (spec.total_duration - d.duration - spec.horizon_margin < 0.0) {
    throw std::invalid_argument("disturbance: total_duration too short for a random window plus margin");
  }
}

LabeledTrajectory run_scenario(const ScenarioSpec& spec, ScenarioTrace* trace) {
  const VesselParams params = make_preset(spec.vessel);
  validate(spec, params);
  const double dt = spec.sample_period;
  const auto n_samples = static_cast<std::size_t>(std::llround(spec.total_duration / dt));

  Rng waypoint_rng(derive_seed(spec.seed, "waypoints"));
  Rng start_rng(derive_seed(spec.seed, "disturbance_start"));
  Rng sensor_rng(derive_seed(spec.seed, "sensor_noise"));
  Rng current_rng(derive_seed(spec.seed, "current"));

  LabeledTrajectory traj;
  traj.vessel = params.name;
  traj.columns = column_schema(params).columns;

  std::optional<Interval> window;
  if (spec.disturbance) {
    const auto& d = *spec.disturbance;
    double start = 0.0;
    if (d.start) {
      start = *d.start;
    } else {
      const auto last = static_cast<long long>(
          std::floor((spec.total_duration - d.duration - spec.horizon_margin) / dt));
      start = static_cast<double>(std::uniform_int_distribution<long long>(0, last)(start_rng)) * dt;
    }
    window = Interval{start, start + d.duration};
    traj.disturbance_interval = window;
  }

  const bool zigzag = std::holds_alternative<ZigzagSpec>(spec.maneuver);
  std::vector<Waypoint> waypoints;
  std::size_t active = 1;
  ZigzagMemory zz;
  VesselState state;
  double propeller = 0.0;

  if (zigzag) {
    const auto& z = std::get<ZigzagSpec>(spec.maneuver);
    propeller = z.propeller > 0.0 ? z.propeller : params.nominal_propeller;
    state = initial_state(params, z.initial_heading, propeller);
    zz.initial_course = state.yaw;
  } else {
    const auto& w = std::get<WaypointSpec>(spec.maneuver);
    propeller = w.propeller > 0.0 ? w.propeller : params.nominal_propeller;
    waypoints = generate_waypoints(w, waypoint_rng);
    const double heading = std::atan2(waypoints[1].y - waypoints[0].y, waypoints[1].x - waypoints[0].x);
    state = initial_state(params, heading, propeller);
    state.x = waypoints[0].x;
    state.y = waypoints[0].y;
    state.z = waypoints[0].z;
  }
  if (trace) trace->waypoints = waypoints;

  ControlInput prev;
  if (params.twin_thrust) {
    prev.propeller_left = propeller;
    prev.propeller_right = propeller;
  } else if (params.max_propeller > 0.0) {
    prev.propeller = propeller;
  }

  const double gm_decay = std::exp(-dt / kCurrentCorrelationTime);
  const double gm_scale = spec.current_jitter * std::sqrt(1.0 - gm_decay * gm_decay);
  double current_fluctuation = 0.0;
  if (spec.current_jitter > 0.0) {
    current_fluctuation = spec.current_jitter * std::normal_distribution<double>(0.0, 1.0)(current_rng);
  }

  std::vector<double> cross_track_history;
  traj.rows.reserve(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double t = static_cast<double>(k) * dt;
    state.time = t;
    const bool active_window = window && t >= window->start && t < window->end;
    const auto kind = spec.disturbance ? spec.disturbance->kind : DisturbanceKind::sensor_noise;

    EnvCondition env = spec.env;
    if (active_window && kind == DisturbanceKind::current_spike) env.current_speed = spec.disturbance->magnitude;
    if (params.supports_current) env.current_speed = std::max(0.0, env.current_speed + current_fluctuation);

    ControlInput cmd = prev;
    if (zigzag) {
      const auto& z = std::get<ZigzagSpec>(spec.maneuver);
      double override_deg = 0.0;
      if (active_window && kind == DisturbanceKind::actuator_extreme) {
        override_deg = spec.disturbance->additive_rudder ? z.delta_deg + spec.disturbance->magnitude
                                                         : spec.disturbance->magnitude;
      }
      double rudder = zigzag_controller(state, z, zz, override_deg);
      if (z.duration > 0.0 && t >= z.duration) rudder = 0.0;
      if (trace) trace->rudder_requests.push_back(rudder);
      cmd.rudder = rudder;
      cmd.stern_plane = 0.0;
      cmd.propeller = propeller;
    } else {
      Waypoint estimate{state.x, state.y, state.z};
      if (active_window && kind == DisturbanceKind::sensor_noise) {
        estimate = inject_sensor_noise(estimate, spec.disturbance->magnitude, sensor_rng);
        if (!params.path_3d) estimate.z = state.z;
      }
      // Cross-track rate from the last two estimates on the same leg.
      const double lead = cross_track_history.size() == 2
                              ? params.autopilot.cross_track_rate_gain *
                                    (cross_track_history[1] - cross_track_history[0]) / dt
                              : 0.0;
      const GuidanceCommand g =
          los_guidance(estimate, waypoints, active, std::get<WaypointSpec>(spec.maneuver).r_switch,
                       params.autopilot.lookahead, lead);
      if (g.active_index != active) {
        if (trace) trace->switches.push_back({t, active, planar_distance(estimate, waypoints[active])});
        cross_track_history.clear();
      }
      active = g.active_index;
      if (cross_track_history.size() == 2) cross_track_history.erase(cross_track_history.begin());
      cross_track_history.push_back(g.cross_track);
      const double rudder = std::clamp(heading_autopilot(params.autopilot, g.heading, state),
                                       -params.max_rudder, params.max_rudder);
      if (params.twin_thrust) {
        const double half = rudder / (2.0 * params.thrust_steer_gain);
        cmd.propeller_left = propeller - half;
        cmd.propeller_right = propeller + half;
      } else {
        cmd.rudder = rudder;
        cmd.propeller = propeller;
      }
      if (params.path_3d) {
        const auto& ap = params.autopilot;
        const double pitch_cmd =
            std::clamp(-std::atan(ap.depth_gain * (g.depth - estimate.z)), -ap.max_pitch, ap.max_pitch);
        cmd.stern_plane = ap.pitch_gain * (pitch_cmd - state.pitch);
        if (params.controls.size() > 3) {
          cmd.bow_port = -0.5 * cmd.stern_plane;
          cmd.bow_starboard = -0.5 * cmd.stern_plane;
        }
      }
    }
    const ControlInput control = saturate(cmd, prev, params, dt);

    std::vector<double> row;
    row.reserve(traj.columns.size());
    row.push_back(t);
    for (double v : state_features(params, state)) row.push_back(v);
    for (double v : control_features(params, control)) row.push_back(v);
    if (params.supports_current) row.push_back(env.current_speed);
    traj.rows.push_back(std::move(row));
    if (trace) trace->states.push_back(state);

    state = step(params, state, control, env, dt);
    prev = control;
    if (spec.current_jitter > 0.0) {
      current_fluctuation = gm_decay * current_fluctuation +
                            gm_scale * std::normal_distribution<double>(0.0, 1.0)(current_rng);
    }
  }
  return traj;
}

}  // namespace vtwin
