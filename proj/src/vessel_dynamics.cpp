#include "vtwin/vessel_dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vtwin {

namespace {

constexpr double kPi = std::numbers::pi;

double deg(double d) { return d * kPi / 180.0; }

// Coefficients follow from two size anchors per vessel (length L and cruise
// speed U) through dimensionless Nomoto constants: K = K' U / L and
// T = T' L / U.  The remaining gains are picked so that steady roll/pitch
// responses stay within a few degrees at typical deflections.
VesselParams mariner() {
  VesselParams p;
  p.name = "mariner";
  p.dof = 3;
  p.length = 160.93;
  p.mass = 1.66e7;
  p.nominal_propeller = 80.0;
  p.surge_gain = 7.7 / 80.0;
  p.surge_time_constant = 60.0;
  p.nomoto_gain = 1.0 * 7.7 / 160.93;
  p.nomoto_time_constant = 1.5 * 160.93 / 7.7;
  p.sway_coupling = -0.1 * 160.93;
  p.max_rudder = deg(40.0);
  p.max_rudder_rate = deg(5.0);
  p.supports_waypoint = true;
  p.supports_zigzag = true;
  p.controls = {"rudder_angle"};
  p.autopilot.heading_gain = 1.0;
  p.autopilot.yaw_damping = 30.0;
  p.autopilot.lookahead = 400.0;
  p.autopilot.cross_track_rate_gain = 30.0;
  return p;
}

VesselParams container() {
  VesselParams p;
  p.name = "container";
  p.dof = 4;
  p.length = 175.0;
  p.mass = 2.1e7;
  p.nominal_propeller = 80.0;
  p.surge_gain = 8.0 / 80.0;
  p.surge_time_constant = 60.0;
  p.nomoto_gain = 1.2 * 8.0 / 175.0;
  p.nomoto_time_constant = 1.2 * 175.0 / 8.0;
  p.sway_coupling = -0.1 * 175.0;
  p.roll_natural_frequency = 0.314;
  p.roll_damping_ratio = 0.1;
  p.rudder_roll_gain = 0.01;
  p.max_rudder = deg(40.0);
  p.max_rudder_rate = deg(5.0);
  p.supports_zigzag = true;
  p.controls = {"rudder_angle"};
  p.autopilot.heading_gain = 2.0;
  p.autopilot.yaw_damping = 25.0;
  p.autopilot.lookahead = 120.0;
  return p;
}

VesselParams remus100() {
  VesselParams p;
  p.name = "remus100";
  p.dof = 6;
  p.length = 1.6;
  p.mass = 31.9;
  p.min_propeller = 0.0;
  p.max_propeller = 1525.0;
  p.nominal_propeller = 1300.0;
  p.surge_gain = 2.0 / 1525.0;
  p.surge_time_constant = 3.0;
  p.nomoto_gain = 0.6 * 2.0 / 1.6;
  p.nomoto_time_constant = 1.5 * 1.6 / 2.0;
  p.sway_coupling = -0.1 * 1.6;
  p.roll_natural_frequency = 1.5;
  p.roll_damping_ratio = 0.3;
  p.rudder_roll_gain = 0.3;
  p.stern_pitch_gain = 0.5;
  p.pitch_time_constant = 2.0;
  p.heave_gain = 0.3;
  p.max_rudder = deg(20.0);
  p.max_rudder_rate = deg(10.0);
  p.max_plane = deg(20.0);
  p.supports_current = true;
  p.supports_waypoint = true;
  p.supports_zigzag = true;
  p.path_3d = true;
  p.controls = {"rudder_angle", "stern_plane_angle", "propeller"};
  p.autopilot.heading_gain = 1.0;
  p.autopilot.yaw_damping = 0.5;
  p.autopilot.lookahead = 8.0;
  p.autopilot.depth_gain = 0.1;
  p.autopilot.max_pitch = deg(15.0);
  p.autopilot.pitch_gain = 2.0;
  return p;
}

VesselParams nps_auv() {
  VesselParams p;
  p.name = "nps_auv";
  p.dof = 6;
  p.length = 5.3;
  p.mass = 5443.0;
  p.min_propeller = 0.0;
  p.max_propeller = 1500.0;
  p.nominal_propeller = 1200.0;
  p.surge_gain = 2.5 / 1500.0;
  p.surge_time_constant = 6.0;
  p.nomoto_gain = 0.8 * 2.0 / 5.3;
  p.nomoto_time_constant = 1.5 * 5.3 / 2.0;
  p.sway_coupling = -0.1 * 5.3;
  p.roll_natural_frequency = 1.0;
  p.roll_damping_ratio = 0.3;
  p.rudder_roll_gain = 0.1;
  p.bow_roll_gain = 0.05;
  p.stern_pitch_gain = 0.4;
  p.pitch_time_constant = 4.0;
  p.heave_gain = 0.5;
  p.max_rudder = deg(20.0);
  p.max_rudder_rate = deg(10.0);
  p.max_plane = deg(20.0);
  p.supports_current = true;
  p.supports_waypoint = true;
  p.path_3d = true;
  p.controls = {"rudder_angle", "stern_plane_angle", "port_bow_plane_angle",
                "starboard_bow_plane_angle", "propeller"};
  p.autopilot.heading_gain = 1.0;
  p.autopilot.yaw_damping = 1.5;
  p.autopilot.lookahead = 25.0;
  p.autopilot.depth_gain = 0.05;
  p.autopilot.max_pitch = deg(15.0);
  p.autopilot.pitch_gain = 2.0;
  return p;
}

VesselParams otter() {
  VesselParams p;
  p.name = "otter";
  p.dof = 6;
  p.length = 2.0;
  p.mass = 55.0;
  p.min_propeller = -1000.0;
  p.max_propeller = 1000.0;
  p.nominal_propeller = 800.0;
  p.surge_gain = 1.5 / 800.0;
  p.surge_time_constant = 4.0;
  p.nomoto_gain = 0.8 * 1.5 / 2.0;
  p.nomoto_time_constant = 1.5 * 2.0 / 1.5;
  p.sway_coupling = -0.1 * 2.0;
  p.roll_natural_frequency = 2.0;
  p.roll_damping_ratio = 0.4;
  p.rudder_roll_gain = 0.2;
  p.pitch_time_constant = 1.0;
  p.max_rudder = deg(30.0);  // effective rudder from differential thrust
  p.max_rudder_rate = deg(30.0);
  p.twin_thrust = true;
  p.thrust_steer_gain = 0.00175;
  p.supports_current = true;
  p.supports_waypoint = true;
  p.controls = {"left_propeller", "right_propeller"};
  p.autopilot.heading_gain = 1.0;
  p.autopilot.yaw_damping = 1.0;
  p.autopilot.lookahead = 10.0;
  return p;
}

bool finite(const VesselState& s) {
  for (double c : {s.time, s.x, s.y, s.z, s.roll, s.pitch, s.yaw, s.u, s.v, s.w, s.p, s.q, s.r}) {
    if (!std::isfinite(c)) return false;
  }
  return true;
}

bool finite(const ControlInput& c) {
  for (double v : {c.rudder, c.stern_plane, c.bow_port, c.bow_starboard, c.propeller,
                   c.propeller_left, c.propeller_right}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

struct Effective {
  double rudder;
  double plane;
  double bow_differential;
  double propeller;
};

Effective effective_controls(const VesselParams& params, const ControlInput& c) {
  Effective e{};
  if (params.twin_thrust) {
    e.rudder = params.thrust_steer_gain * (c.propeller_right - c.propeller_left);
    e.propeller = 0.5 * (c.propeller_left + c.propeller_right);
  } else {
    e.rudder = c.rudder;
    e.propeller = params.max_propeller > 0.0 ? c.propeller : params.nominal_propeller;
  }
  e.plane = c.stern_plane - 0.5 * (c.bow_port + c.bow_starboard);
  e.bow_differential = c.bow_port - c.bow_starboard;
  return e;
}

// Integrated states: x y z roll pitch yaw u p r.
using Vec9 = std::array<double, 9>;

struct Derived {
  double v, w, q;
};

Derived derived(const VesselParams& params, const Vec9& s, const Effective& e) {
  Derived d{};
  d.v = params.sway_coupling * s[8];
  if (params.dof == 6) {
    d.q = (params.stern_pitch_gain * e.plane - s[4]) / params.pitch_time_constant;
    d.w = params.heave_gain * d.q;
  }
  return d;
}

Vec9 derivative(const VesselParams& params, const Vec9& s, const Effective& e,
                const EnvCondition& env) {
  const Derived d = derived(params, s, e);
  const double psi = s[5];
  const double u = s[6];
  Vec9 f{};
  f[0] = u * std::cos(psi) - d.v * std::sin(psi) + env.current_speed * std::cos(env.current_direction);
  f[1] = u * std::sin(psi) + d.v * std::cos(psi) + env.current_speed * std::sin(env.current_direction);
  if (params.dof == 6) {
    f[2] = -u * std::sin(s[4]) + d.w * std::cos(s[4]);
    f[4] = d.q;
  }
  if (params.dof >= 4) {
    const double wn = params.roll_natural_frequency;
    f[3] = s[7];
    f[7] = -2.0 * params.roll_damping_ratio * wn * s[7] - wn * wn * s[3] +
           params.rudder_roll_gain * e.rudder + params.bow_roll_gain * e.bow_differential;
  }
  f[5] = s[8];
  f[6] = (params.surge_gain * e.propeller - u) / params.surge_time_constant;
  f[8] = (params.nomoto_gain * e.rudder - s[8]) / params.nomoto_time_constant;
  return f;
}

Vec9 axpy(const Vec9& s, double h, const Vec9& k) {
  Vec9 out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s[i] + h * k[i];
  return out;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"mariner", "container", "remus100", "nps_auv",
                                                 "otter"};
  return names;
}

VesselParams make_preset(std::string_view name) {
  if (name == "mariner") return mariner();
  if (name == "container") return container();
  if (name == "remus100") return remus100();
  if (name == "nps_auv") return nps_auv();
  if (name == "otter") return otter();
  std::string msg = "unknown preset '" + std::string(name) + "'; valid presets:";
  for (const auto& n : preset_names()) msg += " " + n;
  throw std::invalid_argument(msg);
}

double wrap_angle(double a) {
  if (a > -kPi && a <= kPi) return a;
  double r = std::fmod(a + kPi, 2.0 * kPi);
  if (r <= 0.0) r += 2.0 * kPi;
  return r - kPi;
}

ControlInput saturate(const ControlInput& control, const ControlInput& prev,
                      const VesselParams& params, double dt) {
  const double max_step = params.max_rudder_rate * dt;
  auto angle = [&](double request, double previous, double limit) {
    double v = std::clamp(request, -limit, limit);
    if (params.max_rudder_rate > 0.0) v = std::clamp(v, previous - max_step, previous + max_step);
    return v;
  };
  ControlInput out;
  out.rudder = angle(control.rudder, prev.rudder, params.max_rudder);
  out.stern_plane = angle(control.stern_plane, prev.stern_plane, params.max_plane);
  out.bow_port = angle(control.bow_port, prev.bow_port, params.max_plane);
  out.bow_starboard = angle(control.bow_starboard, prev.bow_starboard, params.max_plane);
  out.propeller = std::clamp(control.propeller, params.min_propeller, params.max_propeller);
  out.propeller_left = std::clamp(control.propeller_left, params.min_propeller, params.max_propeller);
  out.propeller_right = std::clamp(control.propeller_right, params.min_propeller, params.max_propeller);
  return out;
}

VesselState step(const VesselParams& params, const VesselState& state,
                 const ControlInput& control, const EnvCondition& env, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("step: dt must be positive");
  if (!finite(state) || !finite(control) || !std::isfinite(env.current_speed) ||
      !std::isfinite(env.current_direction)) {
    throw std::invalid_argument("step: non-finite input");
  }
  const Effective e = effective_controls(params, control);
  Vec9 s = {state.x, state.y, state.z, state.roll, state.pitch, state.yaw, state.u, state.p, state.r};

  const int substeps = std::max(1, static_cast<int>(std::ceil(dt / kIntegrationStep - 1e-9)));
  const double h = dt / substeps;
  for (int i = 0; i < substeps; ++i) {
    const Vec9 k1 = derivative(params, s, e, env);
    const Vec9 k2 = derivative(params, axpy(s, 0.5 * h, k1), e, env);
    const Vec9 k3 = derivative(params, axpy(s, 0.5 * h, k2), e, env);
    const Vec9 k4 = derivative(params, axpy(s, h, k3), e, env);
    for (std::size_t j = 0; j < s.size(); ++j) {
      s[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
    s[3] = wrap_angle(s[3]);
    s[4] = wrap_angle(s[4]);
    s[5] = wrap_angle(s[5]);
  }

  const Derived d = derived(params, s, e);
  VesselState out;
  out.time = state.time + dt;
  out.x = s[0];
  out.y = s[1];
  out.z = s[2];
  out.roll = s[3];
  out.pitch = s[4];
  out.yaw = s[5];
  out.u = s[6];
  out.p = s[7];
  out.r = s[8];
  out.v = d.v;
  out.w = d.w;
  out.q = d.q;
  if (!finite(out)) throw std::runtime_error("step: integration produced a non-finite state");
  return out;
}

VesselState initial_state(const VesselParams& params, double heading, double propeller) {
  VesselState s;
  s.yaw = wrap_angle(heading);
  const double n = params.twin_thrust || params.max_propeller > 0.0 ? propeller
                                                                     : params.nominal_propeller;
  s.u = params.surge_gain * n;
  return s;
}

std::vector<std::string> state_feature_names(const VesselParams& params) {
  switch (params.dof) {
    case 3:
      return {"surge_velocity", "sway_velocity", "yaw_rate", "yaw_angle"};
    case 4:
      return {"surge_velocity", "sway_velocity", "yaw_rate", "yaw_angle", "roll_rate", "roll_angle"};
    default:
      return {"surge_velocity", "sway_velocity", "heave_velocity", "roll_rate", "pitch_rate",
              "yaw_rate",       "roll_angle",    "pitch_angle",    "yaw_angle"};
  }
}

std::vector<double> state_features(const VesselParams& params, const VesselState& s) {
  switch (params.dof) {
    case 3:
      return {s.u, s.v, s.r, s.yaw};
    case 4:
      return {s.u, s.v, s.r, s.yaw, s.p, s.roll};
    default:
      return {s.u, s.v, s.w, s.p, s.q, s.r, s.roll, s.pitch, s.yaw};
  }
}

std::vector<double> control_features(const VesselParams& params, const ControlInput& c) {
  std::vector<double> out;
  out.reserve(params.controls.size());
  for (const auto& name : params.controls) {
    if (name == "rudder_angle") out.push_back(c.rudder);
    else if (name == "stern_plane_angle") out.push_back(c.stern_plane);
    else if (name == "port_bow_plane_angle") out.push_back(c.bow_port);
    else if (name == "starboard_bow_plane_angle") out.push_back(c.bow_starboard);
    else if (name == "propeller") out.push_back(c.propeller);
    else if (name == "left_propeller") out.push_back(c.propeller_left);
    else if (name == "right_propeller") out.push_back(c.propeller_right);
    else throw std::logic_error("unknown control channel " + name);
  }
  return out;
}

}  // namespace vtwin
