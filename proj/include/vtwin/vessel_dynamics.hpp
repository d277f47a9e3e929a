#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vtwin {

/// Heading/depth autopilot and line-of-sight constants, fixed per preset.
struct AutopilotGains {
  double heading_gain = 1.0;   // rudder rad per rad of heading error
  double yaw_damping = 0.0;    // rudder rad per rad/s of yaw rate
  double lookahead = 0.0;      // m; 0 selects pure pursuit of the active waypoint
  double cross_track_rate_gain = 0.0;  // s; lead on the estimated cross-track rate
  double depth_gain = 0.0;     // commanded pitch rad per m of depth error
  double max_pitch = 0.0;      // rad
  double pitch_gain = 0.0;     // stern plane rad per rad of pitch error
};

/// Reduced-order maneuvering model. Time constants in s, angles in rad.
struct VesselParams {
  std::string name;
  int dof = 3;
  double length = 0.0;  // m
  double mass = 0.0;    // kg

  double surge_gain = 0.0;  // (m/s)/rpm
  double surge_time_constant = 1.0;
  double nomoto_gain = 0.0;  // (rad/s)/rad
  double nomoto_time_constant = 1.0;
  double sway_coupling = 0.0;  // m; v = sway_coupling * r

  // 4/6 DoF
  double roll_natural_frequency = 0.0;
  double roll_damping_ratio = 0.0;
  double rudder_roll_gain = 0.0;
  double bow_roll_gain = 0.0;  // differential bow planes (nps_auv)

  // 6 DoF
  double stern_pitch_gain = 0.0;  // steady pitch per rad of effective plane
  double pitch_time_constant = 1.0;
  double heave_gain = 0.0;  // m per rad; w = heave_gain * q

  double max_rudder = 0.0;
  double max_rudder_rate = 0.0;
  double max_plane = 0.0;
  double min_propeller = 0.0;  // rpm
  double max_propeller = 0.0;
  double nominal_propeller = 0.0;  // fixed setting for presets without a propeller channel

  bool twin_thrust = false;         // otter: left/right propellers
  double thrust_steer_gain = 0.0;   // effective rudder rad per rpm of (right - left)

  bool supports_current = false;
  bool supports_waypoint = false;
  bool supports_zigzag = false;
  bool path_3d = false;  // waypoints carry depth

  std::vector<std::string> controls;  // recorded control channel names
  AutopilotGains autopilot;
};

/// Earth-frame position (x north, y east, z down), Euler angles and body rates.
struct VesselState {
  double time = 0.0;
  double x = 0.0, y = 0.0, z = 0.0;
  double roll = 0.0, pitch = 0.0, yaw = 0.0;
  double u = 0.0, v = 0.0, w = 0.0;  // surge, sway, heave
  double p = 0.0, q = 0.0, r = 0.0;  // roll, pitch, yaw rates
};

struct ControlInput {
  double rudder = 0.0;
  double stern_plane = 0.0;
  double bow_port = 0.0;
  double bow_starboard = 0.0;
  double propeller = 0.0;  // rpm
  double propeller_left = 0.0;
  double propeller_right = 0.0;
};

struct EnvCondition {
  double current_speed = 0.0;      // m/s
  double current_direction = 0.0;  // rad, earth frame
};

/// Names accepted by make_preset.
const std::vector<std::string>& preset_names();

/// Throws std::invalid_argument listing the valid presets for unknown names.
VesselParams make_preset(std::string_view name);

/// Wraps to (-pi, pi].
double wrap_angle(double a);

/// Clamps every channel to the preset limits, then rate-limits the angle
/// channels against `prev` by max_rudder_rate * dt.
ControlInput saturate(const ControlInput& control, const ControlInput& prev,
                      const VesselParams& params, double dt);

/// Advances the state by dt using fixed-step RK4 with 0.01 s substeps.
/// Throws std::invalid_argument on non-finite input or dt <= 0.
VesselState step(const VesselParams& params, const VesselState& state,
                 const ControlInput& control, const EnvCondition& env, double dt);

/// Equilibrium state for the given heading and propeller setting.
VesselState initial_state(const VesselParams& params, double heading, double propeller);

/// State feature names in recorded order for the preset's DoF.
std::vector<std::string> state_feature_names(const VesselParams& params);
std::vector<double> state_features(const VesselParams& params, const VesselState& state);
std::vector<double> control_features(const VesselParams& params, const ControlInput& control);

constexpr double kIntegrationStep = 0.01;

}  // namespace vtwin
