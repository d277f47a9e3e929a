#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "vtwin/random.hpp"
#include "vtwin/vessel_dynamics.hpp"

namespace vtwin {

struct ZigzagSpec {
  double delta_deg = 20.0;  // rudder magnitude
  double psi_deg = 20.0;    // heading deviation that flips the rudder
  double duration = 0.0;    // s; 0 runs the pattern for the whole scenario
  double propeller = 0.0;   // rpm, ignored for presets without a propeller channel
  double initial_heading = 0.0;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct WaypointSpec {
  int n_waypoints = 6;
  double r_switch = 100.0;
  std::optional<double> min_distance;
  Range x_range;
  Range y_range;
  std::optional<Range> z_range;  // 3D paths only
  double propeller = 0.0;        // cruise setting
};

enum class DisturbanceKind { sensor_noise, actuator_extreme, current_spike };

std::string to_string(DisturbanceKind kind);
DisturbanceKind parse_disturbance_kind(const std::string& s);

struct DisturbanceSpec {
  DisturbanceKind kind = DisturbanceKind::sensor_noise;
  // sigma in m, extreme rudder in deg, or spiked current speed in m/s.
  double magnitude = 0.0;
  std::optional<double> start;  // nullopt draws a random start from the seed
  double duration = 120.0;
  // Non-canonical: add the extreme angle to the zigzag delta instead of replacing it.
  bool additive_rudder = false;
};

struct ScenarioSpec {
  std::string vessel;
  std::variant<ZigzagSpec, WaypointSpec> maneuver;
  std::optional<DisturbanceSpec> disturbance;
  EnvCondition env;
  double current_jitter = 0.0;  // std of the Gauss-Markov fluctuation on current speed
  std::uint64_t seed = 0;
  double total_duration = 600.0;
  double sample_period = 1.0;
  double horizon_margin = 60.0;  // tail kept free of random disturbance windows
};

struct Interval {
  double start = 0.0;
  double end = 0.0;  // exclusive
  bool operator==(const Interval&) const = default;
};

/// Rows are (time, state features, control features, environment features).
struct LabeledTrajectory {
  std::string vessel;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::optional<Interval> disturbance_interval;
  bool operator==(const LabeledTrajectory&) const = default;
};

struct Waypoint {
  double x = 0.0, y = 0.0, z = 0.0;
};

struct ZigzagMemory {
  double initial_course = 0.0;
  int sign = 1;
};

/// Rudder command (rad, before saturation); flips memory.sign when the
/// heading deviation reaches psi in the current rudder direction.
double zigzag_controller(const VesselState& state, const ZigzagSpec& spec, ZigzagMemory& memory,
                         double delta_override_deg = 0.0);

/// Throws std::runtime_error when 10,000 draws cannot satisfy min_distance.
std::vector<Waypoint> generate_waypoints(const WaypointSpec& spec, Rng& rng);

struct GuidanceCommand {
  double heading = 0.0;
  double depth = 0.0;
  std::size_t active_index = 0;
  bool finished = false;
  double cross_track = 0.0;  // m, left of the active leg; lookahead mode only
};

/// Line-of-sight guidance toward the active waypoint.  With lookahead > 0
/// the target is the point `lookahead` metres ahead of the projection on the
/// current leg, shifted sideways by `cross_track_lead`; with lookahead == 0
/// it is the waypoint itself.
GuidanceCommand los_guidance(const Waypoint& position_estimate, std::span<const Waypoint> waypoints,
                             std::size_t active_index, double r_switch, double lookahead = 0.0,
                             double cross_track_lead = 0.0);

/// Heading autopilot: proportional on heading error with yaw-rate damping.
double heading_autopilot(const AutopilotGains& gains, double heading_command,
                         const VesselState& state);

/// x_true + sigma * draw, per axis.
Waypoint apply_sensor_noise(const Waypoint& true_position, double sigma,
                            std::span<const double, 3> draws);
Waypoint inject_sensor_noise(const Waypoint& true_position, double sigma, Rng& rng);

/// Validates the spec against the preset; throws std::invalid_argument naming
/// the violated constraint.
void validate(const ScenarioSpec& spec, const VesselParams& params);

struct SwitchEvent {
  double time = 0.0;
  std::size_t reached_index = 0;
  double distance = 0.0;  // from the position estimate that triggered the switch
};

/// Diagnostics collected while running a scenario.
struct ScenarioTrace {
  std::vector<Waypoint> waypoints;
  std::vector<VesselState> states;
  std::vector<double> rudder_requests;  // pre-saturation commands, zigzag only
  std::vector<SwitchEvent> switches;
};

LabeledTrajectory run_scenario(const ScenarioSpec& spec, ScenarioTrace* trace = nullptr);

/// JSON form of a spec; a missing disturbance start is written as "random".
std::string scenario_to_json(const ScenarioSpec& spec);
/// Throws std::invalid_argument on malformed or incomplete documents.
ScenarioSpec scenario_from_json(const std::string& text);

}  // namespace vtwin
