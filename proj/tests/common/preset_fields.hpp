#pragma once

// Field table shared by the preset reference-file check.
#include <utility>
#include <vector>
#include "vtwin/vessel_dynamics.hpp"

namespace vtwin::verify {
using P = vtwin::VesselParams;
using A = vtwin::AutopilotGains;
inline const std::vector<std::pair<const char*, double P::*>> kNumbers = {
    {"length", &P::length}, {"mass", &P::mass}, {"surge_gain", &P::surge_gain},
    {"surge_time_constant", &P::surge_time_constant}, {"nomoto_gain", &P::nomoto_gain},
    {"nomoto_time_constant", &P::nomoto_time_constant}, {"sway_coupling", &P::sway_coupling},
    {"roll_natural_frequency", &P::roll_natural_frequency}, {"roll_damping_ratio", &P::roll_damping_ratio},
    {"rudder_roll_gain", &P::rudder_roll_gain}, {"bow_roll_gain", &P::bow_roll_gain},
    {"stern_pitch_gain", &P::stern_pitch_gain}, {"pitch_time_constant", &P::pitch_time_constant},
    {"heave_gain", &P::heave_gain}, {"max_rudder", &P::max_rudder}, {"max_rudder_rate", &P::max_rudder_rate},
    {"max_plane", &P::max_plane}, {"min_propeller", &P::min_propeller}, {"max_propeller", &P::max_propeller},
    {"nominal_propeller", &P::nominal_propeller}, {"thrust_steer_gain", &P::thrust_steer_gain}};
inline const std::vector<std::pair<const char*, bool P::*>> kFlags = {
    {"twin_thrust", &P::twin_thrust}, {"supports_current", &P::supports_current},
    {"supports_waypoint", &P::supports_waypoint}, {"supports_zigzag", &P::supports_zigzag},
    {"path_3d", &P::path_3d}};
inline const std::vector<std::pair<const char*, double A::*>> kAutopilot = {
    {"heading_gain", &A::heading_gain}, {"yaw_damping", &A::yaw_damping}, {"lookahead", &A::lookahead},
    {"cross_track_rate_gain", &A::cross_track_rate_gain}, {"depth_gain", &A::depth_gain},
    {"max_pitch", &A::max_pitch}, {"pitch_gain", &A::pitch_gain}};
}  // namespace vtwin::verify
