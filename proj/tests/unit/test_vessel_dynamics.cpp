#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <numbers>
#include <random>

#include "../common/preset_fields.hpp"
#include "vtwin/vessel_dynamics.hpp"

using namespace vtwin;

namespace {

constexpr double kPi = std::numbers::pi;

bool in_wrap_range(double a) { return a > -kPi && a <= kPi; }

}  // namespace

TEST(Presets, MarinerMatchesVesselTable) {
  const VesselParams p = make_preset("mariner");
  EXPECT_EQ(p.dof, 3);
  EXPECT_EQ(p.controls, (std::vector<std::string>{"rudder_angle"}));
  EXPECT_FALSE(p.supports_current);
}

TEST(Presets, Remus100MatchesVesselTable) {
  const VesselParams p = make_preset("remus100");
  EXPECT_EQ(p.dof, 6);
  EXPECT_EQ(p.controls, (std::vector<std::string>{"rudder_angle", "stern_plane_angle", "propeller"}));
  EXPECT_TRUE(p.supports_current);
  EXPECT_DOUBLE_EQ(p.length, 1.6);
}

TEST(Presets, RemainingPresetsDofAndCurrent) {
  EXPECT_EQ(make_preset("container").dof, 4);
  EXPECT_FALSE(make_preset("container").supports_current);
  EXPECT_EQ(make_preset("nps_auv").dof, 6);
  EXPECT_TRUE(make_preset("nps_auv").supports_current);
  EXPECT_EQ(make_preset("nps_auv").controls.size(), 5u);
  EXPECT_EQ(make_preset("otter").dof, 6);
  EXPECT_TRUE(make_preset("otter").supports_current);
  EXPECT_EQ(make_preset("otter").controls, (std::vector<std::string>{"left_propeller", "right_propeller"}));
}

TEST(Presets, UnknownNameListsValidPresets) {
  try {
    make_preset("titanic");
    FAIL() << "expected an exception";
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("titanic"), std::string::npos);
    for (const auto& n : preset_names()) EXPECT_NE(msg.find(n), std::string::npos) << n;
  }
}

TEST(Presets, TimeConstantsAndLimitsPositive) {
  for (const auto& n : preset_names()) {
    const VesselParams p = make_preset(n);
    EXPECT_TRUE(p.dof == 3 || p.dof == 4 || p.dof == 6) << n;
    EXPECT_GT(p.surge_time_constant, 0.0) << n;
    EXPECT_GT(p.nomoto_time_constant, 0.0) << n;
    EXPECT_GT(p.pitch_time_constant, 0.0) << n;
    EXPECT_GT(p.max_rudder, 0.0) << n;
    EXPECT_GT(p.max_rudder_rate, 0.0) << n;
    EXPECT_GT(p.length, 0.0) << n;
    if (p.dof == 6 && !p.twin_thrust) EXPECT_GT(p.max_plane, 0.0) << n;
  }
}

TEST(Presets, LargeShipsRespondSlowerThanSmallCraft) {
  EXPECT_GT(make_preset("mariner").nomoto_time_constant, 10.0 * make_preset("remus100").nomoto_time_constant);
}

TEST(WrapAngle, Examples) {
  EXPECT_DOUBLE_EQ(wrap_angle(0.0), 0.0);
  EXPECT_NEAR(wrap_angle(3.0 * kPi), kPi, 1e-12);
  EXPECT_NEAR(wrap_angle(-1.5 * kPi), 0.5 * kPi, 1e-12);
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
  EXPECT_NEAR(wrap_angle(-kPi), kPi, 1e-12);
}

TEST(WrapAngle, RangeAndEquivalenceOnRandomInputs) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-100.0, 100.0);
  for (int i = 0; i < 10000; ++i) {
    const double a = d(rng);
    const double w = wrap_angle(a);
    ASSERT_TRUE(in_wrap_range(w)) << a;
    const double k = (a - w) / (2.0 * kPi);
    ASSERT_NEAR(k, std::round(k), 1e-9) << a;
  }
}

TEST(Saturate, MagnitudeClamp) {
  VesselParams p = make_preset("mariner");
  p.max_rudder = 0.6;
  p.max_rudder_rate = 10.0;
  ControlInput c;
  c.rudder = 1.0;
  EXPECT_DOUBLE_EQ(saturate(c, ControlInput{}, p, 1.0).rudder, 0.6);
}

TEST(Saturate, WithinLimitsUnchanged) {
  const VesselParams p = make_preset("remus100");
  ControlInput prev;
  prev.rudder = 0.1;
  prev.propeller = 1000.0;
  ControlInput c = prev;
  c.rudder = 0.12;
  c.stern_plane = 0.05;
  c.propeller = 1200.0;
  const ControlInput out = saturate(c, prev, p, 1.0);
  EXPECT_DOUBLE_EQ(out.rudder, 0.12);
  EXPECT_DOUBLE_EQ(out.stern_plane, 0.05);
  EXPECT_DOUBLE_EQ(out.propeller, 1200.0);
}

TEST(Saturate, RateClamp) {
  VesselParams p = make_preset("mariner");
  p.max_rudder_rate = 0.1;
  ControlInput c;
  c.rudder = 0.5;
  EXPECT_DOUBLE_EQ(saturate(c, ControlInput{}, p, 1.0).rudder, 0.1);
}

TEST(Saturate, EveryChannelWithinLimits) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-5000.0, 5000.0);
  for (const auto& n : preset_names()) {
    const VesselParams p = make_preset(n);
    for (int i = 0; i < 200; ++i) {
      ControlInput c{d(rng), d(rng), d(rng), d(rng), d(rng), d(rng), d(rng)};
      const ControlInput out = saturate(c, ControlInput{}, p, 1.0);
      EXPECT_LE(std::abs(out.rudder), p.max_rudder);
      EXPECT_LE(std::abs(out.stern_plane), p.max_plane);
      EXPECT_LE(std::abs(out.bow_port), p.max_plane);
      EXPECT_LE(std::abs(out.bow_starboard), p.max_plane);
      EXPECT_GE(out.propeller, p.min_propeller);
      EXPECT_LE(out.propeller, p.max_propeller);
    }
  }
}

TEST(Step, EquilibriumHoldsHeading) {
  const VesselParams p = make_preset("mariner");
  const VesselState s0 = initial_state(p, 0.3, 0.0);
  const VesselState s1 = step(p, s0, ControlInput{}, EnvCondition{}, 10.0);
  EXPECT_DOUBLE_EQ(s1.r, 0.0);
  EXPECT_DOUBLE_EQ(s1.yaw, 0.3);
  EXPECT_NEAR(s1.u, s0.u, 1e-12);
  EXPECT_DOUBLE_EQ(s1.time, 10.0);
}

TEST(Step, PureAdvectionByCurrent) {
  const VesselParams p = make_preset("remus100");
  VesselState s;
  EnvCondition env{0.5, kPi / 2.0};  // towards +y (east)
  const double dt = 1.0;
  const VesselState s1 = step(p, s, ControlInput{}, env, dt);
  EXPECT_NEAR(s1.y, 0.5 * dt, 1e-12);
  EXPECT_NEAR(s1.x, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(s1.u, 0.0);
}

TEST(Step, NomotoStepResponseMatchesClosedForm) {
  for (const char* name : {"mariner", "remus100", "nps_auv"}) {
    const VesselParams p = make_preset(name);
    VesselState s = initial_state(p, 0.0, p.nominal_propeller);
    ControlInput c;
    c.rudder = 0.1;
    c.propeller = p.nominal_propeller;
    const double t = p.nomoto_time_constant;
    const VesselState out = step(p, s, c, EnvCondition{}, t);
    const double expected = p.nomoto_gain * 0.1 * (1.0 - std::exp(-1.0));
    EXPECT_NEAR(out.r, expected, 0.01 * std::abs(expected)) << name;
  }
}

TEST(Step, ZeroInputDecayIsMonotone) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-0.2, 0.2);
  for (const auto& n : preset_names()) {
    const VesselParams p = make_preset(n);
    for (int trial = 0; trial < 10; ++trial) {
      VesselState s;
      s.r = d(rng);
      s.v = p.sway_coupling * s.r;
      double prev_r = std::abs(s.r), prev_v = std::abs(s.v);
      for (int k = 0; k < 50; ++k) {
        s = step(p, s, ControlInput{}, EnvCondition{}, 0.5);
        ASSERT_LE(std::abs(s.r), prev_r) << n;
        ASSERT_LE(std::abs(s.v), prev_v) << n;
        prev_r = std::abs(s.r);
        prev_v = std::abs(s.v);
      }
    }
  }
}

TEST(Step, CurrentEntersKinematicsOnly) {
  const VesselParams p = make_preset("remus100");
  ControlInput c;
  c.rudder = 0.1;
  c.stern_plane = 0.05;
  c.propeller = 1200.0;
  const EnvCondition env{0.5, 0.7};
  VesselState a = initial_state(p, 0.2, 1200.0), b = a;
  const double dt = 1.0;
  for (int k = 1; k <= 100; ++k) {
    a = step(p, a, c, EnvCondition{}, dt);
    b = step(p, b, c, env, dt);
    const double t = k * dt;
    ASSERT_NEAR(b.x - a.x, 0.5 * std::cos(0.7) * t, 1e-9);
    ASSERT_NEAR(b.y - a.y, 0.5 * std::sin(0.7) * t, 1e-9);
    ASSERT_EQ(a.yaw, b.yaw);
    ASSERT_EQ(a.u, b.u);
    ASSERT_EQ(a.r, b.r);
    ASSERT_EQ(a.z, b.z);
  }
}

TEST(Step, AnglesStayWrappedUnderSustainedTurn) {
  for (const auto& n : preset_names()) {
    const VesselParams p = make_preset(n);
    VesselState s = initial_state(p, 3.0, p.nominal_propeller);
    ControlInput c;
    c.rudder = p.max_rudder;
    c.stern_plane = p.max_plane;
    c.propeller = p.nominal_propeller;
    c.propeller_left = 0.0;
    c.propeller_right = p.max_propeller;
    for (int k = 0; k < 400; ++k) {
      s = step(p, s, c, EnvCondition{}, 1.0);
      ASSERT_TRUE(in_wrap_range(s.yaw)) << n;
      ASSERT_TRUE(in_wrap_range(s.roll)) << n;
      ASSERT_TRUE(in_wrap_range(s.pitch)) << n;
    }
  }
}

TEST(Step, IsDeterministic) {
  const VesselParams p = make_preset("nps_auv");
  VesselState s = initial_state(p, 1.0, 1200.0);
  ControlInput c;
  c.rudder = 0.05;
  c.bow_port = 0.1;
  c.propeller = 1200.0;
  const VesselState a = step(p, s, c, EnvCondition{0.3, 1.0}, 1.0);
  const VesselState b = step(p, s, c, EnvCondition{0.3, 1.0}, 1.0);
  EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
}

TEST(Step, RejectsNonFiniteInput) {
  const VesselParams p = make_preset("mariner");
  VesselState s;
  s.u = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(step(p, s, ControlInput{}, EnvCondition{}, 1.0), std::invalid_argument);
  ControlInput c;
  c.rudder = std::numeric_limits<double>::infinity();
  EXPECT_THROW(step(p, VesselState{}, c, EnvCondition{}, 1.0), std::invalid_argument);
  EXPECT_THROW(step(p, VesselState{}, ControlInput{}, EnvCondition{}, 0.0), std::invalid_argument);
}

TEST(Step, OtterDifferentialThrustTurnsTowardsFasterSide) {
  const VesselParams p = make_preset("otter");
  VesselState s = initial_state(p, 0.0, 800.0);
  ControlInput c;
  c.propeller_left = 700.0;
  c.propeller_right = 900.0;
  s = step(p, s, c, EnvCondition{}, 5.0);
  EXPECT_GT(s.r, 0.0);
  EXPECT_NEAR(s.u, p.surge_gain * 800.0, 1e-9);
}

TEST(Features, NamesMatchValuesPerDof) {
  for (const auto& n : preset_names()) {
    const VesselParams p = make_preset(n);
    EXPECT_EQ(state_feature_names(p).size(), state_features(p, VesselState{}).size()) << n;
    EXPECT_EQ(control_features(p, ControlInput{}).size(), p.controls.size()) << n;
  }
}

TEST(Presets, ReferenceFileMatchesCode) {
  std::ifstream in(std::string(VTWIN_DATA_DIR) + "/vessel_presets.json");
  ASSERT_TRUE(in) << "missing data/vessel_presets.json";
  const auto file = nlohmann::json::parse(in);
  EXPECT_EQ(file["format"], "vtwin-vessel-presets");
  ASSERT_EQ(file["presets"].size(), preset_names().size());
  for (const auto& n : preset_names()) {
    const VesselParams p = make_preset(n);
    const auto& j = file["presets"].at(n);
    EXPECT_EQ(j["dof"].get<int>(), p.dof) << n;
    EXPECT_EQ(j["controls"].get<std::vector<std::string>>(), p.controls) << n;
    for (const auto& [k, m] : verify::kFlags) EXPECT_EQ(j.at(k).get<bool>(), p.*m) << n << "." << k;
    for (const auto& [k, m] : verify::kNumbers) EXPECT_EQ(j.at(k).get<double>(), p.*m) << n << "." << k;
    for (const auto& [k, m] : verify::kAutopilot) {
      EXPECT_EQ(j["autopilot"].at(k).get<double>(), p.autopilot.*m) << n << ".autopilot." << k;
    }
  }
}
