#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vtwin/scenario.hpp"
#include "vtwin/vessel_dynamics.hpp"

namespace vtwin {

/// Ordered CSV columns for a preset: time, state, control, environment.
struct ColumnSchema {
  std::vector<std::string> columns;
  std::size_t n_state = 0;
  std::size_t n_control = 0;
  std::size_t n_env = 0;

  std::size_t n_features() const { return n_state + n_control + n_env; }
  // Controls as seen by the models: actuator channels plus environment.
  std::size_t n_exogenous() const { return n_control + n_env; }
};

ColumnSchema column_schema(const VesselParams& params);
ColumnSchema column_schema(std::string_view preset);

/// Writes the header plus one row per sample using shortest round-trip
/// decimal formatting.
void write_csv(const std::filesystem::path& path, const LabeledTrajectory& traj);
std::string csv_text(const LabeledTrajectory& traj);

/// Reads a CSV written by write_csv.  Errors name the offending row.
LabeledTrajectory read_csv(const std::filesystem::path& path, const ColumnSchema& schema,
                           std::string vessel = {});

/// Feature rows (time column dropped).
std::vector<std::vector<double>> feature_rows(const LabeledTrajectory& traj);

struct ScalerParams {
  std::vector<double> min;
  std::vector<double> max;
  bool operator==(const ScalerParams&) const = default;
};

/// Per-column min/max over the rows.  Throws on fewer than two rows.
ScalerParams fit_scaler(const std::vector<std::vector<double>>& rows);
/// Min-max scaling without clamping.  A constant column c maps to 0.5 + (x - c).
std::vector<double> apply(const ScalerParams& scaler, const std::vector<double>& row);
std::vector<double> invert(const ScalerParams& scaler, const std::vector<double>& row);
/// Scales the feature columns of a trajectory; time is left untouched.
LabeledTrajectory scale_trajectory(const ScalerParams& scaler, const LabeledTrajectory& traj);

enum class Label { ind, ood };
enum class LabelMode { predictive, current };

std::string to_string(Label label);
std::string to_string(LabelMode mode);
LabelMode parse_label_mode(const std::string& s);

/// predictive: OOD iff the interval intersects (t, t + horizon];
/// current: OOD iff t lies inside the interval.
Label label_for(double anchor_time, const std::optional<Interval>& interval, double horizon,
                LabelMode mode = LabelMode::predictive);

struct WindowedSample {
  std::vector<std::vector<double>> input;            // W rows of state + exogenous
  std::vector<std::vector<double>> target;           // next H states
  std::vector<std::vector<double>> future_controls;  // next H exogenous rows
  double anchor_time = 0.0;
  std::size_t anchor_row = 0;
  Label label = Label::ind;
};

/// L - W - H + 1 samples anchored at the last input row.
std::vector<WindowedSample> make_windows(const LabeledTrajectory& traj, const ColumnSchema& schema,
                                         std::size_t window, std::size_t horizon,
                                         LabelMode mode = LabelMode::predictive,
                                         double sample_period = 1.0);

std::size_t window_count(std::size_t length, std::size_t window, std::size_t horizon);

struct SplitEntry {
  std::string id;
  std::string csv;  // path relative to the dataset directory
  bool disturbed = false;
  std::uint64_t seed = 0;
  std::optional<Interval> disturbance_interval;
  std::string group;  // e.g. "sensor_noise/4"
  bool operator==(const SplitEntry&) const = default;
};

struct SplitConfig {
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

struct DatasetSplit {
  std::string vessel;
  std::vector<SplitEntry> train;
  std::vector<SplitEntry> test;
  bool operator==(const DatasetSplit&) const = default;
};

/// Takes the first n_train candidates for training and the next n_test for
/// testing.  Throws if a disturbed run lands on the training side.
DatasetSplit assemble_split(std::string vessel, const std::vector<SplitEntry>& candidates,
                            const SplitConfig& config);

/// Training entries taken as given; throws if any is disturbed or shared with test.
DatasetSplit assemble_split(std::string vessel, std::vector<SplitEntry> train,
                            std::vector<SplitEntry> test);

std::string split_manifest_json(const DatasetSplit& split);
DatasetSplit parse_split_manifest(const std::string& json_text);

}  // namespace vtwin
