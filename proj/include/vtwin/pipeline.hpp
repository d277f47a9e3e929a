#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "vtwin/dataset.hpp"
#include "vtwin/digital_twin.hpp"
#include "vtwin/evaluation.hpp"
#include "vtwin/scenario.hpp"

namespace vtwin {

using Maneuver = std::variant<ZigzagSpec, WaypointSpec>;

struct TrainTemplate {
  std::string label;  // maneuver label, e.g. "waypoint" or "zigzag_d10"
  Maneuver maneuver;
  std::size_t count = 0;
};

struct TestTemplate {
  std::string label;
  Maneuver maneuver;
  DisturbanceKind kind = DisturbanceKind::sensor_noise;
  std::vector<double> magnitudes;
  std::size_t count = 0;  // paths per magnitude
  double duration = 120.0;
};

struct VesselExperiment {
  std::string vessel;
  double total_duration = 600.0;
  double sample_period = 1.0;
  double horizon_margin = 60.0;
  EnvCondition env;
  double current_jitter = 0.0;
  std::vector<TrainTemplate> train;
  std::vector<TestTemplate> test;
};

struct ExperimentConfig {
  std::string name;
  std::uint64_t seed = 0;
  TwinConfig twin;
  std::vector<Variant> variants = {Variant::oddit, Variant::dtm_r, Variant::dtm_e};
  std::vector<VesselExperiment> vessels;
};

const std::vector<std::string>& experiment_names();

/// Built-in experiment (sensor, actuator, current) at the given scale (desk, paper).
ExperimentConfig builtin_experiment(const std::string& name, const std::string& profile = "desk");

std::string experiment_to_json(const ExperimentConfig& config);
/// Validates every scenario the config would generate; throws std::invalid_argument.
ExperimentConfig experiment_from_json(const std::string& text);
void validate(const ExperimentConfig& config);

/// Writes `content` unless the path already holds different bytes, which is an error.
void write_output(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

/// Writes data/<vessel>/{manifest.json, *.csv, *.json}.
std::vector<DatasetSplit> simulate_experiment(const ExperimentConfig& config, const std::filesystem::path& out);

/// Trains one twin per vessel from data/<vessel>/manifest.json under `data`;
/// writes checkpoints/<vessel>.json and checkpoints/<vessel>_loss.csv under `out`.
std::vector<TwinCheckpoint> train_experiment(const ExperimentConfig& config, const std::filesystem::path& data,
                                             const std::filesystem::path& out);

/// Anchors, scores and decisions for one method on one trajectory.
struct VerdictFile {
  GroupKey group;
  double magnitude_value = 0.0;
  std::string method;
  std::string path_id;
  std::string file;  // relative to the verdict directory
};

std::string verdict_csv(const std::vector<Verdict>& verdicts);
std::vector<Verdict> parse_verdict_csv(const std::string& text);

/// Runs every configured variant over the test side of each manifest;
/// writes verdicts/<vessel>/<variant>/<id>.csv and verdicts/index.json.
std::vector<VerdictFile> detect_experiment(const ExperimentConfig& config, const std::filesystem::path& data,
                                           const std::filesystem::path& checkpoints,
                                           const std::filesystem::path& out);

std::string verdict_index_json(const std::vector<VerdictFile>& files);
std::vector<VerdictFile> parse_verdict_index(const std::string& text);

/// Reads verdicts/index.json under `verdicts` and writes report.json / report.csv under `out`.
Report evaluate_verdicts(const std::filesystem::path& verdicts, const std::filesystem::path& out);

/// Human-readable digest of a report, one line per group and method.
std::string report_summary(const Report& report);

/// simulate -> train -> detect -> evaluate into `out`.
Report run_experiment(const ExperimentConfig& config, const std::filesystem::path& out);

}  // namespace vtwin
