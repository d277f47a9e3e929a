#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "vtwin/pipeline.hpp"

namespace fs = std::filesystem;
using namespace vtwin;

namespace {

struct Options {
  std::string config;
  std::string experiment;
  std::string profile = "desk";
  std::string out = "out";
  std::string data;
  std::string checkpoint;
  std::string verdicts;
  std::string variant = "oddit";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> trajectories;
  bool print_config = false;
};

ExperimentConfig load_config(const Options& o) {
  if (!o.config.empty() && !o.experiment.empty()) throw std::invalid_argument("use either --config or --experiment");
  ExperimentConfig c = !o.config.empty() ? experiment_from_json(read_text(o.config))
                                         : builtin_experiment(o.experiment.empty() ? "sensor" : o.experiment, o.profile);
  if (o.seed) c.seed = *o.seed;
  return c;
}

fs::path data_dir(const Options& o) { return o.data.empty() ? fs::path(o.out) : fs::path(o.data); }

void add_config_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "Experiment config JSON");
  cmd->add_option("--experiment", o.experiment, "Built-in experiment: sensor, actuator or current")
      ->check(CLI::IsMember(experiment_names()));
  cmd->add_option("--profile", o.profile, "Scale of the built-in experiment: desk or paper")
      ->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--seed", o.seed, "Master seed override");
}

// Detects a list of trajectory CSVs against one checkpoint.
void detect_files(const Options& o) {
  const TwinCheckpoint twin = load_checkpoint(o.checkpoint);
  const Variant variant = parse_variant(o.variant);
  const ColumnSchema schema = column_schema(twin.vessel);
  for (const auto& file : o.trajectories) {
    const fs::path path(file);
    LabeledTrajectory traj = read_csv(path, schema, twin.vessel);
    fs::path sidecar = path;
    sidecar.replace_extension(".json");
    if (fs::exists(sidecar)) {
      const auto j = nlohmann::json::parse(read_text(sidecar));
      if (j.contains("disturbance_interval") && j["disturbance_interval"].is_array()) {
        traj.disturbance_interval = Interval{j["disturbance_interval"][0].get<double>(), j["disturbance_interval"][1].get<double>()};
      }
    }
    const auto verdicts = detect(twin, traj, variant);
    write_output(fs::path(o.out) / (path.stem().string() + "." + to_string(variant) + ".csv"), verdict_csv(verdicts));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vessel digital twin: simulate, train, detect and evaluate OOD detectors"};
  app.require_subcommand(1);
  Options o;

  auto* simulate = app.add_subcommand("simulate", "Generate the scenario CSVs and dataset manifests");
  add_config_flags(simulate, o);
  simulate->add_option("--out", o.out, "Output directory");

  auto* train = app.add_subcommand("train", "Train one twin per vessel from the dataset manifests");
  add_config_flags(train, o);
  train->add_option("--data", o.data, "Directory holding data/ (defaults to --out)");
  train->add_option("--out", o.out, "Output directory");

  auto* detect_cmd = app.add_subcommand("detect", "Score trajectories with a trained twin");
  add_config_flags(detect_cmd, o);
  detect_cmd->add_option("--data", o.data, "Directory holding data/ (defaults to --out)");
  detect_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint file, or directory of checkpoints with --config");
  detect_cmd->add_option("--variant", o.variant, "oddit, dtm-r or dtm-e (file mode)")
      ->check(CLI::IsMember({"oddit", "dtm-r", "dtm-e"}));
  detect_cmd->add_option("--out", o.out, "Output directory");
  detect_cmd->add_option("trajectories", o.trajectories, "Trajectory CSVs (file mode)");

  auto* evaluate = app.add_subcommand("evaluate", "Build the metric report from verdict files");
  evaluate->add_option("--verdicts", o.verdicts, "Directory holding index.json (defaults to <out>/verdicts)");
  evaluate->add_option("--out", o.out, "Output directory");

  auto* repro = app.add_subcommand("repro", "Run simulate, train, detect and evaluate for an experiment");
  repro->add_option("experiment", o.experiment, "sensor, actuator or current")
      ->required()
      ->check(CLI::IsMember(experiment_names()));
  repro->add_option("--profile", o.profile, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
  repro->add_option("--seed", o.seed, "Master seed override");
  repro->add_option("--out", o.out, "Output directory");
  repro->add_flag("--print-config", o.print_config, "Print the experiment config and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << nlohmann::json{{"error", e.what()}, {"kind", "usage"}}.dump() << '\n';
    return 2;
  }

  try {
    if (simulate->parsed()) {
      const auto splits = simulate_experiment(load_config(o), o.out);
      for (const auto& s : splits) {
        std::cout << s.vessel << ": " << s.train.size() << " train, " << s.test.size() << " test\n";
      }
    } else if (train->parsed()) {
      for (const auto& t : train_experiment(load_config(o), data_dir(o), o.out)) {
        std::cout << t.vessel << ": threshold " << t.threshold.value << "\n";
      }
    } else if (detect_cmd->parsed()) {
      if (!o.trajectories.empty()) {
        if (o.checkpoint.empty()) throw std::invalid_argument("detect: --checkpoint is required with trajectory files");
        detect_files(o);
      } else {
        const fs::path ckpt = o.checkpoint.empty() ? fs::path(o.out) / "checkpoints" : fs::path(o.checkpoint);
        const auto files = detect_experiment(load_config(o), data_dir(o), ckpt, o.out);
        std::cout << files.size() << " verdict files\n";
      }
    } else if (evaluate->parsed()) {
      const fs::path verdicts = o.verdicts.empty() ? fs::path(o.out) / "verdicts" : fs::path(o.verdicts);
      std::cout << report_summary(evaluate_verdicts(verdicts, o.out));
    } else if (repro->parsed()) {
      ExperimentConfig c = builtin_experiment(o.experiment, o.profile);
      if (o.seed) c.seed = *o.seed;
      if (o.print_config) {
        std::cout << experiment_to_json(c);
        return 0;
      }
      std::cout << report_summary(run_experiment(c, o.out));
    }
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", e.what()}, {"kind", "runtime"}}.dump() << '\n';
    return 1;
  }
  return 0;
}
