#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "vtwin/pipeline.hpp"

using namespace vtwin;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("vtwin_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig tiny_experiment() {
  ExperimentConfig c;
  c.name = "tiny";
  c.seed = 3;
  c.twin.dtm.window = 5;
  c.twin.dtm.horizon = 5;
  c.twin.dtm.hidden = 8;
  c.twin.dtm.layers = 1;
  c.twin.dtm_train.batch_size = 32;
  c.twin.dtm_train.pretrain_epochs = 1;
  c.twin.dtm_train.epochs = 2;
  c.twin.dtm_train.window_stride = 4;
  c.twin.dtc_train.batch_size = 64;
  c.twin.dtc_train.epochs = 2;
  c.twin.threshold_stride = 4;
  VesselExperiment v;
  v.vessel = "remus100";
  v.total_duration = 150.0;
  v.horizon_margin = 10.0;
  v.env.current_speed = 0.5;
  v.env.current_direction = 0.5;
  WaypointSpec w;
  w.n_waypoints = 3;
  w.r_switch = 5.0;
  w.min_distance = 50.0;
  w.x_range = {0.0, 200.0};
  w.y_range = {0.0, 200.0};
  w.z_range = Range{5.0, 15.0};
  v.train.push_back({"waypoint", w, 2});
  TestTemplate t;
  t.label = "waypoint";
  t.maneuver = w;
  t.kind = DisturbanceKind::current_spike;
  t.magnitudes = {0.65, 0.8};
  t.count = 2;
  t.duration = 40.0;
  v.test.push_back(t);
  c.vessels.push_back(v);
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return out;
}

struct CliResult {
  int code = 0;
  std::string err;
};

CliResult cli(const std::string& args) {
  const fs::path err = fs::temp_directory_path() / "vtwin_cli_stderr.txt";
  const std::string cmd = std::string(VTWIN_CLI_PATH) + " " + args + " >/dev/null 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WEXITSTATUS(status), slurp(err)};
}

}  // namespace

TEST(Experiment, BuiltinsRoundTripThroughJson) {
  for (const auto& name : experiment_names()) {
    for (const std::string profile : {"desk", "paper"}) {
      const ExperimentConfig c = builtin_experiment(name, profile);
      EXPECT_EQ(experiment_to_json(experiment_from_json(experiment_to_json(c))), experiment_to_json(c));
    }
  }
}

TEST(Experiment, UnknownNameOrProfileThrows) {
  EXPECT_THROW(builtin_experiment("storm"), std::invalid_argument);
  EXPECT_THROW(builtin_experiment("sensor", "huge"), std::invalid_argument);
  EXPECT_THROW(experiment_from_json("{"), std::invalid_argument);
}

TEST(Experiment, DeskProfileMatchesDocumentedScale) {
  const ExperimentConfig s = builtin_experiment("sensor");
  ASSERT_EQ(s.vessels.size(), 2u);
  EXPECT_EQ(s.vessels[0].vessel, "mariner");
  EXPECT_EQ(s.vessels[0].train.front().count, 20u);
  EXPECT_EQ(s.vessels[0].test.front().count, 10u);
  EXPECT_EQ(s.vessels[0].test.front().magnitudes, (std::vector<double>{2, 3, 4, 5, 6, 7, 8}));
  const ExperimentConfig p = builtin_experiment("sensor", "paper");
  EXPECT_EQ(p.twin.dtm.window, 60u);
  EXPECT_EQ(p.twin.dtm.hidden, 256u);
}

TEST(Experiment, IncompatibleDisturbanceFailsBeforeWriting) {
  ExperimentConfig c = tiny_experiment();
  c.vessels[0].vessel = "mariner";
  c.vessels[0].env = {};
  const fs::path dir = fresh_dir("invalid");
  EXPECT_THROW(simulate_experiment(c, dir), std::invalid_argument);
  EXPECT_TRUE(fs::is_empty(dir));
}

TEST(WriteOutput, RefusesToOverwriteDifferentContent) {
  const fs::path dir = fresh_dir("write");
  const fs::path f = dir / "sub" / "a.txt";
  write_output(f, "one");
  EXPECT_NO_THROW(write_output(f, "one"));
  EXPECT_THROW(write_output(f, "two"), std::runtime_error);
  EXPECT_EQ(read_text(f), "one");
}

TEST(VerdictCsv, RoundTrip) {
  std::vector<Verdict> v(2);
  v[0].anchor_time = 29.0;
  v[0].score = 0.125;
  v[0].step_errors = {0.1, 0.125};
  v[0].decision = Label::ood;
  v[1].anchor_time = 30.0;
  v[1].score = 1.0 / 3.0;
  v[1].step_errors = {1.0 / 3.0, 0.2};
  v[1].label = Label::ood;
  const auto back = parse_verdict_csv(verdict_csv(v));
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].anchor_time, v[i].anchor_time);
    EXPECT_EQ(back[i].score, v[i].score);
    EXPECT_EQ(back[i].step_errors, v[i].step_errors);
    EXPECT_EQ(back[i].decision, v[i].decision);
    EXPECT_EQ(back[i].label, v[i].label);
  }
  EXPECT_THROW(parse_verdict_csv("anchor_time,score\n1,2\n"), std::runtime_error);
}

TEST(Pipeline, EndToEndIsByteDeterministic) {
  const ExperimentConfig c = tiny_experiment();
  const fs::path a = fresh_dir("e2e_a"), b = fresh_dir("e2e_b");
  const Report ra = run_experiment(c, a);
  run_experiment(c, b);
  const auto ta = tree(a), tb = tree(b);
  EXPECT_EQ(ta, tb);
  EXPECT_TRUE(ta.count("checkpoints/remus100.json"));
  EXPECT_TRUE(ta.count("verdicts/index.json"));
  EXPECT_TRUE(ta.count("report.json"));
  EXPECT_TRUE(ta.count("data/remus100/manifest.json"));
  EXPECT_EQ(ra.groups.size(), 2u * c.variants.size());
  // A second run into the same directory reproduces identical bytes.
  EXPECT_NO_THROW(run_experiment(c, a));
}

TEST(Pipeline, StagesComposeFromFiles) {
  const ExperimentConfig c = tiny_experiment();
  const fs::path dir = fresh_dir("stages");
  const auto splits = simulate_experiment(c, dir);
  ASSERT_EQ(splits.size(), 1u);
  EXPECT_EQ(splits[0].train.size(), 2u);
  EXPECT_EQ(splits[0].test.size(), 4u);
  train_experiment(c, dir, dir);
  const auto files = detect_experiment(c, dir, dir / "checkpoints", dir);
  EXPECT_EQ(files.size(), 4u * c.variants.size());
  EXPECT_EQ(parse_verdict_index(verdict_index_json(files)).size(), files.size());
  const Report r = evaluate_verdicts(dir / "verdicts", dir);
  EXPECT_FALSE(r.groups.empty());
  EXPECT_FALSE(report_summary(r).empty());
}

TEST(Cli, UsageErrorsExitTwoWithJson) {
  const CliResult r = cli("repro storm");
  EXPECT_EQ(r.code, 2);
  const auto j = nlohmann::json::parse(r.err);
  EXPECT_TRUE(j.contains("error"));
  EXPECT_EQ(j["kind"], "usage");
  EXPECT_EQ(cli("bogus-command").code, 2);
  EXPECT_EQ(cli("").code, 2);
}

TEST(Cli, RuntimeErrorsExitOne) {
  const fs::path dir = fresh_dir("cli_runtime");
  const CliResult r = cli("evaluate --verdicts " + (dir / "missing").string() + " --out " + dir.string());
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(nlohmann::json::parse(r.err)["kind"], "runtime");
}

TEST(Cli, PrintConfigIsParsable) {
  const fs::path out = fs::temp_directory_path() / "vtwin_print_config.json";
  const std::string cmd = std::string(VTWIN_CLI_PATH) + " repro current --print-config > " + out.string();
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_EQ(experiment_to_json(experiment_from_json(slurp(out))),
            experiment_to_json(builtin_experiment("current")));
}
