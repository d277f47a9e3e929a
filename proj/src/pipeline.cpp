#include "vtwin/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace vtwin {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double deg(double d) { return d * std::numbers::pi / 180.0; }

json maneuver_json(const Maneuver& m) {
  ScenarioSpec s;
  s.maneuver = m;
  return json::parse(scenario_to_json(s)).at("maneuver");
}

Maneuver maneuver_from(const json& j) {
  const json wrapper = {{"vessel", ""}, {"maneuver", j}};
  return scenario_from_json(wrapper.dump()).maneuver;
}

std::vector<std::string> split_group(const std::string& group) {
  std::vector<std::string> parts;
  std::stringstream ss(group);
  std::string part;
  while (std::getline(ss, part, '/')) parts.push_back(part);
  return parts;
}

TwinConfig desk_twin() {
  TwinConfig c;
  c.dtm.window = 30;
  c.dtm.horizon = 30;
  c.dtm.hidden = 64;
  c.dtm.layers = 2;
  c.dtm_train.learning_rate = 1e-3;
  c.dtm_train.batch_size = 64;
  c.dtm_train.pretrain_epochs = 60;
  c.dtm_train.epochs = 100;
  c.dtm_train.window_stride = 10;
  c.dtc_train.learning_rate = 1e-3;
  c.dtc_train.batch_size = 128;
  c.dtc_train.epochs = 20;
  c.dtc_train.window_stride = 1;
  c.threshold_stride = 10;
  return c;
}

TwinConfig paper_twin() {
  TwinConfig c = desk_twin();
  c.dtm.window = 60;
  c.dtm.horizon = 60;
  c.dtm.hidden = 256;
  c.dtm_train.pretrain_epochs = 600;
  c.dtm_train.epochs = 1000;
  c.dtm_train.window_stride = 1;
  c.dtc_train.epochs = 100;
  c.threshold_stride = 1;
  return c;
}

WaypointSpec mariner_path() {
  WaypointSpec w;
  w.n_waypoints = 6;
  w.r_switch = 150.0;
  w.min_distance = 1000.0;
  w.x_range = {0.0, 4000.0};
  w.y_range = {0.0, 4000.0};
  return w;
}

WaypointSpec nps_path() {
  WaypointSpec w;
  w.n_waypoints = 6;
  w.r_switch = 10.0;
  w.min_distance = 150.0;
  w.x_range = {0.0, 600.0};
  w.y_range = {0.0, 600.0};
  w.z_range = Range{5.0, 30.0};
  return w;
}

WaypointSpec remus_path() {
  WaypointSpec w;
  w.n_waypoints = 6;
  w.r_switch = 5.0;
  w.min_distance = 100.0;
  w.x_range = {0.0, 500.0};
  w.y_range = {0.0, 500.0};
  w.z_range = Range{5.0, 20.0};
  return w;
}

std::string magnitude_label(double m) { return fmt(m); }

// Seeds for the scenarios of one vessel; test paths share their seed across
// magnitudes so each magnitude sees the same routes and windows.
std::uint64_t train_seed(std::uint64_t master, const std::string& vessel, std::size_t i) {
  return derive_seed(master, "scenario/" + vessel + "/train", i);
}

std::uint64_t test_seed(std::uint64_t master, const std::string& vessel, const std::string& label, std::size_t i) {
  return derive_seed(master, "scenario/" + vessel + "/test/" + label, i);
}

struct PlannedScenario {
  SplitEntry entry;
  ScenarioSpec spec;
};

ScenarioSpec base_spec(const VesselExperiment& v, const Maneuver& m, std::uint64_t seed) {
  ScenarioSpec s;
  s.vessel = v.vessel;
  s.maneuver = m;
  s.env = v.env;
  s.current_jitter = v.current_jitter;
  s.seed = seed;
  s.total_duration = v.total_duration;
  s.sample_period = v.sample_period;
  s.horizon_margin = v.horizon_margin;
  return s;
}

std::vector<PlannedScenario> plan(const ExperimentConfig& config, const VesselExperiment& v) {
  std::vector<PlannedScenario> out;
  std::size_t index = 0;
  for (const auto& t : v.train) {
    for (std::size_t i = 0; i < t.count; ++i, ++index) {
      PlannedScenario p;
      p.spec = base_spec(v, t.maneuver, train_seed(config.seed, v.vessel, index));
      char id[32];
      std::snprintf(id, sizeof id, "train_%03zu", index);
      p.entry.id = id;
      p.entry.csv = p.entry.id + ".csv";
      p.entry.seed = p.spec.seed;
      p.entry.group = t.label;
      out.push_back(std::move(p));
    }
  }
  for (const auto& t : v.test) {
    for (double mag : t.magnitudes) {
      for (std::size_t i = 0; i < t.count; ++i) {
        PlannedScenario p;
        p.spec = base_spec(v, t.maneuver, test_seed(config.seed, v.vessel, t.label, i));
        p.spec.disturbance = DisturbanceSpec{t.kind, mag, std::nullopt, t.duration, false};
        char idx[16];
        std::snprintf(idx, sizeof idx, "%03zu", i);
        p.entry.id = "test_" + t.label + "_" + to_string(t.kind) + "_" + magnitude_label(mag) + "_" + idx;
        p.entry.csv = p.entry.id + ".csv";
        p.entry.seed = p.spec.seed;
        p.entry.disturbed = true;
        p.entry.group = t.label + "/" + to_string(t.kind) + "/" + magnitude_label(mag);
        out.push_back(std::move(p));
      }
    }
  }
  return out;
}

json train_config_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size}, {"pretrain_epochs", c.pretrain_epochs},
          {"epochs", c.epochs}, {"clip_norm", c.clip_norm}, {"window_stride", c.window_stride}};
}

TrainConfig train_config_from(const json& j, TrainConfig c) {
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.pretrain_epochs = j.value("pretrain_epochs", c.pretrain_epochs);
  c.epochs = j.value("epochs", c.epochs);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  c.window_stride = j.value("window_stride", c.window_stride);
  return c;
}

std::string id_of(const Variant v) { return to_string(v); }

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"sensor", "actuator", "current"};
  return names;
}

ExperimentConfig builtin_experiment(const std::string& name, const std::string& profile) {
  ExperimentConfig c;
  c.name = name;
  c.seed = 7;
  if (profile == "desk") {
    c.twin = desk_twin();
  } else if (profile == "paper") {
    c.twin = paper_twin();
  } else {
    throw std::invalid_argument("unknown profile '" + profile + "' (expected desk or paper)");
  }
  const std::vector<double> sigmas = {2, 3, 4, 5, 6, 7, 8};
  if (name == "sensor") {
    VesselExperiment m;
    m.vessel = "mariner";
    m.total_duration = 900.0;
    m.train = {{"waypoint", mariner_path(), 20}};
    m.test = {{"waypoint", mariner_path(), DisturbanceKind::sensor_noise, sigmas, 10, 120.0}};
    VesselExperiment n;
    n.vessel = "nps_auv";
    n.total_duration = 600.0;
    n.train = {{"waypoint", nps_path(), 20}};
    n.test = {{"waypoint", nps_path(), DisturbanceKind::sensor_noise, sigmas, 10, 120.0}};
    c.vessels = {m, n};
  } else if (name == "actuator") {
    VesselExperiment m;
    m.vessel = "mariner";
    m.total_duration = 900.0;
    for (double d : {10.0, 15.0, 20.0, 30.0}) {
      ZigzagSpec z;
      z.delta_deg = d;
      z.psi_deg = d;
      const std::string label = "zigzag_d" + fmt(d);
      m.train.push_back({label, z, 5});
      m.test.push_back({label, z, DisturbanceKind::actuator_extreme, {40.0}, 5, 120.0});
    }
    c.vessels = {m};
  } else if (name == "current") {
    VesselExperiment r;
    r.vessel = "remus100";
    r.total_duration = 600.0;
    r.env.current_speed = 0.5;
    r.env.current_direction = deg(30.0);
    r.current_jitter = 0.003;
    r.train = {{"waypoint", remus_path(), 20}};
    r.test = {{"waypoint", remus_path(), DisturbanceKind::current_spike, {0.65}, 10, 120.0}};
    c.vessels = {r};
  } else {
    throw std::invalid_argument("unknown experiment '" + name + "' (expected sensor, actuator or current)");
  }
  validate(c);
  return c;
}

std::string experiment_to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["twin"] = {{"window", c.twin.dtm.window},
               {"horizon", c.twin.dtm.horizon},
               {"hidden", c.twin.dtm.hidden},
               {"layers", c.twin.dtm.layers},
               {"dtm_train", train_config_json(c.twin.dtm_train)},
               {"dtc_train", train_config_json(c.twin.dtc_train)},
               {"aggregation", to_string(c.twin.aggregation)},
               {"label_mode", to_string(c.twin.label_mode)},
               {"threshold_stride", c.twin.threshold_stride}};
  j["variants"] = json::array();
  for (Variant v : c.variants) j["variants"].push_back(to_string(v));
  j["vessels"] = json::array();
  for (const auto& v : c.vessels) {
    json vj = {{"vessel", v.vessel},
               {"total_duration", v.total_duration},
               {"sample_period", v.sample_period},
               {"horizon_margin", v.horizon_margin},
               {"env", {{"current_speed", v.env.current_speed}, {"current_direction", v.env.current_direction}}},
               {"current_jitter", v.current_jitter}};
    vj["train"] = json::array();
    for (const auto& t : v.train) vj["train"].push_back({{"label", t.label}, {"maneuver", maneuver_json(t.maneuver)}, {"count", t.count}});
    vj["test"] = json::array();
    for (const auto& t : v.test) {
      vj["test"].push_back({{"label", t.label},
                            {"maneuver", maneuver_json(t.maneuver)},
                            {"disturbance", to_string(t.kind)},
                            {"magnitudes", t.magnitudes},
                            {"count", t.count},
                            {"duration", t.duration}});
    }
    j["vessels"].push_back(vj);
  }
  return j.dump(2) + "\n";
}

ExperimentConfig experiment_from_json(const std::string& text) {
  ExperimentConfig c;
  try {
    const json j = json::parse(text);
    c.name = j.value("name", std::string{"custom"});
    c.seed = j.value("seed", std::uint64_t{0});
    c.twin = desk_twin();
    if (j.contains("twin")) {
      const json& t = j.at("twin");
      c.twin.dtm.window = t.value("window", c.twin.dtm.window);
      c.twin.dtm.horizon = t.value("horizon", c.twin.dtm.horizon);
      c.twin.dtm.hidden = t.value("hidden", c.twin.dtm.hidden);
      c.twin.dtm.layers = t.value("layers", c.twin.dtm.layers);
      if (t.contains("dtm_train")) c.twin.dtm_train = train_config_from(t.at("dtm_train"), c.twin.dtm_train);
      if (t.contains("dtc_train")) c.twin.dtc_train = train_config_from(t.at("dtc_train"), c.twin.dtc_train);
      if (t.contains("aggregation")) c.twin.aggregation = parse_aggregation(t.at("aggregation").get<std::string>());
      if (t.contains("label_mode")) c.twin.label_mode = parse_label_mode(t.at("label_mode").get<std::string>());
      c.twin.threshold_stride = t.value("threshold_stride", c.twin.threshold_stride);
    }
    if (j.contains("variants")) {
      c.variants.clear();
      for (const auto& v : j.at("variants")) c.variants.push_back(parse_variant(v.get<std::string>()));
    }
    for (const auto& vj : j.at("vessels")) {
      VesselExperiment v;
      v.vessel = vj.at("vessel").get<std::string>();
      v.total_duration = vj.value("total_duration", v.total_duration);
      v.sample_period = vj.value("sample_period", v.sample_period);
      v.horizon_margin = vj.value("horizon_margin", v.horizon_margin);
      if (vj.contains("env")) {
        v.env.current_speed = vj.at("env").value("current_speed", 0.0);
        v.env.current_direction = vj.at("env").value("current_direction", 0.0);
      }
      v.current_jitter = vj.value("current_jitter", 0.0);
      for (const auto& t : vj.at("train")) {
        v.train.push_back({t.at("label").get<std::string>(), maneuver_from(t.at("maneuver")), t.at("count").get<std::size_t>()});
      }
      if (vj.contains("test")) {
        for (const auto& t : vj.at("test")) {
          TestTemplate tt;
          tt.label = t.at("label").get<std::string>();
          tt.maneuver = maneuver_from(t.at("maneuver"));
          tt.kind = parse_disturbance_kind(t.at("disturbance").get<std::string>());
          tt.magnitudes = t.at("magnitudes").get<std::vector<double>>();
          tt.count = t.at("count").get<std::size_t>();
          tt.duration = t.value("duration", 120.0);
          v.test.push_back(std::move(tt));
        }
      }
      c.vessels.push_back(std::move(v));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("experiment config: ") + e.what());
  }
  validate(c);
  return c;
}

void validate(const ExperimentConfig& config) {
  if (config.vessels.empty()) throw std::invalid_argument("experiment config: no vessels");
  if (config.variants.empty()) throw std::invalid_argument("experiment config: no detection variants");
  for (const auto& v : config.vessels) {
    std::size_t n_train = 0;
    for (const auto& t : v.train) {
      if (t.label.empty() || t.label.find('/') != std::string::npos) {
        throw std::invalid_argument("experiment config: maneuver labels must be nonempty and contain no '/'");
      }
      n_train += t.count;
    }
    if (n_train == 0) throw std::invalid_argument("experiment config: vessel '" + v.vessel + "' has no training paths");
    for (const auto& t : v.test) {
      if (t.label.empty() || t.label.find('/') != std::string::npos) {
        throw std::invalid_argument("experiment config: maneuver labels must be nonempty and contain no '/'");
      }
    }
    const VesselParams params = make_preset(v.vessel);
    // Validate one representative of every scenario shape before anything runs.
    for (const auto& p : plan(config, v)) vtwin::validate(p.spec, params);
  }
}

void write_output(const fs::path& path, const std::string& content) {
  if (fs::exists(path)) {
    if (read_text(path) == content) return;
    throw std::runtime_error("refusing to overwrite " + path.string() + " with different content");
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<DatasetSplit> simulate_experiment(const ExperimentConfig& config, const fs::path& out) {
  validate(config);
  std::vector<DatasetSplit> splits;
  for (const auto& v : config.vessels) {
    const fs::path dir = out / "data" / v.vessel;
    std::vector<SplitEntry> train, test;
    for (auto& p : plan(config, v)) {
      const LabeledTrajectory traj = run_scenario(p.spec);
      p.entry.disturbance_interval = traj.disturbance_interval;
      json sidecar = json::parse(scenario_to_json(p.spec));
      sidecar["disturbance_interval"] =
          traj.disturbance_interval ? json::array({traj.disturbance_interval->start, traj.disturbance_interval->end})
                                    : json(nullptr);
      write_output(dir / p.entry.csv, csv_text(traj));
      write_output(dir / (p.entry.id + ".json"), sidecar.dump(2) + "\n");
      (p.entry.disturbed ? test : train).push_back(p.entry);
    }
    DatasetSplit split = assemble_split(v.vessel, std::move(train), std::move(test));
    write_output(dir / "manifest.json", split_manifest_json(split));
    splits.push_back(std::move(split));
  }
  return splits;
}

namespace {

DatasetSplit load_manifest(const fs::path& data, const std::string& vessel) {
  const fs::path path = data / "data" / vessel / "manifest.json";
  if (!fs::exists(path)) throw std::runtime_error("dataset manifest not found: " + path.string());
  DatasetSplit split = parse_split_manifest(read_text(path));
  if (split.vessel != vessel) {
    throw std::runtime_error("manifest " + path.string() + " describes vessel '" + split.vessel + "', expected '" +
                             vessel + "'");
  }
  return split;
}

LabeledTrajectory load_entry(const fs::path& data, const std::string& vessel, const SplitEntry& e) {
  LabeledTrajectory t = read_csv(data / "data" / vessel / e.csv, column_schema(vessel), vessel);
  t.disturbance_interval = e.disturbance_interval;
  return t;
}

std::string loss_csv(const TwinCheckpoint& twin) {
  std::string out = "phase,epoch,loss\n";
  auto add = [&](const char* phase, const std::vector<double>& losses) {
    for (std::size_t i = 0; i < losses.size(); ++i) out += std::string(phase) + "," + std::to_string(i + 1) + "," + fmt(losses[i]) + "\n";
  };
  add("dtm_pretrain", twin.dtm_log.pretrain_loss);
  add("dtm_rollout", twin.dtm_log.train_loss);
  add("dtc", twin.dtc_loss);
  return out;
}

}  // namespace

std::vector<TwinCheckpoint> train_experiment(const ExperimentConfig& config, const fs::path& data,
                                             const fs::path& out) {
  std::vector<TwinCheckpoint> twins;
  for (const auto& v : config.vessels) {
    const DatasetSplit split = load_manifest(data, v.vessel);
    std::vector<LabeledTrajectory> train;
    for (const auto& e : split.train) train.push_back(load_entry(data, v.vessel, e));
    TwinConfig tc = config.twin;
    tc.dtm_train.seed = derive_seed(config.seed, "dtm/" + v.vessel);
    tc.dtc_train.seed = derive_seed(config.seed, "dtc/" + v.vessel);
    TwinCheckpoint twin = train_twin(v.vessel, train, tc);
    write_output(out / "checkpoints" / (v.vessel + ".json"), checkpoint_to_json(twin) + "\n");
    write_output(out / "checkpoints" / (v.vessel + "_loss.csv"), loss_csv(twin));
    twins.push_back(std::move(twin));
  }
  return twins;
}

std::string verdict_csv(const std::vector<Verdict>& verdicts) {
  const std::size_t steps = verdicts.empty() ? 0 : verdicts.front().step_errors.size();
  std::string out = "anchor_time,score,decision,label";
  for (std::size_t k = 1; k <= steps; ++k) out += ",re_" + std::to_string(k);
  out += '\n';
  for (const auto& v : verdicts) {
    if (v.step_errors.size() != steps) throw std::invalid_argument("verdict_csv: ragged step errors");
    out += fmt(v.anchor_time) + "," + fmt(v.score) + "," + to_string(v.decision) + "," + to_string(v.label);
    for (double e : v.step_errors) out += "," + fmt(e);
    out += '\n';
  }
  return out;
}

std::vector<Verdict> parse_verdict_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("anchor_time,score,decision,label", 0) != 0) {
    throw std::runtime_error("verdict csv: unexpected header");
  }
  auto parse_label = [](const std::string& s, std::size_t row) {
    if (s == "IND") return Label::ind;
    if (s == "OOD") return Label::ood;
    throw std::runtime_error("verdict csv row " + std::to_string(row) + ": bad label '" + s + "'");
  };
  auto parse_num = [](const std::string& s, std::size_t row) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
      throw std::runtime_error("verdict csv row " + std::to_string(row) + ": non-numeric cell '" + s + "'");
    }
    return v;
  };
  std::vector<Verdict> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 4) throw std::runtime_error("verdict csv row " + std::to_string(row) + ": too few cells");
    Verdict v;
    v.anchor_time = parse_num(cells[0], row);
    v.score = parse_num(cells[1], row);
    v.decision = parse_label(cells[2], row);
    v.label = parse_label(cells[3], row);
    for (std::size_t i = 4; i < cells.size(); ++i) v.step_errors.push_back(parse_num(cells[i], row));
    out.push_back(std::move(v));
  }
  return out;
}

std::string verdict_index_json(const std::vector<VerdictFile>& files) {
  json j = json::array();
  for (const auto& f : files) {
    j.push_back({{"vessel", f.group.vessel}, {"maneuver", f.group.maneuver}, {"disturbance", f.group.disturbance},
                 {"magnitude", f.group.magnitude}, {"magnitude_value", f.magnitude_value}, {"method", f.method},
                 {"path_id", f.path_id}, {"file", f.file}});
  }
  return json{{"format", "vtwin-verdict-index"}, {"version", 1}, {"verdicts", j}}.dump(2) + "\n";
}

std::vector<VerdictFile> parse_verdict_index(const std::string& text) {
  const json j = json::parse(text);
  if (j.value("format", std::string{}) != "vtwin-verdict-index") throw std::runtime_error("not a verdict index");
  std::vector<VerdictFile> out;
  for (const auto& e : j.at("verdicts")) {
    VerdictFile f;
    f.group = {e.at("vessel").get<std::string>(), e.at("maneuver").get<std::string>(),
               e.at("disturbance").get<std::string>(), e.at("magnitude").get<std::string>()};
    f.magnitude_value = e.at("magnitude_value").get<double>();
    f.method = e.at("method").get<std::string>();
    f.path_id = e.at("path_id").get<std::string>();
    f.file = e.at("file").get<std::string>();
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<VerdictFile> detect_experiment(const ExperimentConfig& config, const fs::path& data,
                                           const fs::path& checkpoints, const fs::path& out) {
  std::vector<VerdictFile> index;
  for (const auto& v : config.vessels) {
    const TwinCheckpoint twin = load_checkpoint(checkpoints / (v.vessel + ".json"));
    const DatasetSplit split = load_manifest(data, v.vessel);
    for (const auto& e : split.test) {
      const LabeledTrajectory traj = load_entry(data, v.vessel, e);
      const auto verdicts = detect_variants(twin, traj, config.variants);
      const auto parts = split_group(e.group);
      if (parts.size() != 3) throw std::runtime_error("manifest entry " + e.id + " has malformed group '" + e.group + "'");
      for (std::size_t m = 0; m < config.variants.size(); ++m) {
        VerdictFile f;
        f.group = {v.vessel, parts[0], parts[1], parts[2]};
        f.magnitude_value = std::stod(parts[2]);
        f.method = id_of(config.variants[m]);
        f.path_id = e.id;
        f.file = v.vessel + "/" + f.method + "/" + e.id + ".csv";
        write_output(out / "verdicts" / f.file, verdict_csv(verdicts[m]));
        index.push_back(std::move(f));
      }
    }
  }
  write_output(out / "verdicts" / "index.json", verdict_index_json(index));
  return index;
}

Report evaluate_verdicts(const fs::path& verdicts, const fs::path& out) {
  const fs::path index_path = verdicts / "index.json";
  if (!fs::exists(index_path)) throw std::runtime_error("verdict index not found: " + index_path.string());
  std::vector<ScoredRun> runs;
  for (const auto& f : parse_verdict_index(read_text(index_path))) {
    ScoredRun r;
    r.group = f.group;
    r.magnitude_value = f.magnitude_value;
    r.method = f.method;
    r.path_id = f.path_id;
    for (const auto& v : parse_verdict_csv(read_text(verdicts / f.file))) {
      r.samples.push_back({v.score, v.label});
      r.decisions.push_back(v.decision);
    }
    runs.push_back(std::move(r));
  }
  Report report = build_report(runs);
  write_output(out / "report.json", report_json(report) + "\n");
  write_output(out / "report.csv", report_csv(report));
  return report;
}

std::string report_summary(const Report& report) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(4);
  for (const auto& m : report.groups) {
    s << "group " << m.group.vessel << ' ' << m.group.maneuver << ' ' << m.group.disturbance << ' '
      << m.group.magnitude << ' ' << m.method << " auroc=" << m.auroc << " tnr@tpr95=" << m.tnr_at_tpr95
      << " n_ind=" << m.n_ind << " n_ood=" << m.n_ood;
    if (m.accuracy) s << " accuracy=" << *m.accuracy;
    s << '\n';
  }
  for (const auto& t : report.trends) {
    s << "trend " << t.vessel << ' ' << t.maneuver << ' ' << t.disturbance << ' ' << t.method
      << " paths=" << t.n_paths << " spearman=";
    if (t.spearman) s << *t.spearman; else s << "undefined";
    s << '\n';
  }
  for (const auto& c : report.comparisons) {
    s << "compare " << c.group.vessel << ' ' << c.group.maneuver << ' ' << c.group.disturbance << ' '
      << c.group.magnitude << ' ' << c.method_a << " vs " << c.method_b << " a12=" << c.effect.a12 << " ("
      << to_string(c.effect.magnitude) << ")";
    if (c.effect.cohens_h) s << " cohens_h=" << *c.effect.cohens_h;
    s << '\n';
  }
  for (const auto& w : report.warnings) s << "warning " << w << '\n';
  return s.str();
}

Report run_experiment(const ExperimentConfig& config, const fs::path& out) {
  write_output(out / "config.json", experiment_to_json(config));
  simulate_experiment(config, out);
  train_experiment(config, out, out);
  detect_experiment(config, out, out / "checkpoints", out);
  return evaluate_verdicts(out / "verdicts", out);
}

}  // namespace vtwin
