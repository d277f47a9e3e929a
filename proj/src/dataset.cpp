#include "vtwin/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include <json.hpp>

namespace vtwin {

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string csv_error(std::size_t row, const std::string& what) {
  return "csv row " + std::to_string(row) + ": " + what;
}

}  // namespace

ColumnSchema column_schema(const VesselParams& params) {
  ColumnSchema s;
  s.columns.push_back("time_s");
  for (auto& n : state_feature_names(params)) s.columns.push_back(n);
  s.n_state = s.columns.size() - 1;
  for (auto& n : params.controls) s.columns.push_back(n);
  s.n_control = params.controls.size();
  if (params.supports_current) {
    s.columns.push_back("current_speed");
    s.n_env = 1;
  }
  return s;
}

ColumnSchema column_schema(std::string_view preset) { return column_schema(make_preset(preset)); }

std::string csv_text(const LabeledTrajectory& traj) {
  std::string out;
  for (std::size_t i = 0; i < traj.columns.size(); ++i) {
    if (i) out += ',';
    out += traj.columns[i];
  }
  out += '\n';
  for (const auto& row : traj.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const LabeledTrajectory& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << csv_text(traj);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

LabeledTrajectory read_csv(const std::filesystem::path& path, const ColumnSchema& schema,
                           std::string vessel) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  LabeledTrajectory traj;
  traj.vessel = std::move(vessel);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(csv_error(0, "missing header"));
  traj.columns = split_line(line);
  if (traj.columns != schema.columns) {
    throw std::runtime_error(csv_error(0, "header does not match the preset schema"));
  }
  const std::size_t ncol = schema.columns.size();
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != ncol) {
      throw std::runtime_error(csv_error(row_no, "expected " + std::to_string(ncol) + " cells, got " +
                                                     std::to_string(cells.size())));
    }
    std::vector<double> row(ncol);
    for (std::size_t i = 0; i < ncol; ++i) {
      const std::string& c = cells[i];
      const auto res = std::from_chars(c.data(), c.data() + c.size(), row[i]);
      if (res.ec != std::errc() || res.ptr != c.data() + c.size()) {
        throw std::runtime_error(csv_error(row_no, "non-numeric cell '" + c + "' in column " + schema.columns[i]));
      }
    }
    traj.rows.push_back(std::move(row));
  }
  if (traj.rows.size() >= 2) {
    const double period = traj.rows[1][0] - traj.rows[0][0];
    if (!(period > 0.0)) throw std::runtime_error(csv_error(2, "timestamps must increase"));
    for (std::size_t r = 1; r < traj.rows.size(); ++r) {
      const double expected = traj.rows[0][0] + static_cast<double>(r) * period;
      if (std::abs(traj.rows[r][0] - expected) > 1e-9 * std::max(1.0, std::abs(expected))) {
        throw std::runtime_error(csv_error(r + 1, "non-uniform timestamp"));
      }
    }
  }
  return traj;
}

std::vector<std::vector<double>> feature_rows(const LabeledTrajectory& traj) {
  std::vector<std::vector<double>> out;
  out.reserve(traj.rows.size());
  for (const auto& r : traj.rows) out.emplace_back(r.begin() + 1, r.end());
  return out;
}

ScalerParams fit_scaler(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 2) throw std::invalid_argument("fit_scaler: need at least two rows");
  const std::size_t n = rows.front().size();
  ScalerParams s{rows.front(), rows.front()};
  for (const auto& r : rows) {
    if (r.size() != n) throw std::invalid_argument("fit_scaler: ragged rows");
    for (std::size_t i = 0; i < n; ++i) {
      s.min[i] = std::min(s.min[i], r[i]);
      s.max[i] = std::max(s.max[i], r[i]);
    }
  }
  return s;
}

std::vector<double> apply(const ScalerParams& scaler, const std::vector<double>& row) {
  if (row.size() != scaler.min.size()) throw std::invalid_argument("scaler: row width mismatch");
  std::vector<double> out(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) {
    const double span = scaler.max[i] - scaler.min[i];
    out[i] = span > 0.0 ? (row[i] - scaler.min[i]) / span : 0.5 + (row[i] - scaler.min[i]);
  }
  return out;
}

std::vector<double> invert(const ScalerParams& scaler, const std::vector<double>& row) {
  if (row.size() != scaler.min.size()) throw std::invalid_argument("scaler: row width mismatch");
  std::vector<double> out(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) {
    const double span = scaler.max[i] - scaler.min[i];
    out[i] = span > 0.0 ? scaler.min[i] + row[i] * span : scaler.min[i] + (row[i] - 0.5);
  }
  return out;
}

LabeledTrajectory scale_trajectory(const ScalerParams& scaler, const LabeledTrajectory& traj) {
  LabeledTrajectory out = traj;
  for (auto& r : out.rows) {
    const std::vector<double> f(r.begin() + 1, r.end());
    const auto s = apply(scaler, f);
    std::copy(s.begin(), s.end(), r.begin() + 1);
  }
  return out;
}

std::string to_string(Label label) { return label == Label::ood ? "OOD" : "IND"; }

std::string to_string(LabelMode mode) {
  return mode == LabelMode::predictive ? "predictive" : "current";
}

LabelMode parse_label_mode(const std::string& s) {
  if (s == "predictive") return LabelMode::predictive;
  if (s == "current") return LabelMode::current;
  throw std::invalid_argument("unknown label mode '" + s + "'");
}

Label label_for(double t, const std::optional<Interval>& interval, double horizon, LabelMode mode) {
  if (!interval) return Label::ind;
  if (mode == LabelMode::current) {
    return t >= interval->start && t < interval->end ? Label::ood : Label::ind;
  }
  // (t, t + horizon] meets [start, end)
  return interval->start <= t + horizon && interval->end > t ? Label::ood : Label::ind;
}

std::size_t window_count(std::size_t length, std::size_t window, std::size_t horizon) {
  return length >= window + horizon ? length - window - horizon + 1 : 0;
}

std::vector<WindowedSample> make_windows(const LabeledTrajectory& traj, const ColumnSchema& schema,
                                         std::size_t window, std::size_t horizon, LabelMode mode,
                                         double sample_period) {
  if (window < 1 || horizon < 1) throw std::invalid_argument("make_windows: window and horizon must be >= 1");
  const std::size_t length = traj.rows.size();
  if (length < window + horizon) {
    throw std::invalid_argument("make_windows: trajectory of length " + std::to_string(length) +
                                " is shorter than window + horizon");
  }
  const std::size_t ns = schema.n_state;
  std::vector<WindowedSample> out;
  out.reserve(window_count(length, window, horizon));
  for (std::size_t a = window - 1; a + horizon < length; ++a) {
    WindowedSample s;
    s.anchor_row = a;
    s.anchor_time = traj.rows[a][0];
    for (std::size_t r = a + 1 - window; r <= a; ++r) s.input.emplace_back(traj.rows[r].begin() + 1, traj.rows[r].end());
    for (std::size_t r = a + 1; r <= a + horizon; ++r) {
      const auto& row = traj.rows[r];
      s.target.emplace_back(row.begin() + 1, row.begin() + 1 + static_cast<std::ptrdiff_t>(ns));
      s.future_controls.emplace_back(row.begin() + 1 + static_cast<std::ptrdiff_t>(ns), row.end());
    }
    s.label = label_for(s.anchor_time, traj.disturbance_interval, static_cast<double>(horizon) * sample_period, mode);
    out.push_back(std::move(s));
  }
  return out;
}

DatasetSplit assemble_split(std::string vessel, const std::vector<SplitEntry>& candidates,
                            const SplitConfig& config) {
  if (candidates.size() < config.n_train + config.n_test) {
    throw std::invalid_argument("assemble_split: " + std::to_string(candidates.size()) +
                                " candidates for " + std::to_string(config.n_train) + " train + " +
                                std::to_string(config.n_test) + " test");
  }
  std::vector<SplitEntry> train(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(config.n_train));
  std::vector<SplitEntry> test(candidates.begin() + static_cast<std::ptrdiff_t>(config.n_train),
                               candidates.begin() + static_cast<std::ptrdiff_t>(config.n_train + config.n_test));
  return assemble_split(std::move(vessel), std::move(train), std::move(test));
}

DatasetSplit assemble_split(std::string vessel, std::vector<SplitEntry> train,
                            std::vector<SplitEntry> test) {
  for (const auto& e : train) {
    if (e.disturbed || e.disturbance_interval) {
      throw std::invalid_argument("assemble_split: disturbed trajectory '" + e.id + "' offered for training");
    }
    for (const auto& t : test) {
      if (t.id == e.id) throw std::invalid_argument("assemble_split: '" + e.id + "' appears in both train and test");
    }
  }
  return DatasetSplit{std::move(vessel), std::move(train), std::move(test)};
}

namespace {

nlohmann::json entry_json(const SplitEntry& e) {
  nlohmann::json j = {{"id", e.id}, {"csv", e.csv}, {"disturbed", e.disturbed}, {"seed", e.seed}, {"group", e.group}};
  if (e.disturbance_interval) {
    j["disturbance_interval"] = {e.disturbance_interval->start, e.disturbance_interval->end};
  } else {
    j["disturbance_interval"] = nullptr;
  }
  return j;
}

SplitEntry entry_from_json(const nlohmann::json& j) {
  SplitEntry e;
  e.id = j.at("id").get<std::string>();
  e.csv = j.at("csv").get<std::string>();
  e.disturbed = j.at("disturbed").get<bool>();
  e.seed = j.at("seed").get<std::uint64_t>();
  e.group = j.value("group", std::string{});
  if (j.contains("disturbance_interval") && !j["disturbance_interval"].is_null()) {
    const auto& iv = j["disturbance_interval"];
    e.disturbance_interval = Interval{iv.at(0).get<double>(), iv.at(1).get<double>()};
  }
  return e;
}

}  // namespace

std::string split_manifest_json(const DatasetSplit& split) {
  nlohmann::json j;
  j["format"] = "vtwin-dataset-manifest";
  j["version"] = 1;
  j["vessel"] = split.vessel;
  j["train"] = nlohmann::json::array();
  j["test"] = nlohmann::json::array();
  for (const auto& e : split.train) j["train"].push_back(entry_json(e));
  for (const auto& e : split.test) j["test"].push_back(entry_json(e));
  return j.dump(2) + "\n";
}

DatasetSplit parse_split_manifest(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.value("format", std::string{}) != "vtwin-dataset-manifest") {
    throw std::runtime_error("not a dataset manifest");
  }
  std::vector<SplitEntry> train, test;
  for (const auto& e : j.at("train")) train.push_back(entry_from_json(e));
  for (const auto& e : j.at("test")) test.push_back(entry_from_json(e));
  return assemble_split(j.at("vessel").get<std::string>(), std::move(train), std::move(test));
}

}  // namespace vtwin
