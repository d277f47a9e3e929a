#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "vtwin/digital_twin.hpp"

namespace vtwin {

using nlohmann::json;
using nn::Matrix;

namespace {

json matrix_json(const Matrix& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix matrix_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
    throw std::invalid_argument("checkpoint: matrix data does not match its shape");
  }
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  return m;
}

json dense_json(const nn::DenseLayer& l) {
  return {{"weight", matrix_json(l.weight)}, {"bias", matrix_json(l.bias)},
          {"activation", nn::to_string(l.activation)}};
}

nn::DenseLayer dense_from(const json& j) {
  nn::DenseLayer l;
  l.weight = matrix_from(j.at("weight"));
  const Matrix bias = matrix_from(j.at("bias"));
  if (bias.cols() != 1) throw std::invalid_argument("checkpoint: bias must be a column");
  l.bias = bias;
  l.activation = nn::parse_activation(j.at("activation").get<std::string>());
  if (l.bias.size() != l.weight.rows()) throw std::invalid_argument("checkpoint: dense bias size mismatch");
  return l;
}

json recurrent_json(const nn::RecurrentLayer& l) {
  return {{"w_in", matrix_json(l.w_in)}, {"w_rec", matrix_json(l.w_rec)}, {"bias", matrix_json(l.bias)}};
}

nn::RecurrentLayer recurrent_from(const json& j) {
  nn::RecurrentLayer l;
  l.w_in = matrix_from(j.at("w_in"));
  l.w_rec = matrix_from(j.at("w_rec"));
  const Matrix bias = matrix_from(j.at("bias"));
  if (bias.cols() != 1 || l.w_in.rows() != l.w_rec.rows() || l.w_rec.rows() != l.w_rec.cols() ||
      bias.rows() != l.w_rec.rows()) {
    throw std::invalid_argument("checkpoint: recurrent layer shapes are inconsistent");
  }
  l.bias = bias;
  return l;
}

json threshold_json(const OodThreshold& t) {
  return {{"mean", t.mean}, {"stddev", t.stddev}, {"value", t.value}};
}

OodThreshold threshold_from(const json& j) {
  return {j.at("mean").get<double>(), j.at("stddev").get<double>(), j.at("value").get<double>()};
}

json train_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
          {"pretrain_epochs", c.pretrain_epochs}, {"epochs", c.epochs},
          {"seed", c.seed}, {"clip_norm", c.clip_norm}, {"window_stride", c.window_stride}};
}

TrainConfig train_from(const json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.pretrain_epochs = j.at("pretrain_epochs").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.clip_norm = j.at("clip_norm").get<double>();
  c.window_stride = j.at("window_stride").get<std::size_t>();
  return c;
}

json dtm_config_json(const DtmConfig& c) {
  return {{"window", c.window}, {"horizon", c.horizon}, {"hidden", c.hidden},
          {"layers", c.layers}, {"n_state", c.n_state}, {"n_exogenous", c.n_exogenous}};
}

DtmConfig dtm_config_from(const json& j) {
  DtmConfig c;
  c.window = j.at("window").get<std::size_t>();
  c.horizon = j.at("horizon").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.layers = j.at("layers").get<std::size_t>();
  c.n_state = j.at("n_state").get<std::size_t>();
  c.n_exogenous = j.at("n_exogenous").get<std::size_t>();
  return c;
}

}  // namespace

std::string checkpoint_to_json(const TwinCheckpoint& twin) {
  json j;
  j["version"] = twin.version;
  j["vessel"] = twin.vessel;
  j["columns"] = twin.columns;
  j["scaler"] = {{"min", twin.scaler.min}, {"max", twin.scaler.max}};
  json rnn = json::array();
  for (const auto& l : twin.dtm.rnn) rnn.push_back(recurrent_json(l));
  j["dtm"] = {{"config", dtm_config_json(twin.dtm.config)}, {"rnn", rnn}, {"head", dense_json(twin.dtm.head)}};
  json dtc = json::array();
  for (const auto& l : twin.dtc.layers) dtc.push_back(dense_json(l));
  j["dtc"] = dtc;
  j["threshold"] = threshold_json(twin.threshold);
  j["rmse_threshold"] = threshold_json(twin.rmse_threshold);
  j["euclid_threshold"] = threshold_json(twin.euclid_threshold);
  j["config"] = {{"dtm", dtm_config_json(twin.config.dtm)},
                 {"dtm_train", train_json(twin.config.dtm_train)},
                 {"dtc_train", train_json(twin.config.dtc_train)},
                 {"aggregation", to_string(twin.config.aggregation)},
                 {"label_mode", to_string(twin.config.label_mode)},
                 {"threshold_stride", twin.config.threshold_stride}};
  j["dtc_loss"] = twin.dtc_loss;
  j["dtm_log"] = {{"pretrain_loss", twin.dtm_log.pretrain_loss}, {"train_loss", twin.dtm_log.train_loss}};
  return j.dump(1);
}

TwinCheckpoint checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("checkpoint: malformed JSON: ") + e.what());
  }
  try {
    TwinCheckpoint twin;
    twin.version = j.at("version").get<int>();
    if (twin.version != kCheckpointVersion) {
      throw std::invalid_argument("checkpoint: unsupported version " + std::to_string(twin.version) +
                                  " (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    twin.vessel = j.at("vessel").get<std::string>();
    twin.columns = j.at("columns").get<std::vector<std::string>>();
    twin.scaler.min = j.at("scaler").at("min").get<std::vector<double>>();
    twin.scaler.max = j.at("scaler").at("max").get<std::vector<double>>();
    const json& dtm = j.at("dtm");
    twin.dtm.config = dtm_config_from(dtm.at("config"));
    for (const auto& l : dtm.at("rnn")) twin.dtm.rnn.push_back(recurrent_from(l));
    twin.dtm.head = dense_from(dtm.at("head"));
    for (const auto& l : j.at("dtc")) twin.dtc.layers.push_back(dense_from(l));
    twin.threshold = threshold_from(j.at("threshold"));
    twin.rmse_threshold = threshold_from(j.at("rmse_threshold"));
    twin.euclid_threshold = threshold_from(j.at("euclid_threshold"));
    const json& cfg = j.at("config");
    twin.config.dtm = dtm_config_from(cfg.at("dtm"));
    twin.config.dtm_train = train_from(cfg.at("dtm_train"));
    twin.config.dtc_train = train_from(cfg.at("dtc_train"));
    twin.config.aggregation = parse_aggregation(cfg.at("aggregation").get<std::string>());
    twin.config.label_mode = parse_label_mode(cfg.at("label_mode").get<std::string>());
    twin.config.threshold_stride = cfg.at("threshold_stride").get<std::size_t>();
    twin.dtc_loss = j.at("dtc_loss").get<std::vector<double>>();
    twin.dtm_log.pretrain_loss = j.at("dtm_log").at("pretrain_loss").get<std::vector<double>>();
    twin.dtm_log.train_loss = j.at("dtm_log").at("train_loss").get<std::vector<double>>();
    if (twin.scaler.min.size() != twin.columns.size() - 1 || twin.scaler.max.size() != twin.scaler.min.size()) {
      throw std::invalid_argument("checkpoint: scaler width does not match the column list");
    }
    return twin;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("checkpoint: missing or invalid field: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const TwinCheckpoint& twin) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(twin) << '\n';
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

TwinCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace vtwin
