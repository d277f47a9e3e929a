#include "vtwin/digital_twin.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace vtwin {

using nn::Matrix;

namespace {

// Encoder plus rollout activations kept for backpropagation.
struct RolloutCache {
  std::vector<Matrix> enc_inputs;
  std::vector<std::vector<Matrix>> enc_hprev;
  std::vector<nn::RnnStep> enc_steps;
  std::vector<Matrix> roll_inputs;
  std::vector<std::vector<Matrix>> roll_hprev;
  std::vector<nn::RnnStep> roll_steps;
  std::vector<nn::DenseCache> head;  // index 0 after the encoder, j after rollout step j
};

std::vector<Matrix> zero_hidden(const DtmModel& dtm, Eigen::Index batch) {
  std::vector<Matrix> h;
  for (const auto& l : dtm.rnn) h.push_back(Matrix::Zero(l.w_rec.rows(), batch));
  return h;
}

struct Batch {
  std::vector<Matrix> enc_inputs;  // W entries, features x B
  Matrix last_state;               // n_state x B
  std::vector<Matrix> controls;    // H entries: exogenous at t+1..t+H
  std::vector<Matrix> targets;     // H entries: states at t+1..t+H
};

Batch gather(const DtmConfig& cfg, const std::vector<SequenceMatrix>& data,
             std::span<const WindowRef> refs, bool with_targets) {
  const auto b = static_cast<Eigen::Index>(refs.size());
  const auto ns = static_cast<Eigen::Index>(cfg.n_state);
  const auto ne = static_cast<Eigen::Index>(cfg.n_exogenous);
  const Eigen::Index f = ns + ne;
  Batch out;
  out.enc_inputs.assign(cfg.window, Matrix(f, b));
  out.controls.assign(cfg.horizon, Matrix(ne, b));
  if (with_targets) out.targets.assign(cfg.horizon, Matrix(ns, b));
  out.last_state.resize(ns, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto& ref = refs[static_cast<std::size_t>(i)];
    const SequenceMatrix& seq = data[ref.trajectory];
    const auto a = static_cast<Eigen::Index>(ref.anchor);
    const auto w = static_cast<Eigen::Index>(cfg.window);
    for (Eigen::Index e = 0; e < w; ++e) out.enc_inputs[static_cast<std::size_t>(e)].col(i) = seq.col(a - w + 1 + e);
    out.last_state.col(i) = seq.col(a).head(ns);
    for (std::size_t k = 0; k < cfg.horizon; ++k) {
      const auto c = a + 1 + static_cast<Eigen::Index>(k);
      out.controls[k].col(i) = seq.col(c).segment(ns, ne);
      if (with_targets) out.targets[k].col(i) = seq.col(c).head(ns);
    }
  }
  return out;
}

std::vector<Matrix> rollout(const DtmModel& dtm, const Batch& batch, RolloutCache* cache) {
  const auto& cfg = dtm.config;
  const Eigen::Index b = batch.last_state.cols();
  std::vector<Matrix> h = zero_hidden(dtm, b);
  if (cache) *cache = RolloutCache{};
  for (const auto& x : batch.enc_inputs) {
    nn::RnnStep s = nn::rnn_step(dtm.rnn, x, h);
    if (cache) {
      cache->enc_inputs.push_back(x);
      cache->enc_hprev.push_back(h);
    }
    h = s.hidden;
    if (cache) cache->enc_steps.push_back(std::move(s));
  }
  std::vector<Matrix> preds;
  preds.reserve(cfg.horizon);
  nn::DenseCache hc;
  preds.push_back(batch.last_state + nn::dense_forward(dtm.head, h.back(), nn::Mode::inference, nullptr,
                                                       cache ? &hc : nullptr));
  if (cache) cache->head.push_back(std::move(hc));
  const auto ns = static_cast<Eigen::Index>(cfg.n_state);
  Matrix x(ns + static_cast<Eigen::Index>(cfg.n_exogenous), b);
  for (std::size_t j = 1; j < cfg.horizon; ++j) {
    x.topRows(ns) = preds.back();
    x.bottomRows(static_cast<Eigen::Index>(cfg.n_exogenous)) = batch.controls[j - 1];
    nn::RnnStep s = nn::rnn_step(dtm.rnn, x, h);
    if (cache) {
      cache->roll_inputs.push_back(x);
      cache->roll_hprev.push_back(h);
    }
    h = s.hidden;
    if (cache) cache->roll_steps.push_back(std::move(s));
    nn::DenseCache c;
    preds.push_back(preds.back() +
                    nn::dense_forward(dtm.head, h.back(), nn::Mode::inference, nullptr, cache ? &c : nullptr));
    if (cache) cache->head.push_back(std::move(c));
  }
  return preds;
}

struct DtmGrads {
  std::vector<nn::RecurrentGrads> rnn;
  nn::DenseGrads head;
};

DtmGrads zero_grads(const DtmModel& dtm) {
  DtmGrads g;
  for (const auto& l : dtm.rnn) g.rnn.push_back(nn::zero_grads(l));
  g.head = nn::zero_grads(dtm.head);
  return g;
}

nn::ParamSpans spans(DtmModel& dtm) {
  nn::ParamSpans s;
  for (auto& l : dtm.rnn) nn::append_params(l, s);
  nn::append_params(dtm.head, s);
  return s;
}

nn::ParamSpans spans(DtmGrads& g) {
  nn::ParamSpans s;
  for (auto& l : g.rnn) nn::append_params(l, s);
  nn::append_params(g.head, s);
  return s;
}

// Rollout loss over the horizon; accumulates gradients.
double min_abs(const std::vector<nn::RnnStep>& steps) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : steps)
    for (const auto& p : s.pre) m = std::min(m, p.cwiseAbs().minCoeff());
  return m;
}

double rollout_loss(const DtmModel& dtm, const Batch& batch, DtmGrads& grads, double* margin = nullptr) {
  const auto& cfg = dtm.config;
  RolloutCache cache;
  const std::vector<Matrix> preds = rollout(dtm, batch, &cache);
  if (margin) *margin = std::min(min_abs(cache.enc_steps), min_abs(cache.roll_steps));
  const std::size_t hz = cfg.horizon;
  const double n = static_cast<double>(hz) * static_cast<double>(preds.front().size());
  double loss = 0.0;
  // dS[k] is dL/d(prediction k), k = 0..H-1 (prediction k is the state at t+k+1).
  std::vector<Matrix> ds(hz);
  for (std::size_t k = 0; k < hz; ++k) {
    const Matrix diff = preds[k] - batch.targets[k];
    loss += diff.squaredNorm();
    ds[k] = (2.0 / n) * diff;
  }
  const auto ns = static_cast<Eigen::Index>(cfg.n_state);
  std::vector<Matrix> dh = zero_hidden(dtm, preds.front().cols());
  for (std::size_t j = hz - 1; j >= 1; --j) {
    // preds[j] = preds[j-1] + head(h after rollout step j)
    ds[j - 1] += ds[j];
    dh.back() += nn::dense_backward(dtm.head, cache.head[j], ds[j], grads.head);
    const Matrix dx = nn::rnn_step_backward(dtm.rnn, cache.roll_inputs[j - 1], cache.roll_hprev[j - 1],
                                            cache.roll_steps[j - 1], dh, grads.rnn);
    ds[j - 1] += dx.topRows(ns);
  }
  dh.back() += nn::dense_backward(dtm.head, cache.head[0], ds[0], grads.head);
  for (std::size_t e = cache.enc_steps.size(); e-- > 0;) {
    nn::rnn_step_backward(dtm.rnn, cache.enc_inputs[e], cache.enc_hprev[e], cache.enc_steps[e], dh, grads.rnn);
  }
  return loss / n;
}

// One-step-ahead loss along the window (teacher forced); accumulates gradients.
double pretrain_loss(const DtmModel& dtm, const Batch& batch, DtmGrads& grads, double* margin = nullptr) {
  const auto& cfg = dtm.config;
  const auto ns = static_cast<Eigen::Index>(cfg.n_state);
  const Eigen::Index b = batch.last_state.cols();
  nn::RnnTrace trace;
  const std::vector<Matrix> outs = nn::rnn_forward(dtm.rnn, batch.enc_inputs, zero_hidden(dtm, b), &trace);
  if (margin) *margin = min_abs(trace.steps);
  const std::size_t w = cfg.window;
  const double n = static_cast<double>(w) * static_cast<double>(ns * b);
  double loss = 0.0;
  std::vector<Matrix> d_out(w);
  for (std::size_t e = 0; e < w; ++e) {
    nn::DenseCache hc;
    const Matrix pred = batch.enc_inputs[e].topRows(ns) +
                        nn::dense_forward(dtm.head, outs[e], nn::Mode::inference, nullptr, &hc);
    const Matrix& target = e + 1 < w ? Matrix(batch.enc_inputs[e + 1].topRows(ns)) : batch.targets[0];
    const Matrix diff = pred - target;
    loss += diff.squaredNorm();
    d_out[e] = nn::dense_backward(dtm.head, hc, (2.0 / n) * diff, grads.head);
  }
  nn::rnn_backward(dtm.rnn, trace, d_out, grads.rnn);
  return loss / n;
}

template <typename LossFn>
double run_epoch(DtmModel& dtm, const std::vector<SequenceMatrix>& data, std::vector<WindowRef>& refs,
                 const TrainConfig& train, nn::AdamState& adam, Rng& rng, LossFn loss_fn) {
  std::shuffle(refs.begin(), refs.end(), rng);
  double total = 0.0;
  std::size_t seen = 0;
  nn::ParamSpans params = spans(dtm);
  for (std::size_t start = 0; start < refs.size(); start += train.batch_size) {
    const std::size_t count = std::min(train.batch_size, refs.size() - start);
    const Batch batch = gather(dtm.config, data, std::span<const WindowRef>(refs).subspan(start, count), true);
    DtmGrads grads = zero_grads(dtm);
    const double loss = loss_fn(dtm, batch, grads);
    nn::ParamSpans g = spans(grads);
    if (train.clip_norm > 0.0) nn::clip_global_norm(g, train.clip_norm);
    nn::adam_step(adam, params, g);
    total += loss * static_cast<double>(count);
    seen += count;
  }
  return total / static_cast<double>(seen);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

DtmModel init_dtm(const DtmConfig& config, std::uint64_t seed) {
  require(config.window >= 1 && config.horizon >= 1, "dtm: window and horizon must be >= 1");
  require(config.n_state >= 1 && config.hidden >= 1 && config.layers >= 1, "dtm: empty dimensions");
  Rng rng(derive_seed(seed, "dtm_init"));
  DtmModel m;
  m.config = config;
  std::size_t in = config.n_state + config.n_exogenous;
  for (std::size_t l = 0; l < config.layers; ++l) {
    m.rnn.push_back(nn::init_recurrent(in, config.hidden, rng));
    in = config.hidden;
  }
  m.head = nn::init_dense(config.hidden, config.n_state, nn::Activation::identity, rng);
  return m;
}

SequenceMatrix to_sequence_matrix(const LabeledTrajectory& scaled) {
  require(!scaled.rows.empty(), "empty trajectory");
  const auto f = static_cast<Eigen::Index>(scaled.rows.front().size() - 1);
  SequenceMatrix m(f, static_cast<Eigen::Index>(scaled.rows.size()));
  for (std::size_t t = 0; t < scaled.rows.size(); ++t) {
    for (Eigen::Index i = 0; i < f; ++i) m(i, static_cast<Eigen::Index>(t)) = scaled.rows[t][static_cast<std::size_t>(i) + 1];
  }
  return m;
}

std::vector<WindowRef> window_refs(const std::vector<SequenceMatrix>& data, std::size_t window,
                                   std::size_t horizon, std::size_t stride) {
  require(stride >= 1, "window stride must be >= 1");
  std::vector<WindowRef> refs;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto len = static_cast<std::size_t>(data[i].cols());
    for (std::size_t a = window - 1; a + horizon < len; a += stride) refs.push_back({i, a});
  }
  return refs;
}

std::vector<Matrix> predict_batch(const DtmModel& dtm, const std::vector<SequenceMatrix>& data,
                                  std::span<const WindowRef> refs) {
  const Batch batch = gather(dtm.config, data, refs, false);
  return rollout(dtm, batch, nullptr);
}

std::vector<std::vector<double>> predict_horizon(const DtmModel& dtm,
                                                 const std::vector<std::vector<double>>& window,
                                                 const std::vector<std::vector<double>>& future_controls) {
  const auto& cfg = dtm.config;
  require(window.size() == cfg.window, "predict_horizon: window length does not match the model");
  require(future_controls.size() == cfg.horizon, "predict_horizon: horizon does not match the model");
  const std::size_t f = cfg.n_state + cfg.n_exogenous;
  SequenceMatrix seq(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(cfg.window + cfg.horizon));
  seq.setZero();
  for (std::size_t t = 0; t < cfg.window; ++t) {
    require(window[t].size() == f, "predict_horizon: window row width mismatch");
    for (std::size_t i = 0; i < f; ++i) seq(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = window[t][i];
  }
  for (std::size_t k = 0; k < cfg.horizon; ++k) {
    require(future_controls[k].size() == cfg.n_exogenous, "predict_horizon: control row width mismatch");
    for (std::size_t i = 0; i < cfg.n_exogenous; ++i) {
      seq(static_cast<Eigen::Index>(cfg.n_state + i), static_cast<Eigen::Index>(cfg.window + k)) = future_controls[k][i];
    }
  }
  const std::vector<SequenceMatrix> data = {seq};
  const WindowRef ref{0, cfg.window - 1};
  const auto preds = predict_batch(dtm, data, std::span<const WindowRef>(&ref, 1));
  std::vector<std::vector<double>> out;
  for (const auto& p : preds) out.emplace_back(p.data(), p.data() + p.rows());
  return out;
}

double dtm_loss(const DtmModel& dtm, const std::vector<SequenceMatrix>& data, std::span<const WindowRef> refs,
                bool pretrain, std::vector<double>* grads, double* relu_margin) {
  require(!refs.empty(), "dtm_loss: no windows");
  const Batch batch = gather(dtm.config, data, refs, true);
  DtmGrads g = zero_grads(dtm);
  const double loss = pretrain ? pretrain_loss(dtm, batch, g, relu_margin) : rollout_loss(dtm, batch, g, relu_margin);
  if (grads) {
    grads->clear();
    for (const auto& span : spans(g)) grads->insert(grads->end(), span.begin(), span.end());
  }
  return loss;
}

nn::ParamSpans dtm_params(DtmModel& dtm) { return spans(dtm); }

DtmModel train_dtm(const std::vector<SequenceMatrix>& data, const DtmConfig& config,
                   const TrainConfig& train, TrainingLog* log) {
  require(train.batch_size >= 1, "train_dtm: batch size must be >= 1");
  for (const auto& d : data) {
    require(static_cast<std::size_t>(d.rows()) == config.n_state + config.n_exogenous,
            "train_dtm: feature count does not match the configuration");
  }
  std::vector<WindowRef> refs = window_refs(data, config.window, config.horizon, train.window_stride);
  if (refs.empty()) throw std::invalid_argument("train_dtm: no trajectory is long enough for window + horizon");
  DtmModel dtm = init_dtm(config, train.seed);
  Rng rng(derive_seed(train.seed, "dtm_shuffle"));
  nn::AdamState adam;
  adam.config.learning_rate = train.learning_rate;
  for (std::size_t e = 0; e < train.pretrain_epochs; ++e) {
    const double l = run_epoch(dtm, data, refs, train, adam, rng,
                               [](const DtmModel& m, const Batch& b, DtmGrads& g) { return pretrain_loss(m, b, g); });
    if (log) log->pretrain_loss.push_back(l);
  }
  for (std::size_t e = 0; e < train.epochs; ++e) {
    const double l = run_epoch(dtm, data, refs, train, adam, rng,
                               [](const DtmModel& m, const Batch& b, DtmGrads& g) { return rollout_loss(m, b, g); });
    if (log) log->train_loss.push_back(l);
  }
  return dtm;
}

DtcModel init_dtc(std::size_t input_dim, std::uint64_t seed) {
  require(input_dim >= 1, "dtc: input dimension must be >= 1");
  Rng rng(derive_seed(seed, "dtc_init"));
  DtcModel m;
  std::size_t in = input_dim;
  for (std::size_t d : dtc_hidden_dims()) {
    m.layers.push_back(nn::init_dense(in, d, nn::Activation::rrelu, rng));
    in = d;
  }
  m.layers.push_back(nn::init_dense(in, input_dim, nn::Activation::sigmoid, rng));
  return m;
}

Matrix dtc_reconstruct(const DtcModel& dtc, const Matrix& x) {
  Matrix h = x;
  for (const auto& l : dtc.layers) h = nn::dense_forward(l, h, nn::Mode::inference);
  return h;
}

DtcModel train_dtc(const Matrix& x, const TrainConfig& train, std::vector<double>* loss_log) {
  require(x.cols() > 0, "train_dtc: no training vectors");
  require(train.batch_size >= 1, "train_dtc: batch size must be >= 1");
  DtcModel dtc = init_dtc(static_cast<std::size_t>(x.rows()), train.seed);
  Rng rng(derive_seed(train.seed, "dtc_train"));
  nn::AdamState adam;
  adam.config.learning_rate = train.learning_rate;
  nn::ParamSpans params;
  for (auto& l : dtc.layers) nn::append_params(l, params);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.cols()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::vector<nn::DenseCache> caches(dtc.layers.size());
  for (std::size_t epoch = 0; epoch < train.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += train.batch_size) {
      const std::size_t count = std::min(train.batch_size, order.size() - start);
      Matrix batch(x.rows(), static_cast<Eigen::Index>(count));
      for (std::size_t i = 0; i < count; ++i) batch.col(static_cast<Eigen::Index>(i)) = x.col(order[start + i]);
      Matrix h = batch;
      for (std::size_t l = 0; l < dtc.layers.size(); ++l) {
        h = nn::dense_forward(dtc.layers[l], h, nn::Mode::training, &rng, &caches[l]);
      }
      nn::Loss loss = nn::mse_loss(h, batch);
      std::vector<nn::DenseGrads> grads;
      for (const auto& l : dtc.layers) grads.push_back(nn::zero_grads(l));
      Matrix d = loss.grad;
      for (std::size_t l = dtc.layers.size(); l-- > 0;) d = nn::dense_backward(dtc.layers[l], caches[l], d, grads[l]);
      nn::ParamSpans g;
      for (auto& gr : grads) nn::append_params(gr, g);
      nn::adam_step(adam, params, g);
      total += loss.value * static_cast<double>(count);
    }
    if (loss_log) loss_log->push_back(total / static_cast<double>(order.size()));
  }
  return dtc;
}

double reconstruction_error(std::span<const double> state, std::span<const double> reconstruction) {
  require(state.size() == reconstruction.size(), "reconstruction_error: shape mismatch");
  double sq = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i) {
    const double d = state[i] - reconstruction[i];
    sq += d * d;
  }
  return std::sqrt(sq);
}

OodThreshold compute_threshold(std::span<const double> errors) {
  if (errors.empty()) throw std::invalid_argument("compute_threshold: empty reconstruction-error list");
  const double n = static_cast<double>(errors.size());
  const double mean = std::accumulate(errors.begin(), errors.end(), 0.0) / n;
  double var = 0.0;
  for (double e : errors) var += (e - mean) * (e - mean);
  OodThreshold t;
  t.mean = mean;
  t.stddev = std::sqrt(var / n);
  t.value = t.mean + 3.0 * t.stddev;
  return t;
}

Label classify(double error, const OodThreshold& threshold) {
  return error <= threshold.value ? Label::ind : Label::ood;
}

double baseline_score(BaselineKind kind, const Matrix& predicted, const Matrix& realized) {
  require(predicted.rows() == realized.rows() && predicted.cols() == realized.cols(),
          "baseline_score: shape mismatch");
  require(predicted.size() > 0, "baseline_score: empty input");
  const double sq = (predicted - realized).squaredNorm();
  return kind == BaselineKind::rmse ? std::sqrt(sq / static_cast<double>(predicted.size())) : std::sqrt(sq);
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::oddit: return "oddit";
    case Variant::dtm_r: return "dtm-r";
    case Variant::dtm_e: return "dtm-e";
  }
  return "unknown";
}

Variant parse_variant(const std::string& s) {
  if (s == "oddit") return Variant::oddit;
  if (s == "dtm-r") return Variant::dtm_r;
  if (s == "dtm-e") return Variant::dtm_e;
  throw std::invalid_argument("unknown variant '" + s + "' (expected oddit, dtm-r or dtm-e)");
}

std::string to_string(Aggregation a) { return a == Aggregation::max ? "max" : "mean"; }

Aggregation parse_aggregation(const std::string& s) {
  if (s == "max") return Aggregation::max;
  if (s == "mean") return Aggregation::mean;
  throw std::invalid_argument("unknown aggregation '" + s + "'");
}

namespace {

constexpr std::size_t kPredictChunk = 512;

// Per-anchor DTC inputs: predicted state stacked over the commanded controls.
Matrix dtc_inputs(const std::vector<Matrix>& preds, const Batch& batch, std::size_t col) {
  const std::size_t hz = preds.size();
  const Eigen::Index ns = preds.front().rows();
  const Eigen::Index ne = batch.controls.front().rows();
  Matrix out(ns + ne, static_cast<Eigen::Index>(hz));
  for (std::size_t k = 0; k < hz; ++k) {
    out.col(static_cast<Eigen::Index>(k)).head(ns) = preds[k].col(static_cast<Eigen::Index>(col));
    out.col(static_cast<Eigen::Index>(k)).tail(ne) = batch.controls[k].col(static_cast<Eigen::Index>(col));
  }
  return out;
}

Matrix realized_states(const Batch& batch, std::size_t col) {
  const std::size_t hz = batch.targets.size();
  Matrix out(batch.targets.front().rows(), static_cast<Eigen::Index>(hz));
  for (std::size_t k = 0; k < hz; ++k) out.col(static_cast<Eigen::Index>(k)) = batch.targets[k].col(static_cast<Eigen::Index>(col));
  return out;
}

Matrix predicted_states(const std::vector<Matrix>& preds, std::size_t col) {
  Matrix out(preds.front().rows(), static_cast<Eigen::Index>(preds.size()));
  for (std::size_t k = 0; k < preds.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = preds[k].col(static_cast<Eigen::Index>(col));
  return out;
}

std::vector<double> step_errors(const DtcModel& dtc, const Matrix& inputs) {
  const Matrix rec = dtc_reconstruct(dtc, inputs);
  std::vector<double> out(static_cast<std::size_t>(inputs.cols()));
  for (Eigen::Index k = 0; k < inputs.cols(); ++k) out[static_cast<std::size_t>(k)] = (inputs.col(k) - rec.col(k)).norm();
  return out;
}

double aggregate(const std::vector<double>& errors, Aggregation a) {
  if (a == Aggregation::max) return *std::max_element(errors.begin(), errors.end());
  return std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size());
}

}  // namespace

namespace {

// DTC vectors and per-anchor baseline scores over the threshold anchors.
struct ThresholdData {
  Matrix vectors;
  std::vector<double> rmse;
  std::vector<double> euclid;
};

ThresholdData threshold_data(const DtmModel& dtm, const std::vector<SequenceMatrix>& data, std::size_t stride,
                             Eigen::Index dim) {
  const auto refs = window_refs(data, dtm.config.window, dtm.config.horizon, stride);
  const std::size_t hz = dtm.config.horizon;
  ThresholdData out;
  out.vectors.resize(dim, static_cast<Eigen::Index>(refs.size() * hz));
  for (std::size_t start = 0; start < refs.size(); start += kPredictChunk) {
    const std::size_t count = std::min(kPredictChunk, refs.size() - start);
    const auto chunk = std::span<const WindowRef>(refs).subspan(start, count);
    const Batch batch = gather(dtm.config, data, chunk, true);
    const auto preds = rollout(dtm, batch, nullptr);
    for (std::size_t i = 0; i < count; ++i) {
      out.vectors.middleCols(static_cast<Eigen::Index>((start + i) * hz), static_cast<Eigen::Index>(hz)) =
          dtc_inputs(preds, batch, i);
      const Matrix p = predicted_states(preds, i);
      const Matrix r = realized_states(batch, i);
      out.rmse.push_back(baseline_score(BaselineKind::rmse, p, r));
      out.euclid.push_back(baseline_score(BaselineKind::euclid, p, r));
    }
  }
  return out;
}

std::vector<SequenceMatrix> scaled_sequences(const TwinCheckpoint& twin, const std::vector<LabeledTrajectory>& train) {
  std::vector<SequenceMatrix> data;
  for (const auto& t : train) {
    require(t.columns == twin.columns, "trajectory schema does not match the checkpoint");
    data.push_back(to_sequence_matrix(scale_trajectory(twin.scaler, t)));
  }
  return data;
}

}  // namespace

TwinCheckpoint train_twin(const std::string& vessel, const std::vector<LabeledTrajectory>& train,
                          const TwinConfig& config) {
  require(!train.empty(), "train_twin: no training trajectories");
  const ColumnSchema schema = column_schema(vessel);
  std::vector<std::vector<double>> rows;
  for (const auto& t : train) {
    require(t.columns == schema.columns, "train_twin: trajectory schema does not match preset " + vessel);
    require(!t.disturbance_interval, "train_twin: training trajectories must be disturbance-free");
    for (auto& r : feature_rows(t)) rows.push_back(std::move(r));
  }
  TwinCheckpoint twin;
  twin.vessel = vessel;
  twin.columns = schema.columns;
  twin.config = config;
  twin.config.dtm.n_state = schema.n_state;
  twin.config.dtm.n_exogenous = schema.n_exogenous();
  twin.scaler = fit_scaler(rows);

  const std::vector<SequenceMatrix> data = scaled_sequences(twin, train);
  twin.dtm = train_dtm(data, twin.config.dtm, twin.config.dtm_train, &twin.dtm_log);
  const ThresholdData td =
      threshold_data(twin.dtm, data, config.threshold_stride, static_cast<Eigen::Index>(schema.n_features()));
  twin.dtc = train_dtc(td.vectors, twin.config.dtc_train, &twin.dtc_loss);
  twin.threshold = compute_threshold(step_errors(twin.dtc, td.vectors));
  twin.rmse_threshold = compute_threshold(td.rmse);
  twin.euclid_threshold = compute_threshold(td.euclid);
  return twin;
}

std::vector<double> training_errors(const TwinCheckpoint& twin, const std::vector<LabeledTrajectory>& train) {
  const std::vector<SequenceMatrix> data = scaled_sequences(twin, train);
  const ThresholdData td = threshold_data(twin.dtm, data, twin.config.threshold_stride,
                                          static_cast<Eigen::Index>(twin.columns.size() - 1));
  return step_errors(twin.dtc, td.vectors);
}

std::vector<std::vector<Verdict>> detect_variants(const TwinCheckpoint& twin, const LabeledTrajectory& traj,
                                                  std::span<const Variant> variants) {
  if (!traj.vessel.empty() && traj.vessel != twin.vessel) {
    throw std::invalid_argument("detect: trajectory vessel '" + traj.vessel + "' does not match checkpoint '" +
                                twin.vessel + "'");
  }
  require(traj.columns == twin.columns, "detect: trajectory columns do not match the checkpoint schema");
  require(traj.rows.size() >= 2, "detect: trajectory too short");
  const auto& cfg = twin.dtm.config;
  const double period = traj.rows[1][0] - traj.rows[0][0];
  const std::vector<SequenceMatrix> data = {to_sequence_matrix(scale_trajectory(twin.scaler, traj))};
  const auto refs = window_refs(data, cfg.window, cfg.horizon, 1);
  std::vector<std::vector<Verdict>> out(variants.size());
  for (auto& o : out) o.reserve(refs.size());
  for (std::size_t start = 0; start < refs.size(); start += kPredictChunk) {
    const std::size_t count = std::min(kPredictChunk, refs.size() - start);
    const auto chunk = std::span<const WindowRef>(refs).subspan(start, count);
    const Batch batch = gather(cfg, data, chunk, true);
    const auto preds = rollout(twin.dtm, batch, nullptr);
    for (std::size_t i = 0; i < count; ++i) {
      const double anchor_time = traj.rows[chunk[i].anchor][0];
      const Label label = label_for(anchor_time, traj.disturbance_interval,
                                    static_cast<double>(cfg.horizon) * period, twin.config.label_mode);
      for (std::size_t m = 0; m < variants.size(); ++m) {
        Verdict v;
        v.anchor_time = anchor_time;
        v.label = label;
        if (variants[m] == Variant::oddit) {
          v.step_errors = step_errors(twin.dtc, dtc_inputs(preds, batch, i));
          v.score = aggregate(v.step_errors, twin.config.aggregation);
          v.decision = classify(v.score, twin.threshold);
        } else {
          const bool rmse = variants[m] == Variant::dtm_r;
          v.score = baseline_score(rmse ? BaselineKind::rmse : BaselineKind::euclid, predicted_states(preds, i),
                                   realized_states(batch, i));
          v.decision = classify(v.score, rmse ? twin.rmse_threshold : twin.euclid_threshold);
        }
        out[m].push_back(std::move(v));
      }
    }
  }
  return out;
}

std::vector<Verdict> detect(const TwinCheckpoint& twin, const LabeledTrajectory& traj, Variant variant) {
  return detect_variants(twin, traj, std::span<const Variant>(&variant, 1)).front();
}

}  // namespace vtwin
