#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vtwin/dataset.hpp"
#include "vtwin/neural.hpp"

namespace vtwin {

struct DtmConfig {
  std::size_t window = 60;
  std::size_t horizon = 60;
  std::size_t hidden = 256;
  std::size_t layers = 2;
  std::size_t n_state = 0;
  std::size_t n_exogenous = 0;  // control + environment channels
  bool operator==(const DtmConfig&) const = default;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 128;
  std::size_t pretrain_epochs = 0;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  double clip_norm = 5.0;
  std::size_t window_stride = 1;  // anchors used per trajectory: every stride-th
  bool operator==(const TrainConfig&) const = default;
};

/// Recurrent encoder over the window followed by an autoregressive rollout.
/// Each step predicts the next scaled state as previous state + head(hidden).
struct DtmModel {
  DtmConfig config;
  std::vector<nn::RecurrentLayer> rnn;
  nn::DenseLayer head;
};

DtmModel init_dtm(const DtmConfig& config, std::uint64_t seed);

/// Scaled trajectory stored feature-major: one column per time step.
using SequenceMatrix = nn::Matrix;

SequenceMatrix to_sequence_matrix(const LabeledTrajectory& scaled);

struct WindowRef {
  std::size_t trajectory = 0;
  std::size_t anchor = 0;  // column of the last window row
};

std::vector<WindowRef> window_refs(const std::vector<SequenceMatrix>& data, std::size_t window,
                                   std::size_t horizon, std::size_t stride = 1);

/// Batched H-step prediction; element k of the result is n_state x batch.
std::vector<nn::Matrix> predict_batch(const DtmModel& dtm, const std::vector<SequenceMatrix>& data,
                                      std::span<const WindowRef> refs);

/// window: W rows of state + exogenous; future_controls: H rows of exogenous.
/// Returns H scaled states.
std::vector<std::vector<double>> predict_horizon(const DtmModel& dtm,
                                                 const std::vector<std::vector<double>>& window,
                                                 const std::vector<std::vector<double>>& future_controls);

/// Mean loss over the given windows: one-step-ahead along the window when
/// `pretrain`, otherwise the full rollout.  When `grads` is set it receives
/// dL/dparam flattened in dtm_params order, and `relu_margin` the smallest
/// |pre-activation| seen in the recurrent stack.
double dtm_loss(const DtmModel& dtm, const std::vector<SequenceMatrix>& data, std::span<const WindowRef> refs,
                bool pretrain, std::vector<double>* grads = nullptr, double* relu_margin = nullptr);

/// Recurrent layers first, then the head.
nn::ParamSpans dtm_params(DtmModel& dtm);

struct TrainingLog {
  std::vector<double> pretrain_loss;
  std::vector<double> train_loss;
};

/// Phase 1 trains one-step-ahead prediction along the window; phase 2 trains
/// the full H-step rollout.  Throws when no window fits.
DtmModel train_dtm(const std::vector<SequenceMatrix>& data, const DtmConfig& config,
                   const TrainConfig& train, TrainingLog* log = nullptr);

/// Mirrored dense autoencoder with a sigmoid output.
struct DtcModel {
  std::vector<nn::DenseLayer> layers;
};

inline const std::vector<std::size_t>& dtc_hidden_dims() {
  static const std::vector<std::size_t> dims = {64, 32, 16, 8, 16, 32, 64};
  return dims;
}

DtcModel init_dtc(std::size_t input_dim, std::uint64_t seed);
nn::Matrix dtc_reconstruct(const DtcModel& dtc, const nn::Matrix& x);

/// x: input_dim x N vectors to reconstruct.
DtcModel train_dtc(const nn::Matrix& x, const TrainConfig& train, std::vector<double>* loss_log = nullptr);

/// Euclidean norm of the residual.
double reconstruction_error(std::span<const double> state, std::span<const double> reconstruction);

struct OodThreshold {
  double mean = 0.0;
  double stddev = 0.0;  // population
  double value = 0.0;   // mean + 3 * stddev
  bool operator==(const OodThreshold&) const = default;
};

/// Throws std::invalid_argument on an empty list.
OodThreshold compute_threshold(std::span<const double> errors);

/// IND iff error <= threshold.value.
Label classify(double error, const OodThreshold& threshold);

enum class BaselineKind { rmse, euclid };
double baseline_score(BaselineKind kind, const nn::Matrix& predicted, const nn::Matrix& realized);

enum class Variant { oddit, dtm_r, dtm_e };
std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

enum class Aggregation { max, mean };
std::string to_string(Aggregation a);
Aggregation parse_aggregation(const std::string& s);

struct TwinConfig {
  DtmConfig dtm;  // n_state / n_exogenous filled from the schema
  TrainConfig dtm_train;
  TrainConfig dtc_train;
  Aggregation aggregation = Aggregation::max;
  LabelMode label_mode = LabelMode::predictive;
  std::size_t threshold_stride = 1;  // anchors used for the DTC data and thresholds
};

inline constexpr int kCheckpointVersion = 1;

struct TwinCheckpoint {
  int version = kCheckpointVersion;
  std::string vessel;
  std::vector<std::string> columns;
  ScalerParams scaler;
  DtmModel dtm;
  DtcModel dtc;
  OodThreshold threshold;
  OodThreshold rmse_threshold;
  OodThreshold euclid_threshold;
  TwinConfig config;
  std::vector<double> dtc_loss;
  TrainingLog dtm_log;
};

/// Fits the scaler, trains DTM then DTC, and derives all thresholds.
TwinCheckpoint train_twin(const std::string& vessel, const std::vector<LabeledTrajectory>& train,
                          const TwinConfig& config);

/// Per-vector reconstruction errors the threshold was fitted on, recomputed
/// from the training trajectories.
std::vector<double> training_errors(const TwinCheckpoint& twin, const std::vector<LabeledTrajectory>& train);

struct Verdict {
  double anchor_time = 0.0;
  std::vector<double> step_errors;  // per horizon step, oddit only
  double score = 0.0;
  Label decision = Label::ind;
  Label label = Label::ind;
};

std::vector<Verdict> detect(const TwinCheckpoint& twin, const LabeledTrajectory& traj,
                            Variant variant = Variant::oddit);
/// Same as detect for several variants, sharing one DTM rollout per anchor.
std::vector<std::vector<Verdict>> detect_variants(const TwinCheckpoint& twin, const LabeledTrajectory& traj,
                                                  std::span<const Variant> variants);

std::string checkpoint_to_json(const TwinCheckpoint& twin);
TwinCheckpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const std::filesystem::path& path, const TwinCheckpoint& twin);
TwinCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace vtwin
