#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vtwin/random.hpp"

namespace vtwin::nn {

// Column-major Eigen matrices; a batch is stored one sample per column.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { identity, relu, rrelu, sigmoid };
enum class Mode { training, inference };

std::string to_string(Activation a);
Activation parse_activation(const std::string& s);

// Randomized leaky slope range for negative inputs; inference uses the midpoint.
inline constexpr double kRreluLower = 1.0 / 8.0;
inline constexpr double kRreluUpper = 1.0 / 3.0;
inline constexpr double kRreluInferenceSlope = 0.5 * (kRreluLower + kRreluUpper);

/// Scalar RReLU.  `rng` is only consulted in training mode for negative x.
double rrelu(double x, Mode mode, Rng* rng = nullptr);

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
  Activation activation = Activation::identity;
};

struct DenseCache {
  Matrix input;
  Matrix pre;
  Matrix slope;  // d(output)/d(pre), filled in forward
};

struct DenseGrads {
  Matrix weight;
  Vector bias;
};

/// x is in x batch.  Throws std::invalid_argument on shape mismatch.
Matrix dense_forward(const DenseLayer& layer, const Matrix& x, Mode mode = Mode::inference,
                     Rng* rng = nullptr, DenseCache* cache = nullptr);

/// Accumulates parameter gradients into `grads` and returns dL/dx.
Matrix dense_backward(const DenseLayer& layer, const DenseCache& cache, const Matrix& upstream,
                      DenseGrads& grads);

DenseGrads zero_grads(const DenseLayer& layer);

/// h_t = relu(w_in x_t + w_rec h_{t-1} + bias)
struct RecurrentLayer {
  Matrix w_in;   // hidden x in
  Matrix w_rec;  // hidden x hidden
  Vector bias;
};

struct RecurrentGrads {
  Matrix w_in;
  Matrix w_rec;
  Vector bias;
};

RecurrentGrads zero_grads(const RecurrentLayer& layer);

/// One time step through a stack of recurrent layers.
struct RnnStep {
  std::vector<Matrix> pre;     // per layer
  std::vector<Matrix> hidden;  // per layer, post-activation
};

RnnStep rnn_step(const std::vector<RecurrentLayer>& layers, const Matrix& x,
                 const std::vector<Matrix>& h_prev);

/// Backward through one step.  On entry dh[l] holds dL/dh_l(t) from outside
/// the step (output head, next time step); on exit it holds dL/dh_l(t-1).
/// Returns dL/dx_t.
Matrix rnn_step_backward(const std::vector<RecurrentLayer>& layers, const Matrix& x,
                         const std::vector<Matrix>& h_prev, const RnnStep& step,
                         std::vector<Matrix>& dh, std::vector<RecurrentGrads>& grads);

struct RnnTrace {
  std::vector<Matrix> inputs;
  std::vector<std::vector<Matrix>> h_prev;  // hidden state entering each step
  std::vector<RnnStep> steps;
};

/// Runs the stack over the sequence.  Returns the top-layer outputs per step.
std::vector<Matrix> rnn_forward(const std::vector<RecurrentLayer>& layers,
                                const std::vector<Matrix>& sequence,
                                const std::vector<Matrix>& initial_hidden, RnnTrace* trace = nullptr);

/// Full BPTT given dL/d(top output) per step.  Returns dL/dx per step and
/// accumulates parameter gradients.  `d_initial_hidden`, when given, receives
/// dL/dh_0 per layer.
std::vector<Matrix> rnn_backward(const std::vector<RecurrentLayer>& layers, const RnnTrace& trace,
                                 const std::vector<Matrix>& d_outputs,
                                 std::vector<RecurrentGrads>& grads,
                                 std::vector<Matrix>* d_initial_hidden = nullptr);

struct Loss {
  double value = 0.0;
  Matrix grad;
};

/// Mean over all elements; grad = 2 (pred - target) / N.
Loss mse_loss(const Matrix& pred, const Matrix& target);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::int64_t step = 0;
};

using ParamSpans = std::vector<std::span<double>>;

/// Bias-corrected Adam update, in place.
void adam_step(AdamState& state, const ParamSpans& params, const ParamSpans& grads);

/// Scales grads so their global L2 norm is at most max_norm; returns the norm before scaling.
double clip_global_norm(const ParamSpans& grads, double max_norm);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
DenseLayer init_dense(std::size_t in, std::size_t out, Activation activation, Rng& rng);
RecurrentLayer init_recurrent(std::size_t in, std::size_t hidden, Rng& rng);

void append_params(DenseLayer& layer, ParamSpans& out);
void append_params(RecurrentLayer& layer, ParamSpans& out);
void append_params(DenseGrads& grads, ParamSpans& out);
void append_params(RecurrentGrads& grads, ParamSpans& out);

/// Central finite differences of `loss` with respect to every entry of `param`.
std::vector<double> finite_difference_gradient(const std::function<double()>& loss,
                                               std::span<double> param, double step = 1e-5);

/// |a - b| / max(|a|, |b|, floor); 0 when both are zero.
double relative_error(double a, double b, double floor = 1e-8);

}  // namespace vtwin::nn
