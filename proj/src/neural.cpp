#include "vtwin/neural.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vtwin::nn {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

// Applies the activation to `pre` and stores the elementwise derivative in `slope`.
Matrix activate(Activation a, const Matrix& pre, Mode mode, Rng* rng, Matrix& slope) {
  switch (a) {
    case Activation::identity:
      slope.setOnes(pre.rows(), pre.cols());
      return pre;
    case Activation::relu:
      slope = (pre.array() > 0.0).cast<double>().matrix();
      return pre.cwiseMax(0.0);
    case Activation::rrelu: {
      slope.resize(pre.rows(), pre.cols());
      if (mode == Mode::training) {
        if (!rng) throw std::invalid_argument("rrelu: training mode requires an rng");
        std::uniform_real_distribution<double> slopes(kRreluLower, kRreluUpper);
        // One draw per element per pass, in column-major order.
        for (Eigen::Index i = 0; i < pre.size(); ++i) {
          const double s = slopes(*rng);
          slope.data()[i] = pre.data()[i] >= 0.0 ? 1.0 : s;
        }
      } else {
        slope = (pre.array() >= 0.0).select(1.0, Matrix::Constant(pre.rows(), pre.cols(), kRreluInferenceSlope));
      }
      return pre.cwiseProduct(slope);
    }
    case Activation::sigmoid: {
      Matrix out = (1.0 + (-pre.array()).exp()).inverse().matrix();
      slope = out.array() * (1.0 - out.array());
      return out;
    }
  }
  throw std::logic_error("unknown activation");
}

std::span<double> span_of(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> span_of(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::rrelu: return "rrelu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "unknown";
}

Activation parse_activation(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "rrelu") return Activation::rrelu;
  if (s == "sigmoid") return Activation::sigmoid;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

double rrelu(double x, Mode mode, Rng* rng) {
  if (x >= 0.0) return x;
  if (mode == Mode::inference) return kRreluInferenceSlope * x;
  if (!rng) throw std::invalid_argument("rrelu: training mode requires an rng");
  return std::uniform_real_distribution<double>(kRreluLower, kRreluUpper)(*rng) * x;
}

Matrix dense_forward(const DenseLayer& layer, const Matrix& x, Mode mode, Rng* rng, DenseCache* cache) {
  require(x.rows() == layer.weight.cols(), "dense_forward: input rows do not match layer fan-in");
  require(layer.bias.size() == layer.weight.rows(), "dense_forward: bias size mismatch");
  Matrix pre = layer.weight * x;
  pre.colwise() += layer.bias;
  Matrix slope;
  Matrix out = activate(layer.activation, pre, mode, rng, slope);
  if (cache) {
    cache->input = x;
    cache->pre = std::move(pre);
    cache->slope = std::move(slope);
  }
  return out;
}

DenseGrads zero_grads(const DenseLayer& layer) {
  return {Matrix::Zero(layer.weight.rows(), layer.weight.cols()), Vector::Zero(layer.bias.size())};
}

Matrix dense_backward(const DenseLayer& layer, const DenseCache& cache, const Matrix& upstream,
                      DenseGrads& grads) {
  require(upstream.rows() == layer.weight.rows() && upstream.cols() == cache.input.cols(),
          "dense_backward: upstream gradient shape mismatch");
  const Matrix dz = upstream.cwiseProduct(cache.slope);
  grads.weight.noalias() += dz * cache.input.transpose();
  grads.bias.noalias() += dz.rowwise().sum();
  return layer.weight.transpose() * dz;
}

RecurrentGrads zero_grads(const RecurrentLayer& layer) {
  return {Matrix::Zero(layer.w_in.rows(), layer.w_in.cols()),
          Matrix::Zero(layer.w_rec.rows(), layer.w_rec.cols()), Vector::Zero(layer.bias.size())};
}

RnnStep rnn_step(const std::vector<RecurrentLayer>& layers, const Matrix& x,
                 const std::vector<Matrix>& h_prev) {
  require(h_prev.size() == layers.size(), "rnn_step: one hidden state per layer required");
  RnnStep step;
  step.pre.resize(layers.size());
  step.hidden.resize(layers.size());
  const Matrix* in = &x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    require(in->rows() == layer.w_in.cols(), "rnn_step: input width does not match layer");
    require(h_prev[l].rows() == layer.w_rec.cols() && h_prev[l].cols() == in->cols(),
            "rnn_step: hidden state shape mismatch");
    Matrix& z = step.pre[l];
    z.noalias() = layer.w_in * *in;
    z.noalias() += layer.w_rec * h_prev[l];
    z.colwise() += layer.bias;
    step.hidden[l] = z.cwiseMax(0.0);
    in = &step.hidden[l];
  }
  return step;
}

Matrix rnn_step_backward(const std::vector<RecurrentLayer>& layers, const Matrix& x,
                         const std::vector<Matrix>& h_prev, const RnnStep& step,
                         std::vector<Matrix>& dh, std::vector<RecurrentGrads>& grads) {
  Matrix dx;
  for (std::size_t li = layers.size(); li-- > 0;) {
    const auto& layer = layers[li];
    const Matrix dz = dh[li].cwiseProduct((step.pre[li].array() > 0.0).cast<double>().matrix());
    const Matrix& in = li == 0 ? x : step.hidden[li - 1];
    grads[li].w_in.noalias() += dz * in.transpose();
    grads[li].w_rec.noalias() += dz * h_prev[li].transpose();
    grads[li].bias.noalias() += dz.rowwise().sum();
    if (li == 0) dx.noalias() = layer.w_in.transpose() * dz;
    else dh[li - 1].noalias() += layer.w_in.transpose() * dz;
    dh[li].noalias() = layer.w_rec.transpose() * dz;
  }
  return dx;
}

std::vector<Matrix> rnn_forward(const std::vector<RecurrentLayer>& layers,
                                const std::vector<Matrix>& sequence,
                                const std::vector<Matrix>& initial_hidden, RnnTrace* trace) {
  require(!sequence.empty(), "rnn_forward: empty sequence");
  std::vector<Matrix> outputs;
  outputs.reserve(sequence.size());
  std::vector<Matrix> h = initial_hidden;
  if (trace) *trace = RnnTrace{};
  for (const auto& x : sequence) {
    RnnStep s = rnn_step(layers, x, h);
    outputs.push_back(s.hidden.back());
    if (trace) {
      trace->inputs.push_back(x);
      trace->h_prev.push_back(h);
    }
    h = s.hidden;
    if (trace) trace->steps.push_back(std::move(s));
  }
  return outputs;
}

std::vector<Matrix> rnn_backward(const std::vector<RecurrentLayer>& layers, const RnnTrace& trace,
                                 const std::vector<Matrix>& d_outputs,
                                 std::vector<RecurrentGrads>& grads,
                                 std::vector<Matrix>* d_initial_hidden) {
  const std::size_t steps = trace.steps.size();
  require(d_outputs.size() == steps, "rnn_backward: one output gradient per step required");
  std::vector<Matrix> dh(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    dh[l] = Matrix::Zero(layers[l].w_rec.rows(), trace.inputs.front().cols());
  }
  std::vector<Matrix> dx(steps);
  for (std::size_t t = steps; t-- > 0;) {
    dh.back() += d_outputs[t];
    dx[t] = rnn_step_backward(layers, trace.inputs[t], trace.h_prev[t], trace.steps[t], dh, grads);
  }
  if (d_initial_hidden) *d_initial_hidden = dh;
  return dx;
}

Loss mse_loss(const Matrix& pred, const Matrix& target) {
  require(pred.rows() == target.rows() && pred.cols() == target.cols(), "mse_loss: shape mismatch");
  require(pred.size() > 0, "mse_loss: empty input");
  const double n = static_cast<double>(pred.size());
  Loss loss;
  const Matrix diff = pred - target;
  loss.value = diff.squaredNorm() / n;
  loss.grad = (2.0 / n) * diff;
  return loss;
}

void adam_step(AdamState& state, const ParamSpans& params, const ParamSpans& grads) {
  require(params.size() == grads.size(), "adam_step: params/grads count mismatch");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), 0.0);
      state.v.emplace_back(p.size(), 0.0);
    }
  }
  require(state.m.size() == params.size(), "adam_step: state does not match parameters");
  ++state.step;
  const auto& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    require(params[k].size() == grads[k].size() && state.m[k].size() == params[k].size(),
            "adam_step: shape mismatch");
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const double g = grads[k][i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      params[k][i] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
    }
  }
}

double clip_global_norm(const ParamSpans& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads) {
    for (double x : g) sq += x * x;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (const auto& g : grads) {
      for (double& x : g) x *= scale;
    }
  }
  return norm;
}

namespace {

void fill_uniform(double* data, Eigen::Index n, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < n; ++i) data[i] = dist(rng);
}

}  // namespace

DenseLayer init_dense(std::size_t in, std::size_t out, Activation activation, Rng& rng) {
  DenseLayer layer;
  const auto r = static_cast<Eigen::Index>(out);
  const auto c = static_cast<Eigen::Index>(in);
  layer.weight.resize(r, c);
  layer.bias.resize(r);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  fill_uniform(layer.weight.data(), layer.weight.size(), bound, rng);
  fill_uniform(layer.bias.data(), layer.bias.size(), bound, rng);
  layer.activation = activation;
  return layer;
}

RecurrentLayer init_recurrent(std::size_t in, std::size_t hidden, Rng& rng) {
  RecurrentLayer layer;
  const auto h = static_cast<Eigen::Index>(hidden);
  layer.w_in.resize(h, static_cast<Eigen::Index>(in));
  layer.w_rec.resize(h, h);
  layer.bias.resize(h);
  // Both matrices feed the same pre-activation, so the fan-in is the hidden size.
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  fill_uniform(layer.w_in.data(), layer.w_in.size(), bound, rng);
  fill_uniform(layer.w_rec.data(), layer.w_rec.size(), bound, rng);
  fill_uniform(layer.bias.data(), layer.bias.size(), bound, rng);
  return layer;
}

void append_params(DenseLayer& layer, ParamSpans& out) {
  out.push_back(span_of(layer.weight));
  out.push_back(span_of(layer.bias));
}

void append_params(RecurrentLayer& layer, ParamSpans& out) {
  out.push_back(span_of(layer.w_in));
  out.push_back(span_of(layer.w_rec));
  out.push_back(span_of(layer.bias));
}

void append_params(DenseGrads& grads, ParamSpans& out) {
  out.push_back(span_of(grads.weight));
  out.push_back(span_of(grads.bias));
}

void append_params(RecurrentGrads& grads, ParamSpans& out) {
  out.push_back(span_of(grads.w_in));
  out.push_back(span_of(grads.w_rec));
  out.push_back(span_of(grads.bias));
}

std::vector<double> finite_difference_gradient(const std::function<double()>& loss,
                                               std::span<double> param, double step) {
  std::vector<double> g(param.size());
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double saved = param[i];
    param[i] = saved + step;
    const double up = loss();
    param[i] = saved - step;
    const double down = loss();
    param[i] = saved;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

double relative_error(double a, double b, double floor) {
  const double denom = std::max({std::abs(a), std::abs(b), floor});
  return a == b ? 0.0 : std::abs(a - b) / denom;
}

}  // namespace vtwin::nn
