#include "newsflow/neural.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

namespace newsflow::neural {

namespace {

Matrix sigmoid(const Matrix& a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

std::string_view kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Lstm: return "lstm";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::Dense: return "dense";
  }
  return "?";
}

LayerKind kind_from_name(const std::string& name) {
  if (name == "lstm") return LayerKind::Lstm;
  if (name == "dropout") return LayerKind::Dropout;
  if (name == "dense") return LayerKind::Dense;
  throw Error("unknown layer kind '" + name + "'");
}

// Stacks batch windows (steps x features each) into one features x batch
// matrix per step.
std::vector<Matrix> to_steps(std::span<const Matrix> windows, std::size_t input_width) {
  const Eigen::Index steps = windows.front().rows();
  for (const auto& w : windows) {
    if (w.rows() != steps || w.cols() != static_cast<Eigen::Index>(input_width)) {
      throw ShapeError("window shape " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                       " does not match " + std::to_string(steps) + "x" + std::to_string(input_width));
    }
  }
  if (steps == 0) throw ShapeError("windows must have at least one time step");
  std::vector<Matrix> seq(static_cast<std::size_t>(steps),
                          Matrix(static_cast<Eigen::Index>(input_width), static_cast<Eigen::Index>(windows.size())));
  for (std::size_t b = 0; b < windows.size(); ++b) {
    for (Eigen::Index t = 0; t < steps; ++t) {
      seq[static_cast<std::size_t>(t)].col(static_cast<Eigen::Index>(b)) = windows[b].row(t).transpose();
    }
  }
  return seq;
}

Matrix sample_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - rate);
  Matrix mask(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) mask(i, j) = unit(rng) < rate ? 0.0 : keep_scale;
  }
  return mask;
}

// BPTT through one LSTM layer. `dh_above[t]` is the gradient arriving at h_t
// from the layer above (may be empty for steps that feed nothing upward).
std::vector<Matrix> lstm_backward(const LstmLayerParams& params, const LayerTrace& trace,
                                  const std::vector<Matrix>& dh_above, LstmLayerParams& grads) {
  const auto hidden = static_cast<Eigen::Index>(params.hidden());
  const auto input = static_cast<Eigen::Index>(params.input());
  const std::size_t steps = trace.states.size();
  const Eigen::Index batch = trace.states.front().h.cols();

  Matrix dh_next = Matrix::Zero(hidden, batch);
  Matrix dc_next = Matrix::Zero(hidden, batch);
  const Matrix zeros = Matrix::Zero(hidden, batch);
  std::vector<Matrix> dx(steps);
  Matrix z(hidden + input, batch);

  for (std::size_t k = steps; k-- > 0;) {
    const LstmState& s = trace.states[k];
    const Matrix& h_prev = k > 0 ? trace.states[k - 1].h : zeros;
    const Matrix& c_prev = k > 0 ? trace.states[k - 1].c : zeros;

    Matrix dh = dh_next;
    if (dh_above[k].size() != 0) dh += dh_above[k];

    const auto i = s.input_gate.array();
    const auto f = s.forget_gate.array();
    const auto o = s.output_gate.array();
    const auto g = s.candidate.array();
    const Eigen::ArrayXXd tanh_c = s.c.array().tanh();

    const Eigen::ArrayXXd dc = dc_next.array() + dh.array() * o * (1.0 - tanh_c.square());
    const Matrix da_o = (dh.array() * tanh_c * o * (1.0 - o)).matrix();
    const Matrix da_i = (dc * g * i * (1.0 - i)).matrix();
    const Matrix da_g = (dc * i * (1.0 - g.square())).matrix();
    const Matrix da_f = (dc * c_prev.array() * f * (1.0 - f)).matrix();

    z.topRows(hidden) = h_prev;
    z.bottomRows(input) = trace.inputs[k];
    grads.w_input.noalias() += da_i * z.transpose();
    grads.w_candidate.noalias() += da_g * z.transpose();
    grads.w_forget.noalias() += da_f * z.transpose();
    grads.w_output.noalias() += da_o * z.transpose();
    grads.b_input += da_i.rowwise().sum();
    grads.b_candidate += da_g.rowwise().sum();
    grads.b_forget += da_f.rowwise().sum();
    grads.b_output += da_o.rowwise().sum();

    Matrix dz = params.w_input.transpose() * da_i;
    dz.noalias() += params.w_candidate.transpose() * da_g;
    dz.noalias() += params.w_forget.transpose() * da_f;
    dz.noalias() += params.w_output.transpose() * da_o;

    dh_next = dz.topRows(hidden);
    dx[k] = dz.bottomRows(input);
    dc_next = (dc * f).matrix();
  }
  return dx;
}

nlohmann::json tensor_json(const ConstTensorRef& t) {
  return {{"name", t.name}, {"rows", t.rows}, {"cols", t.cols},
          {"data", std::vector<double>(t.data.begin(), t.data.end())}};
}

}  // namespace

LstmLayerParams LstmLayerParams::zeros(std::size_t hidden, std::size_t input) {
  const auto h = static_cast<Eigen::Index>(hidden);
  const auto cols = static_cast<Eigen::Index>(hidden + input);
  return LstmLayerParams{Matrix::Zero(h, cols), Matrix::Zero(h, cols), Matrix::Zero(h, cols), Matrix::Zero(h, cols),
                         Vector::Zero(h),       Vector::Zero(h),       Vector::Zero(h),       Vector::Zero(h)};
}

LstmState LstmState::zeros(std::size_t hidden, std::size_t batch) {
  const Matrix z = Matrix::Zero(static_cast<Eigen::Index>(hidden), static_cast<Eigen::Index>(batch));
  return LstmState{z, z, z, z, z, z};
}

LstmState lstm_cell_forward(const LstmLayerParams& params, const Matrix& x, const LstmState& prev) {
  const auto hidden = static_cast<Eigen::Index>(params.hidden());
  const auto input = static_cast<Eigen::Index>(params.input());
  if (x.rows() != input || prev.h.rows() != hidden || prev.c.rows() != hidden || prev.h.cols() != x.cols() ||
      prev.c.cols() != x.cols()) {
    throw ShapeError("LSTM cell expects input of " + std::to_string(input) + " rows and state of " +
                     std::to_string(hidden) + " rows with matching batch");
  }
  Matrix z(hidden + input, x.cols());
  z.topRows(hidden) = prev.h;
  z.bottomRows(input) = x;

  LstmState next;
  next.input_gate = sigmoid((params.w_input * z).colwise() + params.b_input);
  next.candidate = ((params.w_candidate * z).colwise() + params.b_candidate).array().tanh().matrix();
  next.forget_gate = sigmoid((params.w_forget * z).colwise() + params.b_forget);
  next.c = (next.forget_gate.array() * prev.c.array() + next.input_gate.array() * next.candidate.array()).matrix();
  next.output_gate = sigmoid((params.w_output * z).colwise() + params.b_output);
  next.h = (next.output_gate.array() * next.c.array().tanh()).matrix();

  assert(next.input_gate.minCoeff() >= 0.0 && next.input_gate.maxCoeff() <= 1.0);
  assert(next.forget_gate.minCoeff() >= 0.0 && next.forget_gate.maxCoeff() <= 1.0);
  assert(next.output_gate.minCoeff() >= 0.0 && next.output_gate.maxCoeff() <= 1.0);
  assert(next.candidate.cwiseAbs().maxCoeff() <= 1.0);

  if (!next.c.allFinite() || !next.h.allFinite()) {
    throw NumericalError("LSTM cell produced a non-finite state");
  }
  return next;
}

NetworkConfig NetworkConfig::default_stack(std::size_t hidden, double dropout, std::size_t input_width) {
  NetworkConfig config;
  config.input_width = input_width;
  config.layers = {LayerSpec::lstm(hidden),  LayerSpec::dropout(dropout), LayerSpec::lstm(hidden),
                   LayerSpec::lstm(hidden),  LayerSpec::dropout(dropout), LayerSpec::dense(1)};
  return config;
}

std::size_t NetworkConfig::lstm_count() const {
  return static_cast<std::size_t>(
      std::count_if(layers.begin(), layers.end(), [](const LayerSpec& l) { return l.kind == LayerKind::Lstm; }));
}

void NetworkConfig::validate() const {
  if (input_width == 0) throw ShapeError("input width must be positive");
  if (lstm_count() == 0) throw ShapeError("network needs at least one LSTM layer");
  if (layers.empty() || layers.back().kind != LayerKind::Dense) throw ShapeError("last layer must be dense");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    switch (l.kind) {
      case LayerKind::Lstm:
        if (l.units == 0) throw ShapeError("LSTM layer " + std::to_string(k) + " has zero units");
        break;
      case LayerKind::Dropout:
        if (!(l.rate >= 0.0 && l.rate < 1.0)) throw ShapeError("dropout rate must lie in [0, 1)");
        break;
      case LayerKind::Dense:
        if (k + 1 != layers.size()) throw ShapeError("dense layer must be last");
        if (l.units != 1) throw ShapeError("dense head must have exactly one output");
        break;
    }
  }
}

NetworkParams NetworkParams::zeros(const NetworkConfig& config) {
  config.validate();
  NetworkParams p;
  std::size_t width = config.input_width;
  for (const auto& l : config.layers) {
    if (l.kind != LayerKind::Lstm) continue;
    p.lstm.push_back(LstmLayerParams::zeros(l.units, width));
    width = l.units;
  }
  p.dense_w = Matrix::Zero(1, static_cast<Eigen::Index>(width));
  p.dense_b = Vector::Zero(1);
  return p;
}

NetworkParams NetworkParams::zeros_like(const NetworkParams& other) {
  NetworkParams p;
  for (const auto& l : other.lstm) p.lstm.push_back(LstmLayerParams::zeros(l.hidden(), l.input()));
  p.dense_w = Matrix::Zero(other.dense_w.rows(), other.dense_w.cols());
  p.dense_b = Vector::Zero(other.dense_b.size());
  return p;
}

std::vector<TensorRef> NetworkParams::tensors() {
  std::vector<TensorRef> out;
  auto add = [&](std::string name, auto& m) {
    out.push_back(TensorRef{std::move(name), std::span<double>(m.data(), static_cast<std::size_t>(m.size())),
                            m.rows(), m.cols()});
  };
  for (std::size_t k = 0; k < lstm.size(); ++k) {
    const std::string pre = "lstm" + std::to_string(k) + ".";
    auto& l = lstm[k];
    add(pre + "w_input", l.w_input);
    add(pre + "w_candidate", l.w_candidate);
    add(pre + "w_forget", l.w_forget);
    add(pre + "w_output", l.w_output);
    add(pre + "b_input", l.b_input);
    add(pre + "b_candidate", l.b_candidate);
    add(pre + "b_forget", l.b_forget);
    add(pre + "b_output", l.b_output);
  }
  add("dense.w", dense_w);
  add("dense.b", dense_b);
  return out;
}

std::vector<ConstTensorRef> NetworkParams::tensors() const {
  std::vector<ConstTensorRef> out;
  for (auto& t : const_cast<NetworkParams*>(this)->tensors()) {
    out.push_back(ConstTensorRef{std::move(t.name), t.data, t.rows, t.cols});
  }
  return out;
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.data.size();
  return n;
}

NetworkParams initialize(const NetworkConfig& config, std::uint64_t seed) {
  NetworkParams p = NetworkParams::zeros(config);
  std::mt19937_64 rng(seed);
  for (auto& layer : p.lstm) {
    const double k = 1.0 / std::sqrt(static_cast<double>(layer.w_input.cols()));
    std::uniform_real_distribution<double> dist(-k, k);
    for (Matrix* w : {&layer.w_input, &layer.w_candidate, &layer.w_forget, &layer.w_output}) {
      for (Eigen::Index j = 0; j < w->cols(); ++j) {
        for (Eigen::Index i = 0; i < w->rows(); ++i) (*w)(i, j) = dist(rng);
      }
    }
    layer.b_forget.setOnes();
  }
  const double k = 1.0 / std::sqrt(static_cast<double>(p.dense_w.cols()));
  std::uniform_real_distribution<double> dist(-k, k);
  for (Eigen::Index j = 0; j < p.dense_w.cols(); ++j) p.dense_w(0, j) = dist(rng);
  return p;
}

RowVector forward_batch(const NetworkConfig& config, const NetworkParams& params, std::span<const Matrix> windows,
                        Mode mode, std::mt19937_64& rng, ForwardTrace* trace) {
  config.validate();
  if (params.lstm.size() != config.lstm_count()) throw ShapeError("parameter set does not match the layer stack");
  if (trace) *trace = ForwardTrace{};
  if (windows.empty()) return RowVector(0);

  std::vector<Matrix> seq = to_steps(windows, config.input_width);
  const auto batch = static_cast<Eigen::Index>(windows.size());
  const std::size_t last_lstm = config.lstm_count() - 1;
  std::size_t lstm_index = 0;
  bool sequence_phase = true;
  Matrix head;

  for (const auto& spec : config.layers) {
    if (spec.kind == LayerKind::Lstm) {
      const auto& lp = params.lstm[lstm_index];
      if (static_cast<std::size_t>(seq.front().rows()) != lp.input() || lp.hidden() != spec.units) {
        throw ShapeError("LSTM layer " + std::to_string(lstm_index) + " parameters do not match its input");
      }
      LayerTrace lt;
      lt.kind = LayerKind::Lstm;
      LstmState state = LstmState::zeros(lp.hidden(), static_cast<std::size_t>(batch));
      std::vector<Matrix> out(seq.size());
      for (std::size_t t = 0; t < seq.size(); ++t) {
        state = lstm_cell_forward(lp, seq[t], state);
        out[t] = state.h;
        if (trace) lt.states.push_back(state);
      }
      if (trace) {
        lt.inputs = std::move(seq);
        trace->layers.push_back(std::move(lt));
      }
      if (lstm_index == last_lstm) {
        head = std::move(out.back());
        sequence_phase = false;
        seq.clear();
      } else {
        seq = std::move(out);
      }
      ++lstm_index;
    } else if (spec.kind == LayerKind::Dropout) {
      LayerTrace lt;
      lt.kind = LayerKind::Dropout;
      if (mode == Mode::Train && spec.rate > 0.0) {
        if (sequence_phase) {
          for (auto& m : seq) {
            Matrix mask = sample_mask(m.rows(), m.cols(), spec.rate, rng);
            m.array() *= mask.array();
            lt.masks.push_back(std::move(mask));
          }
        } else {
          Matrix mask = sample_mask(head.rows(), head.cols(), spec.rate, rng);
          head.array() *= mask.array();
          lt.masks.push_back(std::move(mask));
        }
      }
      if (trace) trace->layers.push_back(std::move(lt));
    } else {
      if (params.dense_w.cols() != head.rows()) throw ShapeError("dense head width does not match last LSTM");
      RowVector pred = (params.dense_w * head).row(0);
      pred.array() += params.dense_b(0);
      if (trace) {
        trace->head_input = head;
        trace->predictions = pred;
      }
      return pred;
    }
  }
  throw ShapeError("layer stack has no dense head");
}

double network_forward(const NetworkConfig& config, const NetworkParams& params, const Matrix& window, Mode mode,
                       std::mt19937_64& rng) {
  return forward_batch(config, params, std::span<const Matrix>(&window, 1), mode, rng)(0);
}

double mse_loss(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size()) throw ShapeError("predictions and targets differ in length");
  if (predictions.empty()) throw ShapeError("mse of an empty sequence");
  double acc = 0.0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const double d = predictions[k] - targets[k];
    acc += d * d;
  }
  return acc / static_cast<double>(predictions.size());
}

NetworkParams backward(const NetworkConfig& config, const NetworkParams& params, const ForwardTrace& trace,
                       const RowVector& dloss_dprediction) {
  if (trace.empty() || trace.head_input.size() == 0) {
    throw Error("backward requires the caches of a forward pass");
  }
  if (dloss_dprediction.size() != trace.predictions.size()) throw ShapeError("gradient batch size mismatch");

  NetworkParams grads = NetworkParams::zeros_like(params);
  grads.dense_w = dloss_dprediction * trace.head_input.transpose();
  grads.dense_b(0) = dloss_dprediction.sum();

  Matrix dhead = params.dense_w.transpose() * dloss_dprediction;
  std::vector<Matrix> dseq;
  bool sequence_phase = false;
  std::size_t lstm_index = config.lstm_count();

  for (std::size_t k = trace.layers.size(); k-- > 0;) {
    const LayerTrace& lt = trace.layers[k];
    if (lt.kind == LayerKind::Dropout) {
      if (lt.masks.empty()) continue;
      if (sequence_phase) {
        for (std::size_t t = 0; t < dseq.size(); ++t) dseq[t].array() *= lt.masks[t].array();
      } else {
        dhead.array() *= lt.masks.front().array();
      }
      continue;
    }
    --lstm_index;
    std::vector<Matrix> dh_above;
    if (sequence_phase) {
      dh_above = std::move(dseq);
    } else {
      dh_above.resize(lt.states.size());
      dh_above.back() = dhead;
    }
    dseq = lstm_backward(params.lstm[lstm_index], lt, dh_above, grads.lstm[lstm_index]);
    sequence_phase = true;
  }
  return grads;
}

LossAndGradients loss_and_gradients(const NetworkConfig& config, const NetworkParams& params,
                                    std::span<const Matrix> windows, std::span<const double> targets, Mode mode,
                                    std::mt19937_64& rng) {
  if (windows.size() != targets.size()) throw ShapeError("windows and targets differ in count");
  ForwardTrace trace;
  const RowVector pred = forward_batch(config, params, windows, mode, rng, &trace);
  const double loss = mse_loss(std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())), targets);
  RowVector dpred(pred.size());
  const double scale = 2.0 / static_cast<double>(pred.size());
  for (Eigen::Index b = 0; b < pred.size(); ++b) dpred(b) = scale * (pred(b) - targets[static_cast<std::size_t>(b)]);
  return LossAndGradients{loss, backward(config, params, trace, dpred)};
}

void adam_step(AdamState& state, std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads) {
  if (params.size() != grads.size()) throw ShapeError("ADAM: parameter and gradient lists differ in length");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size() != grads[k].size()) throw ShapeError("ADAM: tensor " + std::to_string(k) + " shape mismatch");
    for (double g : grads[k]) {
      if (!std::isfinite(g)) throw NumericalError("ADAM: non-finite gradient in tensor " + std::to_string(k));
    }
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), 0.0);
      state.v.emplace_back(p.size(), 0.0);
    }
  } else if (state.m.size() != params.size()) {
    throw ShapeError("ADAM: state was built for a different parameter list");
  }

  const auto& h = state.hyper;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(h.beta1, t);
  const double correction2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (m.size() != params[k].size()) throw ShapeError("ADAM: moment shape mismatch");
    for (std::size_t j = 0; j < m.size(); ++j) {
      const double g = grads[k][j];
      m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * g;
      v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * g * g;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      params[k][j] -= h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon);
    }
  }
}

void adam_step(AdamState& state, NetworkParams& params, const NetworkParams& grads) {
  std::vector<std::span<double>> p;
  std::vector<std::span<const double>> g;
  for (auto& t : params.tensors()) p.push_back(t.data);
  for (const auto& t : grads.tensors()) g.push_back(t.data);
  adam_step(state, p, g);
}

TrainedModel train(const NetworkConfig& config, std::span<const Matrix> inputs, std::span<const double> targets,
                   const TrainHyper& hyper) {
  config.validate();
  if (inputs.size() != targets.size()) throw ShapeError("inputs and targets differ in count");
  if (inputs.empty()) throw Error("training set is empty");
  if (hyper.epochs < 0) throw Error("epoch count must be non-negative");

  TrainedModel model;
  model.config = config;
  model.params = initialize(config, mix_seed(hyper.seed, "init"));
  model.optimizer.hyper.learning_rate = hyper.learning_rate;
  model.report.seed = hyper.seed;

  std::mt19937_64 dropout_rng(mix_seed(hyper.seed, "dropout"));
  std::mt19937_64 shuffle_rng(mix_seed(hyper.seed, "shuffle"));
  const std::size_t n = inputs.size();
  const std::size_t batch = (hyper.batch_size == 0 || hyper.batch_size >= n) ? n : hyper.batch_size;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  std::vector<Matrix> xb;
  std::vector<double> yb;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    if (batch < n) std::shuffle(order.begin(), order.end(), shuffle_rng);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      LossAndGradients lg;
      if (batch == n) {
        lg = loss_and_gradients(config, model.params, inputs, targets, Mode::Train, dropout_rng);
      } else {
        xb.clear();
        yb.clear();
        for (std::size_t k = start; k < stop; ++k) {
          xb.push_back(inputs[order[k]]);
          yb.push_back(targets[order[k]]);
        }
        lg = loss_and_gradients(config, model.params, xb, yb, Mode::Train, dropout_rng);
      }
      if (!std::isfinite(lg.loss)) {
        throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch + 1) + ": loss is not finite");
      }
      total += lg.loss * static_cast<double>(stop - start);
      adam_step(model.optimizer, model.params, lg.gradients);
    }
    const double epoch_loss = total / static_cast<double>(n);
    model.report.epoch_loss.push_back(epoch_loss);

    if (hyper.early_stop_patience > 0) {
      if (epoch_loss < best) {
        best = epoch_loss;
        stale = 0;
      } else if (++stale >= hyper.early_stop_patience) {
        model.report.early_stopped = true;
        break;
      }
    }
  }
  return model;
}

std::vector<double> predict(const NetworkConfig& config, const NetworkParams& params, std::span<const Matrix> inputs) {
  std::mt19937_64 unused(0);
  const RowVector pred = forward_batch(config, params, inputs, Mode::Eval, unused);
  return std::vector<double>(pred.data(), pred.data() + pred.size());
}

void save_checkpoint(const std::filesystem::path& path, const TrainedModel& model) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : model.config.layers) {
    layers.push_back({{"kind", kind_name(l.kind)}, {"units", l.units}, {"rate", l.rate}});
  }
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& t : model.params.tensors()) tensors.push_back(tensor_json(t));

  const auto& opt = model.optimizer;
  nlohmann::json doc = {
      {"format", "newsflow-lstm-checkpoint"},
      {"version", 1},
      {"seed", model.report.seed},
      {"config", {{"input_width", model.config.input_width}, {"layers", layers}}},
      {"tensors", tensors},
      {"optimizer",
       {{"learning_rate", opt.hyper.learning_rate},
        {"beta1", opt.hyper.beta1},
        {"beta2", opt.hyper.beta2},
        {"epsilon", opt.hyper.epsilon},
        {"step", opt.step},
        {"m", opt.m},
        {"v", opt.v}}},
      {"report", {{"epoch_loss", model.report.epoch_loss}, {"early_stopped", model.report.early_stopped}}},
  };
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
  out << doc.dump(1) << '\n';
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
    if (doc.at("format") != "newsflow-lstm-checkpoint") throw Error("not a newsflow checkpoint");
    if (doc.at("version").get<int>() != 1) throw Error("unsupported checkpoint version");

    TrainedModel model;
    model.config.input_width = doc.at("config").at("input_width").get<std::size_t>();
    for (const auto& l : doc.at("config").at("layers")) {
      model.config.layers.push_back(
          LayerSpec{kind_from_name(l.at("kind")), l.at("units").get<std::size_t>(), l.at("rate").get<double>()});
    }
    model.params = NetworkParams::zeros(model.config);
    auto targets = model.params.tensors();
    const auto& stored = doc.at("tensors");
    if (stored.size() != targets.size()) throw Error("tensor count does not match the layer stack");
    for (std::size_t k = 0; k < targets.size(); ++k) {
      const auto& t = stored[k];
      if (t.at("name") != targets[k].name || t.at("rows").get<Eigen::Index>() != targets[k].rows ||
          t.at("cols").get<Eigen::Index>() != targets[k].cols) {
        throw Error("tensor '" + targets[k].name + "' has unexpected name or shape");
      }
      const auto data = t.at("data").get<std::vector<double>>();
      if (data.size() != targets[k].data.size()) throw Error("tensor '" + targets[k].name + "' has wrong size");
      std::copy(data.begin(), data.end(), targets[k].data.begin());
    }
    const auto& opt = doc.at("optimizer");
    model.optimizer.hyper = AdamHyper{opt.at("learning_rate"), opt.at("beta1"), opt.at("beta2"), opt.at("epsilon")};
    model.optimizer.step = opt.at("step").get<std::int64_t>();
    model.optimizer.m = opt.at("m").get<std::vector<std::vector<double>>>();
    model.optimizer.v = opt.at("v").get<std::vector<std::vector<double>>>();
    model.report.seed = doc.at("seed").get<std::uint64_t>();
    model.report.epoch_loss = doc.at("report").at("epoch_loss").get<std::vector<double>>();
    model.report.early_stopped = doc.at("report").at("early_stopped").get<bool>();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed checkpoint '" + path.string() + "': " + e.what());
  }
}

}  // namespace newsflow::neural
