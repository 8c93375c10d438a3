#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "newsflow/common.hpp"

namespace newsflow::neural {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Weights of one LSTM layer. Every gate matrix acts on the concatenation
/// [h_{t-1}, x_t], so its shape is hidden x (hidden + input).
struct LstmLayerParams {
  Matrix w_input;
  Matrix w_candidate;
  Matrix w_forget;
  Matrix w_output;
  Vector b_input;
  Vector b_candidate;
  Vector b_forget;
  Vector b_output;

  static LstmLayerParams zeros(std::size_t hidden, std::size_t input);
  std::size_t hidden() const { return static_cast<std::size_t>(w_input.rows()); }
  std::size_t input() const { return static_cast<std::size_t>(w_input.cols() - w_input.rows()); }
};

/// Hidden and cell state after one step, plus the gate activations of that
/// step. Columns index independent sequences of a batch.
struct LstmState {
  Matrix h;
  Matrix c;
  Matrix input_gate;
  Matrix forget_gate;
  Matrix output_gate;
  Matrix candidate;

  static LstmState zeros(std::size_t hidden, std::size_t batch = 1);
};

// One step of the gate equations. `x` is input x batch.
LstmState lstm_cell_forward(const LstmLayerParams& params, const Matrix& x, const LstmState& prev);

enum class LayerKind { Lstm, Dropout, Dense };

struct LayerSpec {
  LayerKind kind = LayerKind::Lstm;
  std::size_t units = 0;  // LSTM hidden size, dense output width
  double rate = 0.0;      // dropout rate

  static LayerSpec lstm(std::size_t units) { return {LayerKind::Lstm, units, 0.0}; }
  static LayerSpec dropout(double rate) { return {LayerKind::Dropout, 0, rate}; }
  static LayerSpec dense(std::size_t units = 1) { return {LayerKind::Dense, units, 0.0}; }
};

struct NetworkConfig {
  std::size_t input_width = 5;
  std::vector<LayerSpec> layers;

  /// LSTM, dropout, LSTM, LSTM, dropout, dense.
  static NetworkConfig default_stack(std::size_t hidden = 32, double dropout = 0.2, std::size_t input_width = 5);

  // Throws ShapeError unless the stack is usable: at least one LSTM, dropout
  // rates in [0, 1), exactly one dense layer of width 1 in last position.
  void validate() const;
  std::size_t lstm_count() const;
};

struct TensorRef {
  std::string name;
  std::span<double> data;
  Eigen::Index rows;
  Eigen::Index cols;
};

struct ConstTensorRef {
  std::string name;
  std::span<const double> data;
  Eigen::Index rows;
  Eigen::Index cols;
};

struct NetworkParams {
  std::vector<LstmLayerParams> lstm;
  Matrix dense_w;  // 1 x hidden of the last LSTM
  Vector dense_b;  // 1

  static NetworkParams zeros(const NetworkConfig& config);
  static NetworkParams zeros_like(const NetworkParams& other);

  // Fixed order: per LSTM layer W_i, W_c, W_f, W_o, b_i, b_c, b_f, b_o; then dense.
  std::vector<TensorRef> tensors();
  std::vector<ConstTensorRef> tensors() const;
  std::size_t parameter_count() const;
};

/// uniform(-k, k) with k = 1/sqrt(fan_in); biases zero except the forget
/// gate, which starts at 1.
NetworkParams initialize(const NetworkConfig& config, std::uint64_t seed);

enum class Mode { Train, Eval };

struct LayerTrace {
  LayerKind kind = LayerKind::Lstm;
  std::vector<Matrix> inputs;      // LSTM: per-step input, input x batch
  std::vector<LstmState> states;   // LSTM: per-step state
  std::vector<Matrix> masks;       // dropout: per-step (sequence) or single (vector) mask
};

struct ForwardTrace {
  std::vector<LayerTrace> layers;
  Matrix head_input;  // input of the dense layer, hidden x batch
  RowVector predictions;

  bool empty() const { return layers.empty(); }
  std::size_t batch() const { return static_cast<std::size_t>(predictions.size()); }
};

/// Runs a batch of windows (each steps x input_width) through the stack.
/// Dropout masks are drawn from `rng` in train mode only; masks are inverted
/// (survivors scaled by 1/(1-rate)). Eval mode never touches `rng`.
RowVector forward_batch(const NetworkConfig& config, const NetworkParams& params, std::span<const Matrix> windows,
                        Mode mode, std::mt19937_64& rng, ForwardTrace* trace = nullptr);

double network_forward(const NetworkConfig& config, const NetworkParams& params, const Matrix& window, Mode mode,
                       std::mt19937_64& rng);

double mse_loss(std::span<const double> predictions, std::span<const double> targets);

/// Gradients of the loss with respect to every parameter, given the cached
/// forward pass and dL/dprediction per batch column.
NetworkParams backward(const NetworkConfig& config, const NetworkParams& params, const ForwardTrace& trace,
                       const RowVector& dloss_dprediction);

struct LossAndGradients {
  double loss = 0.0;
  NetworkParams gradients;
};

// Mean squared error over the batch and its exact gradient.
LossAndGradients loss_and_gradients(const NetworkConfig& config, const NetworkParams& params,
                                    std::span<const Matrix> windows, std::span<const double> targets, Mode mode,
                                    std::mt19937_64& rng);

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamHyper hyper;
  std::int64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

/// One bias-corrected ADAM update over a list of parameter tensors. Moments
/// are allocated on first use. Throws NumericalError on a non-finite gradient.
void adam_step(AdamState& state, std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads);
void adam_step(AdamState& state, NetworkParams& params, const NetworkParams& grads);

struct TrainHyper {
  int epochs = 200;
  double learning_rate = 1e-3;
  std::uint64_t seed = 42;
  std::size_t batch_size = 0;  // 0 = full batch
  int early_stop_patience = 0; // 0 = off
};

struct TrainReport {
  std::vector<double> epoch_loss;
  std::uint64_t seed = 0;
  bool early_stopped = false;
};

struct TrainedModel {
  NetworkConfig config;
  NetworkParams params;
  AdamState optimizer;
  TrainReport report;
};

class TrainingDiverged : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

TrainedModel train(const NetworkConfig& config, std::span<const Matrix> inputs, std::span<const double> targets,
                   const TrainHyper& hyper);

std::vector<double> predict(const NetworkConfig& config, const NetworkParams& params, std::span<const Matrix> inputs);

void save_checkpoint(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace newsflow::neural
