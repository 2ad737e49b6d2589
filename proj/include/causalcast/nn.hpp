#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "causalcast/timeseries.hpp"

namespace causalcast {

/// Layer widths. Defaults are the GRU-64 / LSTM-128 / Dense-64 stack.
struct Architecture {
  int input_size = 1;
  int gru_units = 64;
  int lstm_units = 128;
  int dense_units = 64;
  double dropout = 0.2;
  int lookback = 21;

  void validate() const;
};

/// Total trainable scalars: a pure function of the architecture.
std::int64_t parameter_count(const Architecture& arch);

/// Gates: update z, reset r, candidate h. Each gate carries an input-side
/// and a recurrent-side bias; they enter the gate pre-activation as a sum.
struct GruParams {
  Eigen::MatrixXd w_z, w_r, w_h;  // H x D
  Eigen::MatrixXd u_z, u_r, u_h;  // H x H
  Eigen::VectorXd bw_z, bw_r, bw_h;
  Eigen::VectorXd bu_z, bu_r, bu_h;

  static GruParams zeros(int input_size, int units);
  int units() const noexcept { return static_cast<int>(w_z.rows()); }
  int input_size() const noexcept { return static_cast<int>(w_z.cols()); }
};

/// Gates: input i, forget f, output o, cell candidate g.
struct LstmParams {
  Eigen::MatrixXd w_i, w_f, w_o, w_g;  // H x D
  Eigen::MatrixXd u_i, u_f, u_o, u_g;  // H x H
  Eigen::VectorXd b_i, b_f, b_o, b_g;

  static LstmParams zeros(int input_size, int units);
  int units() const noexcept { return static_cast<int>(w_i.rows()); }
  int input_size() const noexcept { return static_cast<int>(w_i.cols()); }
};

/// h' = (1-z)*h + z*tanh(W_h x + U_h (r*h) + b_h) with
/// z = sigmoid(W_z x + U_z h + b_z), r = sigmoid(W_r x + U_r h + b_r).
Eigen::VectorXd gru_step(const GruParams& p, const Eigen::VectorXd& x, const Eigen::VectorXd& h);

struct LstmState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

LstmState lstm_step(const LstmParams& p, const Eigen::VectorXd& x, const Eigen::VectorXd& h,
                    const Eigen::VectorXd& c);

struct NamedTensor {
  std::string_view name;
  Eigen::MatrixXd* matrix = nullptr;
  Eigen::VectorXd* vector = nullptr;

  double* data() const { return matrix ? matrix->data() : vector->data(); }
  Eigen::Index size() const { return matrix ? matrix->size() : vector->size(); }
  Eigen::Index rows() const { return matrix ? matrix->rows() : vector->rows(); }
  Eigen::Index cols() const { return matrix ? matrix->cols() : 1; }
};

/// Every trainable array of the forecaster. Also used for gradients and
/// optimizer moments, which share the layout.
struct ParameterSet {
  GruParams gru;
  LstmParams lstm;
  Eigen::MatrixXd dense_w;  // dense x lstm
  Eigen::VectorXd dense_b;
  Eigen::MatrixXd out_w;    // 1 x dense
  Eigen::VectorXd out_b;    // 1

  static ParameterSet zeros(const Architecture& arch);

  /// Stable order; names are "gru.w_z", "lstm.b_f", "dense.w", ...
  std::vector<NamedTensor> tensors();
  std::int64_t size() const;
  ParameterSet zeros_like() const;
};

struct ForecastModel {
  Architecture arch;
  ParameterSet params;

  /// All parameters zero.
  static ForecastModel zeros(const Architecture& arch);
  /// Glorot-uniform weights, zero biases, LSTM forget bias 1.
  static ForecastModel initialize(const Architecture& arch, std::uint64_t seed);
};

enum class Mode { train, eval };

/// Inverted-dropout multipliers (0 or 1/(1-q)).
struct DropoutMasks {
  std::vector<Eigen::MatrixXd> gru_outputs;  // per timestep, gru_units x batch
  Eigen::MatrixXd lstm_final;                // lstm_units x batch

  static DropoutMasks sample(const Architecture& arch, Eigen::Index batch, std::mt19937_64& rng);
  static DropoutMasks identity(const Architecture& arch, Eigen::Index batch);
};

/// Intermediates of a batched forward pass, consumed by backward().
struct ForwardCache {
  Eigen::Index batch = 0;
  std::vector<Eigen::MatrixXd> inputs;  // per timestep, D x B
  // GRU
  std::vector<Eigen::MatrixXd> g_h_prev, g_z, g_r, g_cand;
  // LSTM
  std::vector<Eigen::MatrixXd> l_in, l_h_prev, l_c_prev, l_i, l_f, l_o, l_g, l_c, l_tanh_c;
  DropoutMasks masks;
  Eigen::MatrixXd lstm_dropped;  // final hidden after dropout
  Eigen::MatrixXd dense_pre, dense_act;
  Eigen::RowVectorXd prediction;
};

/// Batched forward pass over windows (each lookback x input_size).
/// Train mode draws dropout masks from `rng` (required); eval mode uses none.
ForwardCache forward(const ForecastModel& model, std::span<const Eigen::MatrixXd* const> windows,
                     Mode mode, std::mt19937_64* rng = nullptr);

/// Forward pass with caller-supplied dropout masks.
ForwardCache forward_with_masks(const ForecastModel& model,
                                std::span<const Eigen::MatrixXd* const> windows,
                                DropoutMasks masks);

/// Single-window convenience wrapper.
double forward_one(const ForecastModel& model, const Eigen::MatrixXd& window);

/// Exact reverse-mode gradients of sum_b d_prediction(b) * prediction(b).
ParameterSet backward(const ForecastModel& model, const ForwardCache& cache,
                      const Eigen::RowVectorXd& d_prediction);

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  ParameterSet m;
  ParameterSet v;

  static AdamState for_params(const ParameterSet& params, double learning_rate = 1e-3);
};

/// Bias-corrected Adam update; increments the step counter first.
void adam_step(AdamState& state, ParameterSet& params, ParameterSet& grads);

struct TrainConfig {
  int batch_size = 64;
  int max_epochs = 100;
  int patience = 10;
  double min_delta = 1e-5;
  double learning_rate = 1e-3;
  std::uint64_t seed = 42;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;  // NaN without validation data
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  bool early_stopped = false;
};

/// Minibatch MSE training with seeded shuffling, early stopping on the
/// validation loss and restoration of the best-epoch weights.
TrainHistory fit(ForecastModel& model, const SupervisedWindows& train,
                 const SupervisedWindows& validation, const TrainConfig& config);

/// Eval-mode predictions, one per window.
Eigen::VectorXd predict(const ForecastModel& model, const SupervisedWindows& windows);

double mse_loss(const ForecastModel& model, const SupervisedWindows& windows);

}  // namespace causalcast
