#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aeplan/dataset.hpp"
#include "aeplan/nn/checkpoint.hpp"
#include "aeplan/nn/dense.hpp"

namespace aeplan {

/// Single-hidden-layer autoencoder over flattened state-action windows.
struct AutoencoderParams {
  nn::DenseLayer encoder;  // D -> hidden, tanh
  nn::DenseLayer decoder;  // hidden -> D, linear

  Index input_dim() const { return encoder.in_dim(); }

  std::vector<nn::ParamSpan> parameters(const std::string& prefix = "");
  std::vector<nn::ConstParamSpan> parameters(const std::string& prefix = "") const;
};

/// Trained autoencoder plus the window geometry it was trained on. A window
/// holds T consecutive normalised steps laid out as
/// [s_t, a_t, s_{t+1}, a_{t+1}, ..., s_{t+T-1}, a_{t+T-1}], D = T (N + M).
struct UncertaintyModel {
  AutoencoderParams params;
  Index window = 10;
  Index state_dim = 0;
  Index action_dim = 0;
  std::uint64_t seed = 0;

  Index window_dim() const { return window * (state_dim + action_dim); }
};

AutoencoderParams init_autoencoder(Index input_dim, Index hidden_units, std::uint64_t seed);

struct WindowSet {
  MatrixXd windows;  // D x count
  Index skipped_episodes = 0;

  Index count() const { return windows.cols(); }
};

/// Stride-1 windows that never cross an episode boundary. Episodes shorter
/// than T are skipped and counted.
WindowSet build_windows(const Dataset& data, Index window, const NormStats& norm);

enum class ReconstructionLoss {
  /// Mean over windows and components of the squared residual.
  mse,
  /// Per-window (1/T) * sqrt(sum of squared residuals), averaged over windows.
  root_sum_squares,
};

struct AutoencoderTrainConfig {
  int epochs = 200;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  Index batch_size = 64;
  Index hidden_units = 100;
  ReconstructionLoss loss = ReconstructionLoss::mse;
};

struct AutoencoderTraining {
  UncertaintyModel model;
  std::vector<double> training_curve;
};

AutoencoderTraining train_autoencoder(const WindowSet& windows, Index window, Index state_dim,
                                      Index action_dim, const AutoencoderTrainConfig& config);

/// Training loss of one batch of windows (columns); adds gradients to `grads`
/// when non-null.
double reconstruction_loss(const AutoencoderParams& params, const MatrixXd& windows, Index window,
                           ReconstructionLoss loss, AutoencoderParams* grads);

MatrixXd reconstruct(const AutoencoderParams& params, const MatrixXd& windows);

/// u = (1/T) * || x - AE(x) ||_2 over every state and action component.
double uncertainty_u(const UncertaintyModel& model, const VectorXd& window);
VectorXd uncertainty_batch(const UncertaintyModel& model, const MatrixXd& windows);

/// du/dx for each column; columns with exact reconstruction get a zero gradient.
MatrixXd uncertainty_gradient(const UncertaintyModel& model, const MatrixXd& windows,
                              const VectorXd& weights);

struct UncertaintyProfile {
  std::vector<double> per_step;
  double cumulative = 0.0;
};

/// Scores a planned continuation of `history`. Plan step i is paired with the
/// state the action is applied in: the current real state for i = 0 and
/// predicted_states[i - 1] afterwards. Each score uses the T most recent
/// pairs, taking real history pairs where the plan is still short.
UncertaintyProfile trajectory_uncertainty(const UncertaintyModel& model, const NormStats& norm,
                                          const History& history,
                                          const std::vector<VectorXd>& predicted_states,
                                          const std::vector<VectorXd>& actions);

/// Normalised [s_j; a_j] columns of the most recent T - 1 history steps.
/// Throws ConfigError when the history is shorter than that.
std::vector<VectorXd> history_pairs(const UncertaintyModel& model, const NormStats& norm,
                                    const History& history);

/// Window ending at plan step `step` for a batch of plans. `plan_pairs[i]` is
/// the (N + M) x batch block of normalised pairs for plan step i; positions
/// before the plan start are taken from `past` (output of history_pairs).
MatrixXd window_at(const UncertaintyModel& model, const std::vector<VectorXd>& past,
                   const std::vector<MatrixXd>& plan_pairs, Index step);

nn::Checkpoint to_checkpoint(const UncertaintyModel& model, const NormStats& norm);
/// Returns the model and fills `norm` with the stored normalisation.
UncertaintyModel uncertainty_from_checkpoint(const nn::Checkpoint& ckpt, NormStats* norm);

}  // namespace aeplan
