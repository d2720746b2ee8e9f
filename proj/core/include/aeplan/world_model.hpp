#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aeplan/dataset.hpp"
#include "aeplan/env/environment.hpp"
#include "aeplan/nn/checkpoint.hpp"
#include "aeplan/nn/dense.hpp"
#include "aeplan/nn/lstm.hpp"

namespace aeplan {

struct WorldModelShape {
  Index hidden_units = 32;  // LSTM width
  Index dense_units = 64;   // relu layer after the LSTM
};

/// LSTM over [s_t, a_t] (normalised), a relu dense layer and a linear output
/// predicting the normalised state change s_{t+1} - s_t.
struct WorldModelParams {
  nn::LstmCellParams lstm;
  nn::DenseLayer hidden;
  nn::DenseLayer output;

  Index state_dim() const { return output.out_dim(); }
  Index action_dim() const { return lstm.in_dim() - output.out_dim(); }

  std::vector<nn::ParamSpan> parameters(const std::string& prefix = "");
  std::vector<nn::ConstParamSpan> parameters(const std::string& prefix = "") const;
};

WorldModelParams init_world_model(Index state_dim, Index action_dim, std::uint64_t seed,
                                  const WorldModelShape& shape = {});

struct WorldModel {
  WorldModelParams params;
  NormStats norm;
  std::uint64_t seed = 0;
};

struct WorldModelTrainConfig {
  int epochs = 100;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  Index truncation_length = 32;
  Index batch_size = 16;
  WorldModelShape shape;
};

struct WorldModelTraining {
  WorldModel model;
  std::vector<double> training_curve;  // mean loss per epoch
};

/// Fits the model on normalised state deltas with truncated BPTT. Segments of
/// `truncation_length` steps start from a zero recurrent state. Each epoch
/// tiles every episode from a fresh random offset (plus a segment at each end,
/// so all steps are seen) and shuffles the segments.
WorldModelTraining train_world_model(const Dataset& data, const WorldModelTrainConfig& config);

/// Mean squared error over every step, batch column and state dimension of a
/// batch of normalised sequences. Adds parameter gradients to `grads` when
/// non-null.
double sequence_loss(const WorldModelParams& params, const std::vector<MatrixXd>& inputs,
                     const std::vector<MatrixXd>& targets, WorldModelParams* grads);

struct PredictedTrajectory {
  std::vector<VectorXd> states;  // predicted s_{k+1} .. s_{k+H}
  std::vector<double> costs;     // cost_of(states[i], actions[i])

  Index length() const { return static_cast<Index>(states.size()); }
  double cumulative_cost() const;
};

struct StepPrediction {
  nn::LstmState state;
  VectorXd next_state;
};

StepPrediction predict_step(const WorldModel& model, const nn::LstmState& state,
                            const VectorXd& observation, const VectorXd& action);

/// Recurrent state after consuming every (s_j, a_j) pair of the history.
nn::LstmState warm_up(const WorldModel& model, const History& history);

/// Open-loop multi-step prediction: warm up on the history, then feed each
/// prediction back as the next input.
PredictedTrajectory rollout(const WorldModel& model, const History& history,
                            const std::vector<VectorXd>& actions,
                            const env::Environment& cost_model);

struct RolloutStepCache {
  nn::LstmStepCache lstm;
  MatrixXd hidden_out;
  MatrixXd output;
};

struct BatchRollout {
  std::vector<MatrixXd> states;  // state_dim x batch per step
  std::vector<RolloutStepCache> cache;
};

/// Batched rollout of `actions[t]` (action_dim x batch) from one warm state and
/// one start observation. Keeps what rollout_backward needs when asked.
BatchRollout rollout_batch(const WorldModel& model, const nn::LstmState& warm,
                           const VectorXd& start, const std::vector<MatrixXd>& actions,
                           bool keep_cache);

/// Given dL/d(states[t]) for every predicted state, returns dL/d(actions[t])
/// in raw action units.
std::vector<MatrixXd> rollout_backward(const WorldModel& model, const BatchRollout& forward,
                                       const std::vector<MatrixXd>& state_grads);

void append_norm_arrays(nn::Checkpoint& ckpt, const NormStats& norm);
NormStats norm_from_checkpoint(const nn::Checkpoint& ckpt, Index state_dim, Index action_dim);

nn::Checkpoint to_checkpoint(const WorldModel& model);
WorldModel world_model_from_checkpoint(const nn::Checkpoint& ckpt);

}  // namespace aeplan
