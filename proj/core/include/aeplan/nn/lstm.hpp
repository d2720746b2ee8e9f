#pragma once

#include <string>
#include <vector>

#include "aeplan/nn/params.hpp"

namespace aeplan::nn {

/// LSTM cell parameters. The 4*hidden rows of every array are stacked in gate
/// order input (i), forget (f), cell candidate (g), output (o):
///
///   z  = W_x x + W_h h + b
///   i  = sigmoid(z_i)   f = sigmoid(z_f)   g = tanh(z_g)   o = sigmoid(z_o)
///   c' = f * c + i * g
///   h' = o * tanh(c')
struct LstmCellParams {
  MatrixXd input_weights;      // 4h x in_dim
  MatrixXd recurrent_weights;  // 4h x h
  VectorXd bias;               // 4h

  Index hidden_dim() const { return recurrent_weights.cols(); }
  Index in_dim() const { return input_weights.cols(); }

  std::vector<ParamSpan> parameters(const std::string& prefix = "");
  std::vector<ConstParamSpan> parameters(const std::string& prefix = "") const;
};

/// Recurrent state; columns are independent batch entries.
struct LstmState {
  MatrixXd hidden;
  MatrixXd cell;

  static LstmState zeros(Index hidden_dim, Index batch = 1) {
    return {MatrixXd::Zero(hidden_dim, batch), MatrixXd::Zero(hidden_dim, batch)};
  }
  Index batch() const { return hidden.cols(); }
};

/// Values saved by a forward step for the matching backward step.
struct LstmStepCache {
  MatrixXd input;
  MatrixXd prev_hidden;
  MatrixXd prev_cell;
  MatrixXd gates;  // activated i, f, g, o stacked like the parameters
  MatrixXd cell;
  MatrixXd cell_tanh;
};

LstmState lstm_step(const LstmCellParams& params, const LstmState& state, const MatrixXd& x,
                    LstmStepCache* cache = nullptr);

struct LstmStepGradient {
  MatrixXd input;
  MatrixXd hidden;  // w.r.t. the previous hidden state
  MatrixXd cell;    // w.r.t. the previous cell state
};

/// Backward through one step. `grad_hidden`/`grad_cell` are the loss
/// gradients w.r.t. the step's outputs h' and c'.
LstmStepGradient lstm_step_backward(const LstmCellParams& params, const LstmStepCache& cache,
                                    const MatrixXd& grad_hidden, const MatrixXd& grad_cell,
                                    LstmCellParams* grads);

struct SequenceCache {
  Index in_dim = 0;
  Index hidden_dim = 0;
  Index batch = 0;
  std::vector<LstmStepCache> steps;
};

struct SequenceForward {
  std::vector<MatrixXd> hiddens;
  LstmState final_state;
  SequenceCache cache;
};

SequenceForward forward_sequence(const LstmCellParams& params, const LstmState& initial,
                                 const std::vector<MatrixXd>& inputs);

struct SequenceGradient {
  LstmCellParams params;
  std::vector<MatrixXd> inputs;
  LstmState initial_state;
};

/// Exact gradients of a loss whose only dependence on the sequence is through
/// the hidden outputs, given dL/dh_t for every step.
SequenceGradient backward_through_time(const LstmCellParams& params, const SequenceCache& cache,
                                       const std::vector<MatrixXd>& output_gradients);

}  // namespace aeplan::nn
