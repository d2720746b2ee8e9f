#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "aeplan/nn/params.hpp"

namespace aeplan::nn {

enum class Activation { linear, tanh, relu };

std::string_view to_string(Activation a);

/// Fully connected layer y = act(W x + b). Batched inputs are matrices whose
/// columns are independent samples.
struct DenseLayer {
  MatrixXd weights;  // out_dim x in_dim
  VectorXd bias;     // out_dim
  Activation activation = Activation::linear;

  Index in_dim() const { return weights.cols(); }
  Index out_dim() const { return weights.rows(); }

  std::vector<ParamSpan> parameters(const std::string& prefix = "");
  std::vector<ConstParamSpan> parameters(const std::string& prefix = "") const;
};

VectorXd dense_forward(const DenseLayer& layer, const VectorXd& x);
MatrixXd dense_forward_batch(const DenseLayer& layer, const MatrixXd& x);

/// Backward pass given the forward input and (post-activation) output.
/// Accumulates parameter gradients into `grads` when non-null and returns the
/// gradient with respect to the input.
MatrixXd dense_backward(const DenseLayer& layer, const MatrixXd& input,
                        const MatrixXd& output, const MatrixXd& grad_output,
                        DenseLayer* grads);

}  // namespace aeplan::nn
