#include "aeplan/nn/dense.hpp"

#include <string>

namespace aeplan::nn {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
  }
  return "unknown";
}

std::vector<ParamSpan> DenseLayer::parameters(const std::string& prefix) {
  return {{join_name(prefix, "weights"), values_of(weights)},
          {join_name(prefix, "bias"), values_of(bias)}};
}

std::vector<ConstParamSpan> DenseLayer::parameters(const std::string& prefix) const {
  return {{join_name(prefix, "weights"), values_of(weights)},
          {join_name(prefix, "bias"), values_of(bias)}};
}

namespace {

void check_layer(const DenseLayer& layer) {
  if (layer.bias.size() != layer.out_dim())
    throw ShapeError("dense layer bias has " + std::to_string(layer.bias.size()) +
                     " entries for " + std::to_string(layer.out_dim()) + " outputs");
}

void apply_activation(Activation a, MatrixXd& z) {
  switch (a) {
    case Activation::linear: break;
    case Activation::tanh: z = z.array().tanh().matrix(); break;
    case Activation::relu: z = z.cwiseMax(0.0); break;
  }
}

}  // namespace

MatrixXd dense_forward_batch(const DenseLayer& layer, const MatrixXd& x) {
  check_layer(layer);
  if (x.rows() != layer.in_dim())
    throw ShapeError("dense input has " + std::to_string(x.rows()) + " rows, layer expects " +
                     std::to_string(layer.in_dim()));
  MatrixXd z = layer.weights * x;
  z.colwise() += layer.bias;
  apply_activation(layer.activation, z);
  return z;
}

VectorXd dense_forward(const DenseLayer& layer, const VectorXd& x) {
  return dense_forward_batch(layer, x);
}

MatrixXd dense_backward(const DenseLayer& layer, const MatrixXd& input, const MatrixXd& output,
                        const MatrixXd& grad_output, DenseLayer* grads) {
  if (grad_output.rows() != layer.out_dim() || grad_output.cols() != input.cols() ||
      output.rows() != layer.out_dim() || input.rows() != layer.in_dim())
    throw ShapeError("dense backward operands do not match the layer");

  MatrixXd dz;
  switch (layer.activation) {
    case Activation::linear: dz = grad_output; break;
    case Activation::tanh:
      dz = grad_output.array() * (1.0 - output.array().square());
      break;
    case Activation::relu:
      dz = (output.array() > 0.0).select(grad_output, 0.0);
      break;
  }
  if (grads != nullptr) {
    grads->weights.noalias() += dz * input.transpose();
    grads->bias += dz.rowwise().sum();
  }
  return layer.weights.transpose() * dz;
}

}  // namespace aeplan::nn
