#include "aeplan/nn/init.hpp"

#include <cmath>

namespace aeplan::nn {

void xavier_uniform(MatrixXd& w, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Index j = 0; j < w.cols(); ++j)
    for (Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
}

DenseLayer init_dense(Index in_dim, Index out_dim, Activation activation, Rng& rng) {
  if (in_dim < 1 || out_dim < 1) throw ShapeError("dense layer dimensions must be >= 1");
  DenseLayer layer{MatrixXd(out_dim, in_dim), VectorXd::Zero(out_dim), activation};
  xavier_uniform(layer.weights, rng);
  return layer;
}

LstmCellParams init_lstm(Index in_dim, Index hidden_dim, Rng& rng) {
  if (in_dim < 1 || hidden_dim < 1) throw ShapeError("LSTM dimensions must be >= 1");
  LstmCellParams p{MatrixXd(4 * hidden_dim, in_dim), MatrixXd(4 * hidden_dim, hidden_dim),
                   VectorXd::Zero(4 * hidden_dim)};
  for (Index gate = 0; gate < 4; ++gate) {
    MatrixXd wx(hidden_dim, in_dim);
    MatrixXd wh(hidden_dim, hidden_dim);
    xavier_uniform(wx, rng);
    xavier_uniform(wh, rng);
    p.input_weights.middleRows(gate * hidden_dim, hidden_dim) = wx;
    p.recurrent_weights.middleRows(gate * hidden_dim, hidden_dim) = wh;
  }
  return p;
}

}  // namespace aeplan::nn
