#pragma once

#include <random>

#include "aeplan/nn/dense.hpp"
#include "aeplan/nn/lstm.hpp"

namespace aeplan::nn {

using Rng = std::mt19937_64;

/// Fills `w` with U(-b, b), b = sqrt(6 / (fan_in + fan_out)), where fan_in is
/// the column count and fan_out the row count.
void xavier_uniform(MatrixXd& w, Rng& rng);

DenseLayer init_dense(Index in_dim, Index out_dim, Activation activation, Rng& rng);

/// Each gate block is initialised as its own hidden x in matrix.
LstmCellParams init_lstm(Index in_dim, Index hidden_dim, Rng& rng);

}  // namespace aeplan::nn
