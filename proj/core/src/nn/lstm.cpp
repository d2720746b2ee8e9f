#include "aeplan/nn/lstm.hpp"

#include <string>

#include "aeplan/nn/params.hpp"

namespace aeplan::nn {

std::vector<ParamSpan> LstmCellParams::parameters(const std::string& prefix) {
  return {{join_name(prefix, "input_weights"), values_of(input_weights)},
          {join_name(prefix, "recurrent_weights"), values_of(recurrent_weights)},
          {join_name(prefix, "bias"), values_of(bias)}};
}

std::vector<ConstParamSpan> LstmCellParams::parameters(const std::string& prefix) const {
  return {{join_name(prefix, "input_weights"), values_of(input_weights)},
          {join_name(prefix, "recurrent_weights"), values_of(recurrent_weights)},
          {join_name(prefix, "bias"), values_of(bias)}};
}

namespace {

void check_params(const LstmCellParams& p) {
  const Index h = p.hidden_dim();
  if (h < 1 || p.recurrent_weights.rows() != 4 * h || p.input_weights.rows() != 4 * h ||
      p.bias.size() != 4 * h)
    throw ShapeError("LSTM parameter arrays are inconsistent with hidden_dim " +
                     std::to_string(h));
}

MatrixXd sigmoid(const MatrixXd& z) {
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

}  // namespace

LstmState lstm_step(const LstmCellParams& params, const LstmState& state, const MatrixXd& x,
                    LstmStepCache* cache) {
  check_params(params);
  const Index h = params.hidden_dim();
  if (x.rows() != params.in_dim())
    throw ShapeError("LSTM input has " + std::to_string(x.rows()) + " rows, cell expects " +
                     std::to_string(params.in_dim()));
  if (state.hidden.rows() != h || state.cell.rows() != h || state.hidden.cols() != x.cols() ||
      state.cell.cols() != x.cols())
    throw ShapeError("LSTM state does not match the cell or the input batch");

  MatrixXd z = params.input_weights * x;
  z.noalias() += params.recurrent_weights * state.hidden;
  z.colwise() += params.bias;

  MatrixXd gates(4 * h, x.cols());
  gates.topRows(2 * h) = sigmoid(z.topRows(2 * h));
  gates.middleRows(2 * h, h) = z.middleRows(2 * h, h).array().tanh().matrix();
  gates.bottomRows(h) = sigmoid(z.bottomRows(h));

  LstmState next;
  next.cell = gates.middleRows(h, h).cwiseProduct(state.cell) +
              gates.topRows(h).cwiseProduct(gates.middleRows(2 * h, h));
  MatrixXd cell_tanh = next.cell.array().tanh().matrix();
  next.hidden = gates.bottomRows(h).cwiseProduct(cell_tanh);

  if (cache != nullptr) {
    cache->input = x;
    cache->prev_hidden = state.hidden;
    cache->prev_cell = state.cell;
    cache->gates = std::move(gates);
    cache->cell = next.cell;
    cache->cell_tanh = std::move(cell_tanh);
  }
  return next;
}

LstmStepGradient lstm_step_backward(const LstmCellParams& params, const LstmStepCache& cache,
                                    const MatrixXd& grad_hidden, const MatrixXd& grad_cell,
                                    LstmCellParams* grads) {
  const Index h = params.hidden_dim();
  const Index b = cache.input.cols();
  if (cache.gates.rows() != 4 * h || cache.input.rows() != params.in_dim() ||
      grad_hidden.rows() != h || grad_hidden.cols() != b || grad_cell.rows() != h ||
      grad_cell.cols() != b)
    throw ShapeError("LSTM step cache or output gradients do not match the cell");

  const auto i = cache.gates.topRows(h).array();
  const auto f = cache.gates.middleRows(h, h).array();
  const auto g = cache.gates.middleRows(2 * h, h).array();
  const auto o = cache.gates.bottomRows(h).array();
  const auto tc = cache.cell_tanh.array();

  const MatrixXd dc =
      (grad_cell.array() + grad_hidden.array() * o * (1.0 - tc.square())).matrix();

  MatrixXd dz(4 * h, b);
  dz.topRows(h) = (dc.array() * g * i * (1.0 - i)).matrix();
  dz.middleRows(h, h) = (dc.array() * cache.prev_cell.array() * f * (1.0 - f)).matrix();
  dz.middleRows(2 * h, h) = (dc.array() * i * (1.0 - g.square())).matrix();
  dz.bottomRows(h) = (grad_hidden.array() * tc * o * (1.0 - o)).matrix();

  if (grads != nullptr) {
    grads->input_weights.noalias() += dz * cache.input.transpose();
    grads->recurrent_weights.noalias() += dz * cache.prev_hidden.transpose();
    grads->bias += dz.rowwise().sum();
  }

  LstmStepGradient out;
  out.input = params.input_weights.transpose() * dz;
  out.hidden = params.recurrent_weights.transpose() * dz;
  out.cell = (dc.array() * f).matrix();
  return out;
}

SequenceForward forward_sequence(const LstmCellParams& params, const LstmState& initial,
                                 const std::vector<MatrixXd>& inputs) {
  if (inputs.empty()) throw ConfigError("forward_sequence needs a nonempty input sequence");
  SequenceForward out;
  out.cache.in_dim = params.in_dim();
  out.cache.hidden_dim = params.hidden_dim();
  out.cache.batch = initial.batch();
  out.cache.steps.resize(inputs.size());
  out.hiddens.reserve(inputs.size());

  LstmState state = initial;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    state = lstm_step(params, state, inputs[t], &out.cache.steps[t]);
    out.hiddens.push_back(state.hidden);
  }
  out.final_state = std::move(state);
  return out;
}

SequenceGradient backward_through_time(const LstmCellParams& params, const SequenceCache& cache,
                                       const std::vector<MatrixXd>& output_gradients) {
  if (cache.in_dim != params.in_dim() || cache.hidden_dim != params.hidden_dim())
    throw ShapeError("sequence cache was produced by a differently shaped LSTM");
  if (cache.steps.empty() || output_gradients.size() != cache.steps.size())
    throw ShapeError("expected " + std::to_string(cache.steps.size()) +
                     " output gradients, got " + std::to_string(output_gradients.size()));

  SequenceGradient out;
  out.params = zeros_like(params);
  out.inputs.resize(cache.steps.size());

  const Index h = cache.hidden_dim;
  MatrixXd dh_next = MatrixXd::Zero(h, cache.batch);
  MatrixXd dc_next = MatrixXd::Zero(h, cache.batch);
  for (std::size_t k = cache.steps.size(); k-- > 0;) {
    const MatrixXd dh = output_gradients[k] + dh_next;
    LstmStepGradient g = lstm_step_backward(params, cache.steps[k], dh, dc_next, &out.params);
    out.inputs[k] = std::move(g.input);
    dh_next = std::move(g.hidden);
    dc_next = std::move(g.cell);
  }
  out.initial_state = {std::move(dh_next), std::move(dc_next)};
  return out;
}

}  // namespace aeplan::nn
