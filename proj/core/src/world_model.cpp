#include "aeplan/world_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "aeplan/error.hpp"
#include "aeplan/nn/adam.hpp"
#include "aeplan/nn/init.hpp"

namespace aeplan {

std::vector<nn::ParamSpan> WorldModelParams::parameters(const std::string& prefix) {
  auto out = lstm.parameters(nn::join_name(prefix, "lstm"));
  for (auto& s : hidden.parameters(nn::join_name(prefix, "hidden"))) out.push_back(std::move(s));
  for (auto& s : output.parameters(nn::join_name(prefix, "output"))) out.push_back(std::move(s));
  return out;
}

std::vector<nn::ConstParamSpan> WorldModelParams::parameters(const std::string& prefix) const {
  auto out = lstm.parameters(nn::join_name(prefix, "lstm"));
  for (auto& s : hidden.parameters(nn::join_name(prefix, "hidden"))) out.push_back(std::move(s));
  for (auto& s : output.parameters(nn::join_name(prefix, "output"))) out.push_back(std::move(s));
  return out;
}

WorldModelParams init_world_model(Index state_dim, Index action_dim, std::uint64_t seed,
                                  const WorldModelShape& shape) {
  if (state_dim < 1 || action_dim < 1) throw ShapeError("world model needs N, M >= 1");
  nn::Rng rng(seed);
  WorldModelParams p;
  p.lstm = nn::init_lstm(state_dim + action_dim, shape.hidden_units, rng);
  p.hidden = nn::init_dense(shape.hidden_units, shape.dense_units, nn::Activation::relu, rng);
  p.output = nn::init_dense(shape.dense_units, state_dim, nn::Activation::linear, rng);
  return p;
}

double sequence_loss(const WorldModelParams& params, const std::vector<MatrixXd>& inputs,
                     const std::vector<MatrixXd>& targets, WorldModelParams* grads) {
  if (inputs.empty() || inputs.size() != targets.size())
    throw ShapeError("sequence_loss needs matching, nonempty input and target sequences");
  const Index batch = inputs.front().cols();
  const auto steps = inputs.size();
  const double scale = 1.0 / static_cast<double>(steps * batch * params.state_dim());

  auto fwd = nn::forward_sequence(params.lstm, nn::LstmState::zeros(params.lstm.hidden_dim(), batch),
                                  inputs);
  double loss = 0.0;
  std::vector<MatrixXd> dh(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const MatrixXd z = nn::dense_forward_batch(params.hidden, fwd.hiddens[t]);
    const MatrixXd y = nn::dense_forward_batch(params.output, z);
    if (targets[t].rows() != y.rows() || targets[t].cols() != batch)
      throw ShapeError("target at step " + std::to_string(t) + " has the wrong shape");
    const MatrixXd r = y - targets[t];
    loss += r.squaredNorm() * scale;
    if (grads != nullptr) {
      const MatrixXd dy = 2.0 * scale * r;
      const MatrixXd dz = nn::dense_backward(params.output, z, y, dy, &grads->output);
      dh[t] = nn::dense_backward(params.hidden, fwd.hiddens[t], z, dz, &grads->hidden);
    }
  }
  if (grads != nullptr) {
    auto g = nn::backward_through_time(params.lstm, fwd.cache, dh);
    grads->lstm.input_weights += g.params.input_weights;
    grads->lstm.recurrent_weights += g.params.recurrent_weights;
    grads->lstm.bias += g.params.bias;
  }
  return loss;
}

namespace {

struct NormalisedEpisode {
  MatrixXd inputs;   // (N+M) x L
  MatrixXd targets;  // N x L
};

NormalisedEpisode normalise_episode(const Episode& e, const NormStats& norm) {
  const Index n = norm.state_dim();
  const Index m = norm.action_dim();
  NormalisedEpisode out{MatrixXd(n + m, e.length()), MatrixXd(n, e.length())};
  for (Index t = 0; t < e.length(); ++t) {
    out.inputs.col(t) << norm.normalize_state(e.observations[t]),
        norm.normalize_action(e.actions[t]);
    out.targets.col(t) = norm.normalize_delta(e.observations[t + 1] - e.observations[t]);
  }
  return out;
}

struct Segment {
  std::size_t episode;
  Index start;
};

}  // namespace

WorldModelTraining train_world_model(const Dataset& data, const WorldModelTrainConfig& config) {
  if (data.episodes.empty()) throw ConfigError("cannot train a world model on an empty dataset");
  if (config.truncation_length < 1 || config.batch_size < 1 || config.epochs < 0)
    throw ConfigError("world model training needs truncation_length, batch_size >= 1");
  data.validate();
  const Index trunc = config.truncation_length;
  if (std::none_of(data.episodes.begin(), data.episodes.end(),
                   [&](const Episode& e) { return e.length() > trunc; }))
    throw ConfigError("no episode is longer than the truncation length " + std::to_string(trunc));

  WorldModelTraining result;
  result.model.norm = compute_norm_stats(data);
  result.model.seed = config.seed;
  result.model.params =
      init_world_model(data.state_dim(), data.action_dim(), config.seed, config.shape);

  std::vector<NormalisedEpisode> episodes;
  for (const auto& e : data.episodes) episodes.push_back(normalise_episode(e, result.model.norm));

  auto& params = result.model.params;
  nn::AdamState adam = nn::AdamState::for_parameters(params);
  const nn::AdamConfig adam_config{.learning_rate = config.learning_rate};
  nn::Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const Index in_dim = params.lstm.in_dim();
  const Index n = params.state_dim();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<Segment> segments;
    for (std::size_t k = 0; k < episodes.size(); ++k) {
      const Index len = episodes[k].inputs.cols();
      if (len < trunc) continue;
      const Index max_offset = std::min<Index>(trunc - 1, len - trunc);
      const Index offset =
          std::uniform_int_distribution<Index>(0, max_offset)(rng);
      // Tile from the random offset; extra head and tail segments keep every
      // step of the episode in every epoch.
      if (offset > 0) segments.push_back({k, 0});
      Index s = offset;
      for (; s + trunc <= len; s += trunc) segments.push_back({k, s});
      if (s < len) segments.push_back({k, len - trunc});
    }
    std::shuffle(segments.begin(), segments.end(), rng);

    double epoch_loss = 0.0;
    for (std::size_t first = 0; first < segments.size();
         first += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t last =
          std::min(segments.size(), first + static_cast<std::size_t>(config.batch_size));
      const auto batch = static_cast<Index>(last - first);
      std::vector<MatrixXd> inputs(trunc, MatrixXd(in_dim, batch));
      std::vector<MatrixXd> targets(trunc, MatrixXd(n, batch));
      for (Index b = 0; b < batch; ++b) {
        const Segment& seg = segments[first + b];
        for (Index t = 0; t < trunc; ++t) {
          inputs[t].col(b) = episodes[seg.episode].inputs.col(seg.start + t);
          targets[t].col(b) = episodes[seg.episode].targets.col(seg.start + t);
        }
      }
      WorldModelParams grads = nn::zeros_like(params);
      const double loss = sequence_loss(params, inputs, targets, &grads);
      nn::adam_update(params, grads, adam, adam_config);
      epoch_loss += loss * static_cast<double>(batch);
    }
    result.training_curve.push_back(epoch_loss / static_cast<double>(segments.size()));
  }
  return result;
}

double PredictedTrajectory::cumulative_cost() const {
  return std::accumulate(costs.begin(), costs.end(), 0.0);
}

namespace {

VectorXd model_input(const NormStats& norm, const VectorXd& s, const VectorXd& a) {
  VectorXd x(s.size() + a.size());
  x << norm.normalize_state(s), norm.normalize_action(a);
  return x;
}

}  // namespace

StepPrediction predict_step(const WorldModel& model, const nn::LstmState& state,
                            const VectorXd& observation, const VectorXd& action) {
  const auto& p = model.params;
  StepPrediction out;
  out.state = nn::lstm_step(p.lstm, state, model_input(model.norm, observation, action));
  const VectorXd y = nn::dense_forward(p.output, nn::dense_forward(p.hidden, out.state.hidden));
  out.next_state = observation + model.norm.denormalize_delta(y);
  for (Index i = 0; i < out.next_state.size(); ++i)
    if (!std::isfinite(out.next_state[i]))
      throw NumericError("world model produced a non-finite prediction in state dimension " +
                         std::to_string(i));
  return out;
}

nn::LstmState warm_up(const WorldModel& model, const History& history) {
  if (history.observations.size() != history.actions.size() + 1)
    throw ConfigError("history needs exactly one more observation than actions");
  nn::LstmState state = nn::LstmState::zeros(model.params.lstm.hidden_dim());
  for (Index t = 0; t < history.length(); ++t)
    state = nn::lstm_step(model.params.lstm, state,
                          model_input(model.norm, history.observations[t], history.actions[t]));
  return state;
}

BatchRollout rollout_batch(const WorldModel& model, const nn::LstmState& warm,
                           const VectorXd& start, const std::vector<MatrixXd>& actions,
                           bool keep_cache) {
  const auto& p = model.params;
  const auto& norm = model.norm;
  const Index n = p.state_dim();
  const Index m = p.action_dim();
  if (start.size() != n) throw ShapeError("rollout start state has the wrong dimension");
  BatchRollout out;
  if (actions.empty()) return out;
  const Index batch = actions.front().cols();

  nn::LstmState state{warm.hidden.replicate(1, batch), warm.cell.replicate(1, batch)};
  MatrixXd current = start.replicate(1, batch);
  const VectorXd inv_state_std = norm.state_std.cwiseInverse();
  const VectorXd inv_action_std = norm.action_std.cwiseInverse();

  out.states.reserve(actions.size());
  if (keep_cache) out.cache.resize(actions.size());
  MatrixXd x(n + m, batch);
  for (std::size_t t = 0; t < actions.size(); ++t) {
    if (actions[t].rows() != m || actions[t].cols() != batch)
      throw ShapeError("rollout actions at step " + std::to_string(t) + " have the wrong shape");
    x.topRows(n) = (current.colwise() - norm.state_mean).array().colwise() * inv_state_std.array();
    x.bottomRows(m) =
        (actions[t].colwise() - norm.action_mean).array().colwise() * inv_action_std.array();
    RolloutStepCache* c = keep_cache ? &out.cache[t] : nullptr;
    state = nn::lstm_step(p.lstm, state, x, c ? &c->lstm : nullptr);
    MatrixXd z = nn::dense_forward_batch(p.hidden, state.hidden);
    MatrixXd y = nn::dense_forward_batch(p.output, z);
    current += ((y.array().colwise() * norm.delta_std.array()).colwise() +
                norm.delta_mean.array())
                   .matrix();
    out.states.push_back(current);
    if (c) {
      c->hidden_out = std::move(z);
      c->output = std::move(y);
    }
  }
  return out;
}

std::vector<MatrixXd> rollout_backward(const WorldModel& model, const BatchRollout& forward,
                                       const std::vector<MatrixXd>& state_grads) {
  const auto& p = model.params;
  const auto& norm = model.norm;
  const std::size_t steps = forward.states.size();
  if (forward.cache.size() != steps)
    throw ConfigError("rollout_backward needs a forward pass run with keep_cache");
  if (state_grads.size() != steps) throw ShapeError("one state gradient per predicted step");
  std::vector<MatrixXd> action_grads(steps);
  if (steps == 0) return action_grads;

  const Index n = p.state_dim();
  const Index m = p.action_dim();
  const Index h = p.lstm.hidden_dim();
  const Index batch = forward.states.front().cols();
  MatrixXd carry_state = MatrixXd::Zero(n, batch);
  MatrixXd dh_next = MatrixXd::Zero(h, batch);
  MatrixXd dc_next = MatrixXd::Zero(h, batch);

  for (std::size_t t = steps; t-- > 0;) {
    const auto& c = forward.cache[t];
    const MatrixXd gs = state_grads[t] + carry_state;
    const MatrixXd dy = gs.array().colwise() * norm.delta_std.array();
    const MatrixXd dz = nn::dense_backward(p.output, c.hidden_out, c.output, dy, nullptr);
    const MatrixXd dh =
        nn::dense_backward(p.hidden, c.lstm.cell_tanh.cwiseProduct(c.lstm.gates.bottomRows(h)),
                           c.hidden_out, dz, nullptr) +
        dh_next;
    auto g = nn::lstm_step_backward(p.lstm, c.lstm, dh, dc_next, nullptr);
    carry_state = gs + (g.input.topRows(n).array().colwise() / norm.state_std.array()).matrix();
    action_grads[t] = g.input.bottomRows(m).array().colwise() / norm.action_std.array();
    dh_next = std::move(g.hidden);
    dc_next = std::move(g.cell);
  }
  return action_grads;
}

PredictedTrajectory rollout(const WorldModel& model, const History& history,
                            const std::vector<VectorXd>& actions,
                            const env::Environment& cost_model) {
  if (history.observations.empty()) throw ConfigError("rollout needs a nonempty history");
  PredictedTrajectory out;
  if (actions.empty()) return out;
  const nn::LstmState warm = warm_up(model, history);
  std::vector<MatrixXd> batched(actions.begin(), actions.end());
  const BatchRollout fwd = rollout_batch(model, warm, history.current(), batched, false);
  for (std::size_t t = 0; t < actions.size(); ++t) {
    VectorXd s = fwd.states[t].col(0);
    for (Index i = 0; i < s.size(); ++i)
      if (!std::isfinite(s[i]))
        throw NumericError("rollout diverged at step " + std::to_string(t) +
                           " in state dimension " + std::to_string(i));
    out.costs.push_back(cost_model.cost_of(s, actions[t]));
    out.states.push_back(std::move(s));
  }
  return out;
}

void append_norm_arrays(nn::Checkpoint& ckpt, const NormStats& norm) {
  auto put = [&](const char* name, const VectorXd& v) {
    ckpt.arrays.emplace_back(std::string("norm.") + name, std::vector<double>(v.data(), v.data() + v.size()));
  };
  put("state_mean", norm.state_mean);
  put("state_std", norm.state_std);
  put("action_mean", norm.action_mean);
  put("action_std", norm.action_std);
  put("delta_mean", norm.delta_mean);
  put("delta_std", norm.delta_std);
}

NormStats norm_from_checkpoint(const nn::Checkpoint& ckpt, Index state_dim, Index action_dim) {
  auto get = [&](const char* name, Index expected) {
    const auto& values = ckpt.array(std::string("norm.") + name);
    if (static_cast<Index>(values.size()) != expected)
      throw CheckpointError(CheckpointError::Kind::dimension,
                            std::string("normalisation array '") + name + "' has the wrong length");
    return VectorXd(Eigen::Map<const VectorXd>(values.data(), expected));
  };
  NormStats norm;
  norm.state_mean = get("state_mean", state_dim);
  norm.state_std = get("state_std", state_dim);
  norm.action_mean = get("action_mean", action_dim);
  norm.action_std = get("action_std", action_dim);
  norm.delta_mean = get("delta_mean", state_dim);
  norm.delta_std = get("delta_std", state_dim);
  return norm;
}

nn::Checkpoint to_checkpoint(const WorldModel& model) {
  const auto& p = model.params;
  nn::Checkpoint ckpt;
  ckpt.kind = "world_model";
  ckpt.seed = model.seed;
  ckpt.dims = {{"state", p.state_dim()},
               {"action", p.action_dim()},
               {"lstm_hidden", p.lstm.hidden_dim()},
               {"dense_hidden", p.hidden.out_dim()}};
  nn::append_arrays(ckpt, p);
  append_norm_arrays(ckpt, model.norm);
  return ckpt;
}

WorldModel world_model_from_checkpoint(const nn::Checkpoint& ckpt) {
  nn::require_kind(ckpt, "world_model");
  const Index n = ckpt.dim("state");
  const Index m = ckpt.dim("action");
  const WorldModelShape shape{ckpt.dim("lstm_hidden"), ckpt.dim("dense_hidden")};
  if (n < 1 || m < 1 || shape.hidden_units < 1 || shape.dense_units < 1)
    throw CheckpointError(CheckpointError::Kind::dimension, "world model checkpoint has invalid dims");
  WorldModel model;
  model.seed = ckpt.seed;
  model.params = init_world_model(n, m, 0, shape);
  nn::restore_arrays(ckpt, model.params);
  model.norm = norm_from_checkpoint(ckpt, n, m);
  return model;
}

}  // namespace aeplan
