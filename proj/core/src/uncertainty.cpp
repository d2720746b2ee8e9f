#include "aeplan/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "aeplan/error.hpp"
#include "aeplan/nn/adam.hpp"
#include "aeplan/nn/init.hpp"
#include "aeplan/world_model.hpp"

namespace aeplan {

std::vector<nn::ParamSpan> AutoencoderParams::parameters(const std::string& prefix) {
  auto out = encoder.parameters(nn::join_name(prefix, "encoder"));
  for (auto& s : decoder.parameters(nn::join_name(prefix, "decoder"))) out.push_back(std::move(s));
  return out;
}

std::vector<nn::ConstParamSpan> AutoencoderParams::parameters(const std::string& prefix) const {
  auto out = encoder.parameters(nn::join_name(prefix, "encoder"));
  for (auto& s : decoder.parameters(nn::join_name(prefix, "decoder"))) out.push_back(std::move(s));
  return out;
}

AutoencoderParams init_autoencoder(Index input_dim, Index hidden_units, std::uint64_t seed) {
  nn::Rng rng(seed);
  AutoencoderParams p;
  p.encoder = nn::init_dense(input_dim, hidden_units, nn::Activation::tanh, rng);
  p.decoder = nn::init_dense(hidden_units, input_dim, nn::Activation::linear, rng);
  return p;
}

WindowSet build_windows(const Dataset& data, Index window, const NormStats& norm) {
  if (window < 1) throw ConfigError("window length T must be >= 1");
  data.validate();
  const Index pair = norm.state_dim() + norm.action_dim();
  Index total = 0;
  WindowSet out;
  for (const auto& e : data.episodes) {
    if (e.length() < window) {
      ++out.skipped_episodes;
      continue;
    }
    total += e.length() - window + 1;
  }
  out.windows.resize(window * pair, total);
  Index col = 0;
  for (const auto& e : data.episodes) {
    if (e.length() < window) continue;
    MatrixXd pairs(pair, e.length());
    for (Index t = 0; t < e.length(); ++t)
      pairs.col(t) << norm.normalize_state(e.observations[t]), norm.normalize_action(e.actions[t]);
    for (Index start = 0; start + window <= e.length(); ++start, ++col)
      for (Index k = 0; k < window; ++k)
        out.windows.block(k * pair, col, pair, 1) = pairs.col(start + k);
  }
  return out;
}

MatrixXd reconstruct(const AutoencoderParams& params, const MatrixXd& windows) {
  return nn::dense_forward_batch(params.decoder, nn::dense_forward_batch(params.encoder, windows));
}

double reconstruction_loss(const AutoencoderParams& params, const MatrixXd& windows, Index window,
                           ReconstructionLoss loss, AutoencoderParams* grads) {
  const MatrixXd code = nn::dense_forward_batch(params.encoder, windows);
  const MatrixXd out = nn::dense_forward_batch(params.decoder, code);
  const MatrixXd r = out - windows;
  const double batch = static_cast<double>(windows.cols());

  double value = 0.0;
  MatrixXd dout;
  if (loss == ReconstructionLoss::mse) {
    const double scale = 1.0 / (batch * static_cast<double>(windows.rows()));
    value = r.squaredNorm() * scale;
    if (grads != nullptr) dout = 2.0 * scale * r;
  } else {
    const double scale = 1.0 / (batch * static_cast<double>(window));
    const Eigen::RowVectorXd norms = r.colwise().norm();
    value = norms.sum() * scale;
    if (grads != nullptr) {
      // The root is not differentiable at zero residual; a tiny floor keeps it finite.
      const Eigen::RowVectorXd safe = norms.array().max(1e-12);
      dout = scale * (r.array().rowwise() / safe.array()).matrix();
    }
  }
  if (grads != nullptr) {
    const MatrixXd dcode = nn::dense_backward(params.decoder, code, out, dout, &grads->decoder);
    nn::dense_backward(params.encoder, windows, code, dcode, &grads->encoder);
  }
  return value;
}

AutoencoderTraining train_autoencoder(const WindowSet& windows, Index window, Index state_dim,
                                      Index action_dim, const AutoencoderTrainConfig& config) {
  if (windows.count() == 0) throw ConfigError("cannot train an autoencoder on zero windows");
  if (windows.windows.rows() != window * (state_dim + action_dim))
    throw ShapeError("window dimension does not equal T * (N + M)");
  if (config.batch_size < 1 || config.epochs < 0 || config.hidden_units < 1)
    throw ConfigError("autoencoder training needs batch_size, hidden_units >= 1");

  AutoencoderTraining result;
  auto& model = result.model;
  model.window = window;
  model.state_dim = state_dim;
  model.action_dim = action_dim;
  model.seed = config.seed;
  model.params = init_autoencoder(windows.windows.rows(), config.hidden_units, config.seed);

  nn::AdamState adam = nn::AdamState::for_parameters(model.params);
  const nn::AdamConfig adam_config{.learning_rate = config.learning_rate};
  nn::Rng rng(config.seed ^ 0xa5a5a5a5deadbeefULL);
  std::vector<Index> order(static_cast<std::size_t>(windows.count()));
  std::iota(order.begin(), order.end(), Index{0});

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t first = 0; first < order.size();
         first += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t last =
          std::min(order.size(), first + static_cast<std::size_t>(config.batch_size));
      MatrixXd batch(windows.windows.rows(), static_cast<Index>(last - first));
      for (std::size_t k = first; k < last; ++k)
        batch.col(static_cast<Index>(k - first)) = windows.windows.col(order[k]);
      AutoencoderParams grads = nn::zeros_like(model.params);
      const double loss = reconstruction_loss(model.params, batch, window, config.loss, &grads);
      nn::adam_update(model.params, grads, adam, adam_config);
      epoch_loss += loss * static_cast<double>(batch.cols());
    }
    result.training_curve.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  return result;
}

VectorXd uncertainty_batch(const UncertaintyModel& model, const MatrixXd& windows) {
  if (windows.rows() != model.window_dim())
    throw ShapeError("window has " + std::to_string(windows.rows()) +
                     " entries, the autoencoder expects " + std::to_string(model.window_dim()));
  const MatrixXd r = reconstruct(model.params, windows) - windows;
  return r.colwise().norm().transpose() / static_cast<double>(model.window);
}

double uncertainty_u(const UncertaintyModel& model, const VectorXd& window) {
  return uncertainty_batch(model, window)[0];
}

MatrixXd uncertainty_gradient(const UncertaintyModel& model, const MatrixXd& windows,
                              const VectorXd& weights) {
  if (windows.rows() != model.window_dim() || weights.size() != windows.cols())
    throw ShapeError("uncertainty_gradient operands do not match the autoencoder");
  const auto& p = model.params;
  const MatrixXd code = nn::dense_forward_batch(p.encoder, windows);
  const MatrixXd out = nn::dense_forward_batch(p.decoder, code);
  const MatrixXd r = windows - out;
  const Eigen::RowVectorXd norms = r.colwise().norm();

  MatrixXd unit(r.rows(), r.cols());
  for (Index b = 0; b < r.cols(); ++b) {
    const double scale = norms[b] > 0.0 ? weights[b] / (static_cast<double>(model.window) * norms[b]) : 0.0;
    unit.col(b) = r.col(b) * scale;
  }
  // u = |x - AE(x)| / T, so du/dx = unit - J_AE^T unit.
  const MatrixXd dcode = nn::dense_backward(p.decoder, code, out, unit, nullptr);
  const MatrixXd through = nn::dense_backward(p.encoder, windows, code, dcode, nullptr);
  return unit - through;
}

std::vector<VectorXd> history_pairs(const UncertaintyModel& model, const NormStats& norm,
                                    const History& history) {
  const Index needed = model.window - 1;
  if (history.length() < needed)
    throw ConfigError("uncertainty windows need " + std::to_string(needed) +
                      " warm-up steps of real history, got " + std::to_string(history.length()) +
                      "; supply more warm-up steps");
  std::vector<VectorXd> out;
  for (Index j = history.length() - needed; j < history.length(); ++j) {
    VectorXd pair(norm.state_dim() + norm.action_dim());
    pair << norm.normalize_state(history.observations[j]), norm.normalize_action(history.actions[j]);
    out.push_back(std::move(pair));
  }
  return out;
}

MatrixXd window_at(const UncertaintyModel& model, const std::vector<VectorXd>& past,
                   const std::vector<MatrixXd>& plan_pairs, Index step) {
  const Index T = model.window;
  const Index pair = model.state_dim + model.action_dim;
  if (step < 0 || step >= static_cast<Index>(plan_pairs.size()))
    throw ShapeError("window step outside the plan");
  const Index batch = plan_pairs[static_cast<std::size_t>(step)].cols();
  MatrixXd w(T * pair, batch);
  for (Index k = 0; k < T; ++k) {
    const Index i = step - (T - 1) + k;  // plan index of window slot k
    if (i >= 0) {
      w.middleRows(k * pair, pair) = plan_pairs[static_cast<std::size_t>(i)];
    } else {
      const Index j = static_cast<Index>(past.size()) + i;
      if (j < 0) throw ConfigError("not enough history pairs to fill the window");
      w.middleRows(k * pair, pair) = past[static_cast<std::size_t>(j)].replicate(1, batch);
    }
  }
  return w;
}

UncertaintyProfile trajectory_uncertainty(const UncertaintyModel& model, const NormStats& norm,
                                          const History& history,
                                          const std::vector<VectorXd>& predicted_states,
                                          const std::vector<VectorXd>& actions) {
  UncertaintyProfile profile;
  if (actions.empty()) return profile;
  if (predicted_states.size() + 1 < actions.size())
    throw ShapeError("need a predicted state before every plan action after the first");
  const auto past = history_pairs(model, norm, history);

  std::vector<MatrixXd> pairs;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const VectorXd& s = i == 0 ? history.current() : predicted_states[i - 1];
    VectorXd p(norm.state_dim() + norm.action_dim());
    p << norm.normalize_state(s), norm.normalize_action(actions[i]);
    pairs.emplace_back(std::move(p));
  }
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const double u = uncertainty_batch(model, window_at(model, past, pairs, static_cast<Index>(i)))[0];
    profile.per_step.push_back(u);
    profile.cumulative += u;
  }
  return profile;
}

nn::Checkpoint to_checkpoint(const UncertaintyModel& model, const NormStats& norm) {
  nn::Checkpoint ckpt;
  ckpt.kind = "autoencoder";
  ckpt.seed = model.seed;
  ckpt.dims = {{"T", model.window},
               {"N", model.state_dim},
               {"M", model.action_dim},
               {"D", model.window_dim()},
               {"hidden", model.params.encoder.out_dim()}};
  nn::append_arrays(ckpt, model.params);
  append_norm_arrays(ckpt, norm);
  return ckpt;
}

UncertaintyModel uncertainty_from_checkpoint(const nn::Checkpoint& ckpt, NormStats* norm) {
  nn::require_kind(ckpt, "autoencoder");
  UncertaintyModel model;
  model.window = ckpt.dim("T");
  model.state_dim = ckpt.dim("N");
  model.action_dim = ckpt.dim("M");
  model.seed = ckpt.seed;
  const Index hidden = ckpt.dim("hidden");
  if (model.window < 1 || model.state_dim < 1 || model.action_dim < 1 || hidden < 1 ||
      ckpt.dim("D") != model.window_dim())
    throw CheckpointError(CheckpointError::Kind::dimension,
                          "autoencoder checkpoint dims are inconsistent (D != T * (N + M))");
  model.params = init_autoencoder(model.window_dim(), hidden, 0);
  nn::restore_arrays(ckpt, model.params);
  if (norm != nullptr) *norm = norm_from_checkpoint(ckpt, model.state_dim, model.action_dim);
  return model;
}

}  // namespace aeplan
