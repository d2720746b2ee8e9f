#include "aeplan/planners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "aeplan/error.hpp"
#include "aeplan/nn/init.hpp"

namespace aeplan {

void Objective::validate() const {
  if (horizon < 1) throw ConfigError("planning horizon must be >= 1");
  if (mode == PlanMode::control && !(alpha >= 0.0))
    throw ConfigError("alpha must be >= 0");
  if (!std::isfinite(beta)) throw ConfigError("beta must be finite");
  if (uncertainty_cap && !(*uncertainty_cap > 0.0))
    throw ConfigError("uncertainty cap must be > 0");
}

namespace {

void check_context(const PlanningContext& ctx, const Objective& objective) {
  objective.validate();
  if (objective.needs_uncertainty() && ctx.uncertainty == nullptr)
    throw ConfigError("this objective needs an uncertainty model");
  if (ctx.uncertainty != nullptr &&
      (ctx.uncertainty->state_dim != ctx.model.params.state_dim() ||
       ctx.uncertainty->action_dim != ctx.model.params.action_dim()))
    throw ShapeError("autoencoder and world model disagree on state/action dimensions");
  if (ctx.env.observation_dim() != ctx.model.params.state_dim() ||
      ctx.env.action_dim() != ctx.model.params.action_dim())
    throw ShapeError("environment and world model disagree on state/action dimensions");
}

// actions[c][i] -> per-step M x batch blocks
std::vector<MatrixXd> stack_steps(const std::vector<ActionSequence>& candidates, Index horizon,
                                  Index action_dim) {
  const Index batch = static_cast<Index>(candidates.size());
  std::vector<MatrixXd> steps(static_cast<std::size_t>(horizon), MatrixXd(action_dim, batch));
  for (Index c = 0; c < batch; ++c) {
    const auto& seq = candidates[static_cast<std::size_t>(c)];
    if (static_cast<Index>(seq.size()) != horizon)
      throw ShapeError("candidate " + std::to_string(c) + " has " + std::to_string(seq.size()) +
                       " actions, the horizon is " + std::to_string(horizon));
    for (Index i = 0; i < horizon; ++i) {
      const auto& a = seq[static_cast<std::size_t>(i)];
      if (a.size() != action_dim) throw ShapeError("plan action has the wrong dimension");
      steps[static_cast<std::size_t>(i)].col(c) = a;
    }
  }
  return steps;
}

// Normalised (state, action) pair blocks for every plan step of a batch.
std::vector<MatrixXd> plan_pairs(const NormStats& norm, const VectorXd& start,
                                 const BatchRollout& fwd, const std::vector<MatrixXd>& steps) {
  const Index n = norm.state_dim();
  const Index m = norm.action_dim();
  std::vector<MatrixXd> pairs;
  pairs.reserve(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const Index batch = steps[i].cols();
    MatrixXd p(n + m, batch);
    const MatrixXd s = i == 0 ? MatrixXd(start.replicate(1, batch)) : fwd.states[i - 1];
    p.topRows(n) = (s.colwise() - norm.state_mean).array().colwise() / norm.state_std.array();
    p.bottomRows(m) =
        (steps[i].colwise() - norm.action_mean).array().colwise() / norm.action_std.array();
    pairs.push_back(std::move(p));
  }
  return pairs;
}

struct BatchEvaluation {
  BatchRollout fwd;
  MatrixXd costs;        // horizon x batch
  MatrixXd uncertainty;  // horizon x batch, empty without an autoencoder
};

BatchEvaluation evaluate_batch(const PlanningContext& ctx, const std::vector<MatrixXd>& steps,
                               bool keep_cache) {
  BatchEvaluation ev;
  const nn::LstmState warm = warm_up(ctx.model, ctx.history);
  ev.fwd = rollout_batch(ctx.model, warm, ctx.history.current(), steps, keep_cache);
  const Index horizon = static_cast<Index>(steps.size());
  const Index batch = steps.front().cols();

  ev.costs.resize(horizon, batch);
  for (Index i = 0; i < horizon; ++i) {
    const auto& s = ev.fwd.states[static_cast<std::size_t>(i)];
    const auto& a = steps[static_cast<std::size_t>(i)];
    for (Index c = 0; c < batch; ++c) {
      const VectorXd sc = s.col(c);
      ev.costs(i, c) = sc.allFinite() ? ctx.env.cost_of(sc, a.col(c))
                                      : std::numeric_limits<double>::quiet_NaN();
    }
  }

  if (ctx.uncertainty != nullptr) {
    const auto& ae = *ctx.uncertainty;
    const auto past = history_pairs(ae, ctx.model.norm, ctx.history);
    const auto pairs = plan_pairs(ctx.model.norm, ctx.history.current(), ev.fwd, steps);
    ev.uncertainty.resize(horizon, batch);
    for (Index i = 0; i < horizon; ++i)
      ev.uncertainty.row(i) = uncertainty_batch(ae, window_at(ae, past, pairs, i)).transpose();
  }
  return ev;
}

PlanResult extract(const BatchEvaluation& ev, const std::vector<MatrixXd>& steps, Index column,
                   const Objective& objective) {
  PlanResult r;
  const Index horizon = static_cast<Index>(steps.size());
  const bool with_u = ev.uncertainty.size() > 0;
  double score = 0.0;
  for (Index i = 0; i < horizon; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    r.actions.push_back(steps[idx].col(column));
    r.predicted.states.push_back(ev.fwd.states[idx].col(column));
    const double cost = ev.costs(i, column);
    r.predicted.costs.push_back(cost);
    r.predicted_cumulative_cost += cost;
    const double u = with_u ? ev.uncertainty(i, column) : 0.0;
    if (with_u) {
      r.uncertainty.per_step.push_back(u);
      r.uncertainty.cumulative += u;
    }
    score += objective.mode == PlanMode::explore ? u : -objective.alpha * cost - objective.beta * u;
  }
  r.score = score;
  r.admissible = std::isfinite(score);
  if (objective.mode == PlanMode::explore && objective.uncertainty_cap &&
      r.uncertainty.cumulative > *objective.uncertainty_cap)
    r.admissible = false;
  return r;
}

ActionSequence clamp_sequence(const env::ActionBounds& bounds, ActionSequence actions) {
  for (auto& a : actions) a = bounds.clamp(a);
  return actions;
}

}  // namespace

std::vector<ActionSequence> sample_candidates(const env::ActionBounds& bounds, Index horizon,
                                              const ShootingConfig& config) {
  if (config.candidates < 1) throw ConfigError("shooting needs K >= 1 candidates");
  if (config.hold_max < 1) throw ConfigError("hold_max must be >= 1");
  if (horizon < 1) throw ConfigError("planning horizon must be >= 1");
  nn::Rng rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<Index> hold(1, config.hold_max);
  const Index m = bounds.lower.size();
  std::vector<ActionSequence> out(static_cast<std::size_t>(config.candidates));
  for (auto& seq : out) {
    seq.reserve(static_cast<std::size_t>(horizon));
    while (static_cast<Index>(seq.size()) < horizon) {
      VectorXd a(m);
      for (Index j = 0; j < m; ++j)
        a[j] = bounds.lower[j] + (bounds.upper[j] - bounds.lower[j]) * unit(rng);
      const Index repeat = config.hold_max > 1 ? hold(rng) : 1;
      for (Index r = 0; r < repeat && static_cast<Index>(seq.size()) < horizon; ++r)
        seq.push_back(a);
    }
  }
  return out;
}

std::vector<PlanResult> score_candidates(const PlanningContext& ctx,
                                         const std::vector<ActionSequence>& candidates,
                                         const Objective& objective) {
  check_context(ctx, objective);
  if (candidates.empty()) return {};
  const auto steps = stack_steps(candidates, objective.horizon, ctx.model.params.action_dim());
  const BatchEvaluation ev = evaluate_batch(ctx, steps, false);
  std::vector<PlanResult> out;
  out.reserve(candidates.size());
  for (Index c = 0; c < static_cast<Index>(candidates.size()); ++c)
    out.push_back(extract(ev, steps, c, objective));
  return out;
}

PlanResult score_sequence(const PlanningContext& ctx, const ActionSequence& actions,
                          const Objective& objective) {
  auto scored = score_candidates(ctx, {actions}, objective);
  PlanResult& r = scored.front();
  for (Index i = 0; i < r.predicted.length(); ++i) {
    const auto& s = r.predicted.states[static_cast<std::size_t>(i)];
    for (Index d = 0; d < s.size(); ++d)
      if (!std::isfinite(s[d]))
        throw NumericError("rollout diverged at step " + std::to_string(i) +
                           " in state dimension " + std::to_string(d));
  }
  return std::move(r);
}

const PlanResult& select_best(const std::vector<PlanResult>& plans) {
  const PlanResult* best = nullptr;
  for (const auto& p : plans)
    if (p.admissible && (best == nullptr || p.score > best->score)) best = &p;
  if (best == nullptr)
    throw NoAdmissiblePlan("no admissible plan among " + std::to_string(plans.size()) +
                           " candidates");
  return *best;
}

PlanResult random_shooting(const PlanningContext& ctx, const Objective& objective,
                           const ShootingConfig& shooting) {
  const auto candidates = sample_candidates(ctx.env.action_bounds(), objective.horizon, shooting);
  const auto scored = score_candidates(ctx, candidates, objective);
  return select_best(scored);
}

ScoreGradient score_gradient(const PlanningContext& ctx, const ActionSequence& actions,
                             const Objective& objective) {
  check_context(ctx, objective);
  const auto& norm = ctx.model.norm;
  const Index n = norm.state_dim();
  const Index m = norm.action_dim();
  const Index horizon = objective.horizon;
  const auto steps = stack_steps({actions}, horizon, m);
  const BatchEvaluation ev = evaluate_batch(ctx, steps, true);

  ScoreGradient out;
  std::vector<MatrixXd> state_grads(static_cast<std::size_t>(horizon), MatrixXd::Zero(n, 1));
  std::vector<VectorXd> direct(static_cast<std::size_t>(horizon), VectorXd::Zero(m));

  if (objective.mode == PlanMode::control) {
    for (Index i = 0; i < horizon; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      out.score -= objective.alpha * ev.costs(i, 0);
      if (objective.alpha == 0.0) continue;
      const auto g = ctx.env.cost_gradient(ev.fwd.states[idx].col(0), actions[idx]);
      state_grads[idx].col(0) -= objective.alpha * g.observation;
      direct[idx] -= objective.alpha * g.action;
    }
  }

  const double weight = objective.mode == PlanMode::explore ? 1.0 : -objective.beta;
  if (ctx.uncertainty != nullptr) {
    const auto& ae = *ctx.uncertainty;
    const Index pair = n + m;
    const Index T = ae.window;
    out.cumulative_uncertainty = ev.uncertainty.col(0).sum();
    out.score += weight * out.cumulative_uncertainty;
    if (weight != 0.0) {
      const auto past = history_pairs(ae, norm, ctx.history);
      const auto pairs = plan_pairs(norm, ctx.history.current(), ev.fwd, steps);
      MatrixXd windows(ae.window_dim(), horizon);
      for (Index i = 0; i < horizon; ++i) windows.col(i) = window_at(ae, past, pairs, i);
      const MatrixXd g = uncertainty_gradient(ae, windows, VectorXd::Constant(horizon, weight));
      for (Index i = 0; i < horizon; ++i) {
        for (Index k = 0; k < T; ++k) {
          const Index j = i - (T - 1) + k;  // plan step feeding slot k
          if (j < 0) continue;
          const auto slot = g.col(i).segment(k * pair, pair);
          if (j > 0)
            state_grads[static_cast<std::size_t>(j - 1)].col(0) +=
                slot.head(n).cwiseQuotient(norm.state_std);
          direct[static_cast<std::size_t>(j)] += slot.tail(m).cwiseQuotient(norm.action_std);
        }
      }
    }
  }

  const auto through_model = rollout_backward(ctx.model, ev.fwd, state_grads);
  out.actions.reserve(static_cast<std::size_t>(horizon));
  for (Index i = 0; i < horizon; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    out.actions.push_back(through_model[idx].col(0) + direct[idx]);
  }
  return out;
}

PlanResult gradient_plan(const PlanningContext& ctx, const Objective& objective,
                         const ActionSequence& init_actions, const GradientConfig& config) {
  if (config.iterations < 0 || !(config.step_size > 0.0))
    throw ConfigError("gradient planning needs iterations >= 0 and a positive step size");
  if (static_cast<Index>(init_actions.size()) != objective.horizon)
    throw ShapeError("initial plan length does not match the horizon");
  const auto& bounds = ctx.env.action_bounds();
  const VectorXd scale = ctx.model.norm.action_std.cwiseAbs2();

  ActionSequence current = clamp_sequence(bounds, init_actions);
  PlanResult best = score_sequence(ctx, current, objective);
  const bool capped = objective.mode == PlanMode::explore && objective.uncertainty_cap.has_value();
  if (capped && !best.admissible) return best;

  int done = 0;
  bool fault = false;
  for (; done < config.iterations; ++done) {
    ScoreGradient g;
    try {
      g = score_gradient(ctx, current, objective);
    } catch (const NumericError&) {
      fault = true;
      break;
    }
    bool finite = true;
    for (const auto& a : g.actions) finite = finite && a.allFinite();
    if (!finite) {
      fault = true;
      break;
    }
    // A step of size eta in normalised units is eta * std^2 * grad in raw units.
    for (std::size_t i = 0; i < current.size(); ++i)
      current[i] = bounds.clamp(current[i] + config.step_size * scale.cwiseProduct(g.actions[i]));
    PlanResult next;
    try {
      next = score_sequence(ctx, current, objective);
    } catch (const NumericError&) {
      fault = true;
      break;
    }
    if (capped && !next.admissible) {
      ++done;
      break;
    }
    if (next.admissible && next.score > best.score) best = std::move(next);
  }
  best.iterations = done;
  best.numeric_fault = fault;
  return best;
}

std::vector<PlanResult> filter_by_uncertainty_range(const std::vector<PlanResult>& plans, double lo,
                                                    double hi) {
  if (!(lo <= hi)) throw ConfigError("uncertainty range needs lo <= hi");
  std::vector<PlanResult> out;
  for (const auto& p : plans)
    if (p.uncertainty.cumulative >= lo && p.uncertainty.cumulative <= hi) out.push_back(p);
  return out;
}

VectorXd mpc_baseline_step(const PlanningContext& ctx, const Objective& objective,
                           const ShootingConfig& shooting) {
  Objective blind = objective;
  blind.mode = PlanMode::control;
  blind.beta = 0.0;
  blind.uncertainty_cap.reset();
  return random_shooting(ctx, blind, shooting).actions.front();
}

Index stop_index(const PlanResult& plan, double u_threshold) {
  const Index horizon = static_cast<Index>(plan.actions.size());
  if (horizon == 0) throw ConfigError("cannot execute an empty plan");
  const auto& u = plan.uncertainty.per_step;
  for (Index i = 0; i < static_cast<Index>(u.size()) && i < horizon; ++i)
    if (u[static_cast<std::size_t>(i)] > u_threshold) return std::max<Index>(i, 1);
  return horizon;
}

ExecutionResult open_loop_execute(env::Environment& env, const PlanResult& plan,
                                  double u_threshold) {
  const Index stop = stop_index(plan, u_threshold);
  ExecutionResult out;
  for (Index i = 0; i < stop; ++i) {
    const auto r = env.step(plan.actions[static_cast<std::size_t>(i)]);
    if (r.fault) {
      out.fault = true;
      break;
    }
    out.observations.push_back(r.observation);
    out.costs.push_back(r.cost);
    out.realized_cost += r.cost;
    ++out.executed_steps;
    if (r.done) break;
  }
  return out;
}

double trajectory_mse(const PlanResult& plan, const ExecutionResult& executed) {
  if (executed.executed_steps == 0) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  Index count = 0;
  for (Index i = 0; i < executed.executed_steps; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    sum += (plan.predicted.states[idx] - executed.observations[idx]).squaredNorm();
    count += executed.observations[idx].size();
  }
  return sum / static_cast<double>(count);
}

}  // namespace aeplan
