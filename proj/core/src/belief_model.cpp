// Copyright 2026 The fms Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fms/belief_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fms::belief {
namespace {

constexpr double kProbFloor = 1e-12;

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// -log P(y | logit u) with P clamped to [kProbFloor, 1 - kProbFloor].
double clamped_term(int rejected, double logit) {
  const double raw = rejected ? softplus(-logit) : softplus(logit);
  static const double lo = -std::log1p(-kProbFloor);
  static const double hi = -std::log(kProbFloor);
  return std::clamp(raw, lo, hi);
}

void check_temperature(const TemperatureMode& mode) {
  if (const auto* f = std::get_if<FixedTemperature>(&mode)) {
    if (!(f->value > 0)) throw Error(ErrorCode::BadConfig, "fixed temperature must be > 0");
  } else {
    const auto& e = std::get<EmotionTemperature>(mode);
    if (!(e.t_min > 0) || e.t_min > e.t_max) {
      throw Error(ErrorCode::BadConfig, "temperature band needs 0 < t_min <= t_max");
    }
  }
}

}  // namespace

void validate(const Params& params) {
  if (!(params.epsilon > 0)) throw Error(ErrorCode::BadConfig, "epsilon must be > 0");
  if (!(params.gamma >= 0)) throw Error(ErrorCode::BadConfig, "gamma must be >= 0");
  check_temperature(params.temperature);
}

int step_reward(int prev_reward, Decision decision) {
  return decision == Decision::Accept ? prev_reward + 1 : prev_reward;
}

double environment_unfairness(const Allocation& allocation) {
  const double z = allocation.p2_get.as_double();
  return std::clamp((1.5 - z) / 1.5, 0.0, 1.0);
}

double cognitive_function(const Params& params, double bel_prev, double unfairness,
                          double reward_prev) {
  return params.beta1 * bel_prev * unfairness + params.beta2 * reward_prev - 1.0;
}

double rejection_probability(double cf, double temperature) { return sigmoid(cf / temperature); }

double emotion_temperature(std::optional<double> arousal, const EmotionTemperature& config) {
  check_temperature(config);
  if (!arousal) return 1.0;
  return config.t_min + (config.t_max - config.t_min) * *arousal;
}

double step_temperature(const TemperatureMode& mode, std::optional<double> arousal) {
  if (const auto* f = std::get_if<FixedTemperature>(&mode)) return f->value;
  return emotion_temperature(arousal, std::get<EmotionTemperature>(mode));
}

double behavior_difference(int rejected, double p_reject) {
  return static_cast<double>(rejected) - p_reject;
}

double update_belief(double bel_prev, double gamma, double bdf, double epsilon) {
  // log(exp(b)) need not round-trip; a zero increment must leave b untouched.
  if (gamma * bdf == 0.0) return std::max(bel_prev, std::log(epsilon));
  return std::log(std::max(epsilon, std::exp(bel_prev) + gamma * bdf));
}

BeliefTrajectory rollout(std::span<const StepInputs> steps, const Params& params) {
  validate(params);
  BeliefTrajectory out;
  out.bel0 = params.bel0;
  out.steps.reserve(steps.size());
  double bel = params.bel0;
  int reward = 0;
  for (const auto& s : steps) {
    StepRecord r;
    r.trial_index = s.trial_index;
    r.belief_prev = bel;
    r.reward_prev = reward;
    r.temperature = step_temperature(params.temperature, s.arousal);
    r.cf = cognitive_function(params, bel, s.unfairness, reward);
    r.p_reject = rejection_probability(r.cf, r.temperature);
    r.bdf = behavior_difference(s.rejected, r.p_reject);
    bel = update_belief(bel, params.gamma, r.bdf, params.epsilon);
    reward = step_reward(reward, s.rejected ? Decision::Reject : Decision::Accept);
    r.belief = bel;
    r.reward = reward;
    out.steps.push_back(r);
  }
  return out;
}

std::vector<DesignRow> frozen_design(std::span<const StepInputs> steps, const Params& params) {
  const auto traj = rollout(steps, params);
  std::vector<DesignRow> design;
  design.reserve(steps.size());
  for (std::size_t j = 0; j < steps.size(); ++j) {
    const auto& r = traj.steps[j];
    design.push_back({r.belief_prev * steps[j].unfairness, static_cast<double>(r.reward_prev),
                      r.temperature, steps[j].rejected});
  }
  return design;
}

namespace {

double logit(const DesignRow& row, double beta1, double beta2) {
  return (beta1 * row.belief_feature + beta2 * row.reward_feature - 1.0) / row.temperature;
}

// Unclamped objective used by the optimiser so the line search always sees slope.
double smooth_nll(std::span<const DesignRow> design, double beta1, double beta2) {
  double total = 0.0;
  for (const auto& row : design) {
    const double u = logit(row, beta1, beta2);
    total += row.rejected ? softplus(-u) : softplus(u);
  }
  return total;
}

}  // namespace

double frozen_nll(std::span<const DesignRow> design, double beta1, double beta2) {
  double total = 0.0;
  for (const auto& row : design) total += clamped_term(row.rejected, logit(row, beta1, beta2));
  return total;
}

double negative_log_likelihood(std::span<const StepInputs> steps, const Params& params) {
  const auto design = frozen_design(steps, params);
  return frozen_nll(design, params.beta1, params.beta2);
}

Vec2 frozen_gradient(std::span<const DesignRow> design, double beta1, double beta2) {
  Vec2 g{0.0, 0.0};
  for (const auto& row : design) {
    const double p = sigmoid(logit(row, beta1, beta2));
    const double scale = (p - row.rejected) / row.temperature;
    g[0] += scale * row.belief_feature;
    g[1] += scale * row.reward_feature;
  }
  return g;
}

Vec2 loss_gradient(std::span<const StepInputs> steps, const Params& params) {
  const auto design = frozen_design(steps, params);
  return frozen_gradient(design, params.beta1, params.beta2);
}

Mat2 frozen_hessian(std::span<const DesignRow> design, double beta1, double beta2) {
  Mat2 h{};
  for (const auto& row : design) {
    const double p = sigmoid(logit(row, beta1, beta2));
    const double w = p * (1.0 - p) / (row.temperature * row.temperature);
    h[0][0] += w * row.belief_feature * row.belief_feature;
    h[0][1] += w * row.belief_feature * row.reward_feature;
    h[1][1] += w * row.reward_feature * row.reward_feature;
  }
  h[1][0] = h[0][1];
  return h;
}

double smallest_eigenvalue(const Mat2& m) {
  const double mean = 0.5 * (m[0][0] + m[1][1]);
  const double half_diff = 0.5 * (m[0][0] - m[1][1]);
  const double off = 0.5 * (m[0][1] + m[1][0]);
  return mean - std::hypot(half_diff, off);
}

namespace {

HessianReport finite_difference_hessian(std::span<const DesignRow> design, double beta1,
                                        double beta2) {
  // Step sizes keep h * |feature| near 1e-4 so each column sees the same curvature.
  std::array<double, 2> scale{1.0, 1.0};
  for (const auto& row : design) {
    scale[0] = std::max(scale[0], std::abs(row.belief_feature) / row.temperature);
    scale[1] = std::max(scale[1], std::abs(row.reward_feature) / row.temperature);
  }
  HessianReport report;
  const Vec2 beta{beta1, beta2};
  for (int k = 0; k < 2; ++k) {
    const double h = 1e-4 / scale[static_cast<std::size_t>(k)];
    Vec2 plus = beta, minus = beta;
    plus[static_cast<std::size_t>(k)] += h;
    minus[static_cast<std::size_t>(k)] -= h;
    const Vec2 gp = frozen_gradient(design, plus[0], plus[1]);
    const Vec2 gm = frozen_gradient(design, minus[0], minus[1]);
    for (int i = 0; i < 2; ++i) {
      report.hessian[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
          (gp[static_cast<std::size_t>(i)] - gm[static_cast<std::size_t>(i)]) / (2.0 * h);
    }
  }
  const double off = 0.5 * (report.hessian[0][1] + report.hessian[1][0]);
  report.hessian[0][1] = report.hessian[1][0] = off;
  report.min_eigenvalue = smallest_eigenvalue(report.hessian);
  return report;
}

}  // namespace

HessianReport hessian_diagnostics(std::span<const StepInputs> steps, const Params& params) {
  const auto design = frozen_design(steps, params);
  return finite_difference_hessian(design, params.beta1, params.beta2);
}

void FitConfig::validate() const {
  if (gamma_grid.empty() || bel0_grid.empty()) {
    throw Error(ErrorCode::BadConfig, "gamma and bel0 grids must be non-empty");
  }
  for (double g : gamma_grid) {
    if (!(g >= 0)) throw Error(ErrorCode::BadConfig, "gamma candidates must be >= 0");
  }
  if (!(epsilon > 0)) throw Error(ErrorCode::BadConfig, "epsilon must be > 0");
  if (!(grad_tol > 0) || !(belief_tol > 0)) {
    throw Error(ErrorCode::BadConfig, "tolerances must be > 0");
  }
  if (max_inner_iterations < 1 || max_outer_iterations < 1) {
    throw Error(ErrorCode::BadConfig, "iteration caps must be >= 1");
  }
  check_temperature(temperature);
}

namespace {

struct Pass {
  std::vector<DesignRow> design;
  std::vector<double> beliefs;  // bel_{j-1} of every row, concatenated
};

Pass build_pass(std::span<const std::vector<StepInputs>> series, const Params& params) {
  Pass pass;
  for (const auto& s : series) {
    const auto traj = rollout(s, params);
    for (std::size_t j = 0; j < s.size(); ++j) {
      const auto& r = traj.steps[j];
      pass.design.push_back({r.belief_prev * s[j].unfairness, static_cast<double>(r.reward_prev),
                             r.temperature, s[j].rejected});
      pass.beliefs.push_back(r.belief_prev);
    }
  }
  return pass;
}

double norm(const Vec2& v) { return std::hypot(v[0], v[1]); }

// Features must not be (numerically) collinear for the 2x2 problem to be
// well posed.
bool identifiable(std::span<const DesignRow> design) {
  if (design.size() < 2) return false;
  double s00 = 0, s01 = 0, s11 = 0;
  for (const auto& r : design) {
    s00 += r.belief_feature * r.belief_feature;
    s01 += r.belief_feature * r.reward_feature;
    s11 += r.reward_feature * r.reward_feature;
  }
  if (s00 <= 0 || s11 <= 0) return false;
  return s00 * s11 - s01 * s01 > 1e-10 * s00 * s11;
}

struct InnerResult {
  Vec2 beta;
  int iterations = 0;
  bool converged = false;
};

// Damped Newton with Armijo backtracking; falls back to steepest descent
// when the curvature is not usable.
InnerResult solve_frozen(std::span<const DesignRow> design, Vec2 beta, const FitConfig& cfg) {
  InnerResult out{beta};
  for (int it = 0; it < cfg.max_inner_iterations; ++it) {
    const Vec2 g = frozen_gradient(design, beta[0], beta[1]);
    if (norm(g) <= cfg.grad_tol) {
      out.converged = true;
      break;
    }
    const Mat2 h = frozen_hessian(design, beta[0], beta[1]);
    const double det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    Vec2 dir{-g[0], -g[1]};
    if (det > 1e-14 * std::max(1.0, h[0][0] * h[1][1]) && h[0][0] > 0) {
      dir = {-(h[1][1] * g[0] - h[0][1] * g[1]) / det, -(-h[1][0] * g[0] + h[0][0] * g[1]) / det};
    }
    double slope = g[0] * dir[0] + g[1] * dir[1];
    if (!(slope < 0)) {
      dir = {-g[0], -g[1]};
      slope = -(g[0] * g[0] + g[1] * g[1]);
    }
    const double f0 = smooth_nll(design, beta[0], beta[1]);
    double t = 1.0;
    bool moved = false;
    {
      // Near the optimum the objective is flat to rounding and Armijo would
      // accept vanishing steps; judge the full step by the gradient instead.
      const Vec2 cand{beta[0] + dir[0], beta[1] + dir[1]};
      const double f = smooth_nll(design, cand[0], cand[1]);
      if (std::abs(f - f0) <= 1e-12 * std::max(1.0, std::abs(f0)) &&
          norm(frozen_gradient(design, cand[0], cand[1])) < norm(g)) {
        beta = cand;
        moved = true;
      }
    }
    while (!moved && t > 1e-20) {
      const Vec2 cand{beta[0] + t * dir[0], beta[1] + t * dir[1]};
      const double f = smooth_nll(design, cand[0], cand[1]);
      if (f <= f0 + 1e-4 * t * slope) {
        beta = cand;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    out.iterations = it + 1;
    out.beta = beta;
    if (!moved) break;
  }
  if (!out.converged) {
    const Vec2 g = frozen_gradient(design, beta[0], beta[1]);
    out.converged = norm(g) <= cfg.grad_tol;
  }
  out.beta = beta;
  return out;
}

FitResult fit_one_setting(std::span<const std::vector<StepInputs>> series, Params params,
                          const FitConfig& cfg) {
  Vec2 beta{params.beta1, params.beta2};
  params.beta1 = beta[0];
  params.beta2 = beta[1];
  Pass pass = build_pass(series, params);

  FitDiagnostics diag;
  double delta = std::numeric_limits<double>::infinity();
  bool converged = false;
  bool inner_ok = false;
  int stalled_passes = 0;

  struct Best {
    Vec2 beta;
    double nll;
  };
  Best best{beta, frozen_nll(pass.design, beta[0], beta[1])};

  for (int outer = 1; outer <= cfg.max_outer_iterations; ++outer) {
    diag.outer_iterations = outer;
    const double gnorm = norm(frozen_gradient(pass.design, beta[0], beta[1]));
    if (outer > 1 && inner_ok && delta < cfg.belief_tol && gnorm <= cfg.grad_tol) {
      converged = true;
      break;
    }
    const auto inner = solve_frozen(pass.design, beta, cfg);
    diag.iterations += inner.iterations;
    inner_ok = inner.converged;
    beta = inner.beta;
    params.beta1 = beta[0];
    params.beta2 = beta[1];
    Pass next = build_pass(series, params);
    delta = 0.0;
    for (std::size_t i = 0; i < next.beliefs.size(); ++i) {
      delta = std::max(delta, std::abs(next.beliefs[i] - pass.beliefs[i]));
    }
    pass = std::move(next);
    const double nll = frozen_nll(pass.design, beta[0], beta[1]);
    // Separable data drives beta towards infinity; once a full inner solve
    // no longer buys a measurable decrease there is nothing left to gain.
    const bool stalled = !inner_ok && best.nll - nll < 1e-9;
    if (nll < best.nll) best = {beta, nll};
    if (stalled && ++stalled_passes >= 3) break;
    if (!stalled) stalled_passes = 0;
  }
  if (!converged) {
    // One last check: the cap may land exactly on a fixed point.
    const double gnorm = norm(frozen_gradient(pass.design, beta[0], beta[1]));
    converged = inner_ok && delta < cfg.belief_tol && gnorm <= cfg.grad_tol;
  }
  if (!converged) {
    beta = best.beta;
    params.beta1 = beta[0];
    params.beta2 = beta[1];
    pass = build_pass(series, params);
    diag.warning = ErrorCode::MaxIterations;
  }
  diag.converged = converged;
  diag.grad_norm = norm(frozen_gradient(pass.design, beta[0], beta[1]));
  diag.min_hessian_eigenvalue = finite_difference_hessian(pass.design, beta[0], beta[1]).min_eigenvalue;

  FitResult result;
  result.params = params;
  result.nll = frozen_nll(pass.design, beta[0], beta[1]);
  result.diagnostics = diag;
  for (const auto& s : series) result.trajectories.push_back(rollout(s, params));
  return result;
}

}  // namespace

FitResult fit_pooled(std::span<const std::vector<StepInputs>> series, const FitConfig& config) {
  config.validate();
  std::size_t total = 0;
  for (const auto& s : series) total += s.size();
  if (total < 2) {
    throw Error(ErrorCode::NonIdentifiable,
                "need at least 2 non-missing trials, got " + std::to_string(total));
  }

  std::optional<FitResult> best;
  for (double gamma : config.gamma_grid) {
    for (double bel0 : config.bel0_grid) {
      Params p;
      p.beta1 = config.beta1_init;
      p.beta2 = config.beta2_init;
      p.gamma = gamma;
      p.bel0 = bel0;
      p.epsilon = config.epsilon;
      p.temperature = config.temperature;
      if (!identifiable(build_pass(series, p).design)) continue;
      auto r = fit_one_setting(series, p, config);
      if (!best || r.nll < best->nll) best = std::move(r);
    }
  }
  if (!best) {
    throw Error(ErrorCode::NonIdentifiable,
                "belief and reward features are constant or collinear for every setting");
  }
  return *std::move(best);
}

FitResult fit(std::span<const StepInputs> steps, const FitConfig& config) {
  const std::vector<std::vector<StepInputs>> one{std::vector<StepInputs>(steps.begin(), steps.end())};
  return fit_pooled(one, config);
}

}  // namespace fms::belief
