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

// Belief-reward behaviour model.
//
// For each non-missing trial j of one individual:
//
//   T_j   temperature, fixed or mapped from pre-decision arousal
//   CF_j  = beta1 * bel_{j-1} * E_j + beta2 * R_{j-1} - 1
//   P_j   = sigmoid(CF_j / T_j)                (probability of rejecting)
//   BDF_j = y_j - P_j                          (y = 1 for reject)
//   bel_j = log(max(eps, exp(bel_{j-1}) + gamma * BDF_j))
//   R_j   = R_{j-1} + [y_j == 0]
//
// The likelihood is Bernoulli in y_j. Fitting optimises (beta1, beta2) with
// the belief path frozen, then re-rolls beliefs until they stop moving.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "fms/error.hpp"
#include "fms/protocol.hpp"

namespace fms::belief {

struct FixedTemperature {
  double value = 1.0;
  bool operator==(const FixedTemperature&) const = default;
};

/// Affine map of normalised arousal a in [0, 1]: T = t_min + (t_max - t_min) * a.
struct EmotionTemperature {
  double t_min = 0.5;
  double t_max = 1.5;
  bool operator==(const EmotionTemperature&) const = default;
};

using TemperatureMode = std::variant<FixedTemperature, EmotionTemperature>;

struct Params {
  double beta1 = 0.0;
  double beta2 = 0.0;
  double gamma = 1.0;
  double epsilon = 1e-6;
  double bel0 = 0.0;
  TemperatureMode temperature = FixedTemperature{};

  bool operator==(const Params&) const = default;
};

/// Throws Error{BadConfig} when epsilon <= 0, gamma < 0 or a temperature is invalid.
void validate(const Params& params);

struct StepInputs {
  int trial_index = 0;
  int rejected = 0;          // y: 1 = reject, 0 = accept
  double unfairness = 0.0;   // E_j in [0, 1]
  std::optional<double> arousal;  // pre-decision arousal normalised to [0, 1]

  bool operator==(const StepInputs&) const = default;
};

struct StepRecord {
  int trial_index = 0;
  double belief_prev = 0.0;
  double belief = 0.0;
  double cf = 0.0;
  double p_reject = 0.5;
  double bdf = 0.0;
  int reward_prev = 0;
  int reward = 0;
  double temperature = 1.0;
};

struct BeliefTrajectory {
  double bel0 = 0.0;
  std::vector<StepRecord> steps;

  int final_reward() const { return steps.empty() ? 0 : steps.back().reward; }
  double final_belief() const { return steps.empty() ? bel0 : steps.back().belief; }
};

// Scalar building blocks.

/// Cumulative reward after one more trial; Reject and Missing add nothing.
int step_reward(int prev_reward, Decision decision);

/// (1.5 - z) / 1.5 clamped to [0, 1], z being Player 2's share.
double environment_unfairness(const Allocation& allocation);
using UnfairnessFn = std::function<double(const Allocation&)>;

double cognitive_function(const Params& params, double bel_prev, double unfairness,
                          double reward_prev);

/// Logistic sigmoid of cf / t; requires t > 0.
double rejection_probability(double cf, double temperature);

/// Absent arousal gives T = 1. Throws Error{BadConfig} if t_min <= 0 or t_min > t_max.
double emotion_temperature(std::optional<double> arousal, const EmotionTemperature& config);
double step_temperature(const TemperatureMode& mode, std::optional<double> arousal);

double behavior_difference(int rejected, double p_reject);

double update_belief(double bel_prev, double gamma, double bdf, double epsilon);

// Trajectory and likelihood.

BeliefTrajectory rollout(std::span<const StepInputs> steps, const Params& params);

/// Probabilities are clamped to [1e-12, 1 - 1e-12] before the log.
double negative_log_likelihood(std::span<const StepInputs> steps, const Params& params);

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;

/// Gradient w.r.t. (beta1, beta2) with the belief path frozen at its
/// rolled-out values: sum_j (P_j - y_j) / T_j * (bel_{j-1} E_j, R_{j-1}).
Vec2 loss_gradient(std::span<const StepInputs> steps, const Params& params);

/// One row per step of the frozen logistic problem.
struct DesignRow {
  double belief_feature = 0.0;  // bel_{j-1} * E_j
  double reward_feature = 0.0;  // R_{j-1}
  double temperature = 1.0;
  int rejected = 0;
};

/// Rolls out at `params` and freezes the features.
std::vector<DesignRow> frozen_design(std::span<const StepInputs> steps, const Params& params);
double frozen_nll(std::span<const DesignRow> design, double beta1, double beta2);
Vec2 frozen_gradient(std::span<const DesignRow> design, double beta1, double beta2);
/// Closed form sum_j P_j (1 - P_j) / T_j^2 * x_j x_j^T.
Mat2 frozen_hessian(std::span<const DesignRow> design, double beta1, double beta2);

double smallest_eigenvalue(const Mat2& m);

struct HessianReport {
  Mat2 hessian{};
  double min_eigenvalue = 0.0;
};

/// Central differences of the analytic frozen-belief gradient.
HessianReport hessian_diagnostics(std::span<const StepInputs> steps, const Params& params);

// Fitting.

struct FitConfig {
  double beta1_init = 0.0;
  double beta2_init = 0.0;
  /// Candidate gamma and bel0 values; the best likelihood wins.
  std::vector<double> gamma_grid{1.0};
  std::vector<double> bel0_grid{0.0};
  double epsilon = 1e-6;
  TemperatureMode temperature = FixedTemperature{};
  double grad_tol = 1e-8;
  double belief_tol = 1e-8;
  int max_inner_iterations = 500;
  int max_outer_iterations = 100;
  std::uint64_t seed = 0;

  /// Throws Error{BadConfig}.
  void validate() const;
};

struct FitDiagnostics {
  double grad_norm = 0.0;
  double min_hessian_eigenvalue = 0.0;
  int iterations = 0;        // inner optimiser steps, summed over outer passes
  int outer_iterations = 0;
  bool converged = false;
  std::optional<ErrorCode> warning;  // MaxIterations when not converged
};

struct FitResult {
  Params params;  // fitted beta1/beta2 plus the selected gamma and bel0
  double nll = 0.0;
  FitDiagnostics diagnostics;
  /// One trajectory per input series, rolled out at the fitted parameters.
  std::vector<BeliefTrajectory> trajectories;
};

/// Fits one individual. Throws Error{NonIdentifiable} with fewer than two
/// steps or when the features cannot separate beta1 from beta2.
FitResult fit(std::span<const StepInputs> steps, const FitConfig& config);

/// Shared (beta1, beta2) across several individuals, each with its own
/// belief path.
FitResult fit_pooled(std::span<const std::vector<StepInputs>> series, const FitConfig& config);

}  // namespace fms::belief
