/*
 * Copyright 2026 The rnncap Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef RNNCAP_EMPIRICAL_HPP
#define RNNCAP_EMPIRICAL_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rnncap/capacity.hpp"
#include "rnncap/losses.hpp"
#include "rnncap/rnn.hpp"

namespace rnncap {

/// Hypothesis class for the Monte-Carlo complexity estimate: recurrent
/// networks of width d_h whose weights satisfy Frobenius radii B_*, with an
/// optional spectral cap on the recurrent matrix (0 disables it).
struct ClassConstraints {
  std::size_t d_h = 0;
  ActivationKind activation = ActivationKind::kRelu;
  double B_U = 0.0;
  double B_V = 0.0;
  double B_W = 0.0;
  double M_U = 0.0;

  void validate() const;
};

/// Projects params in place onto the constraint set: each matrix is
/// uniformly rescaled onto its Frobenius ball, and the recurrent matrix is
/// additionally rescaled under the spectral cap when one is set.
void project_to_constraints(RnnParams& params, const ClassConstraints& c);

struct ErcEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t draws = 0;
  std::size_t restarts = 0;
  std::size_t discarded = 0;  // diverged ascent restarts
  std::vector<double> best_correlations;
};

std::string erc_estimate_to_json(const ErcEstimate& e, std::uint64_t seed);

/// Monte-Carlo lower estimate of the empirical Rademacher complexity of the
/// loss-composed class: for each sign draw, the weighted objective
/// (1/n) sum_i eps_i loss_i is maximized by projected gradient ascent over
/// multiple seeded restarts, and the draw suprema are averaged. Work items
/// derive their own seeds, so parallel and serial runs agree exactly.
ErcEstimate estimate_erc_mc(const ClassConstraints& constraints,
                            const SequenceBatch& batch, const LossSpec& loss,
                            std::size_t draws, std::size_t restarts,
                            std::size_t steps, double lr, std::uint64_t seed);

/// Exact empirical Rademacher complexity of the two-function class
/// {f, -f} for f given by its values on the sample: E |sum_i eps_i v_i| / n
/// by exhaustive enumeration of all 2^n sign patterns (n <= 24).
double erc_two_function_exact(const std::vector<double>& values);

/// Monte-Carlo counterpart of erc_two_function_exact.
ErcEstimate erc_two_function_mc(const std::vector<double>& values,
                                std::size_t draws, std::uint64_t seed);

/// Outcome of a randomized inequality check.
struct VerifyReport {
  std::string op;
  std::size_t trials = 0;
  std::size_t violations = 0;
  double max_slack_ratio = 0.0;  // largest observed lhs / bound
  std::uint64_t seed = 0;
};

std::string verify_report_to_json(const VerifyReport& report);
std::string verify_reports_to_json(const std::vector<VerifyReport>& reports);

/// Checks the hidden-state norm bound ||h_tau|| <= rho_h B_W B_x c_tau on
/// random configurations (both norm flavors; tanh states also checked
/// against the entry bound), with relative slack 1e-9.
VerifyReport verify_hidden_norm(std::size_t trials, std::uint64_t seed);

/// Checks the parameter-perturbation output bound ||y_t - y'_t|| <=
/// L_V ||dV|| + L_U ||dU|| + L_W ||dW|| on random parameter pairs sharing
/// inputs, with class constants taken from the pairwise norm maxima.
VerifyReport verify_output_lipschitz(std::size_t trials, std::uint64_t seed);

/// Checks |loss(f) - loss(f')| <= rho ||f - f'|| on random score pairs.
VerifyReport verify_loss_lipschitz(const LossSpec& loss, std::size_t trials,
                                   std::uint64_t seed);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
};

/// Central-difference check of the backpropagated gradient. All coordinates
/// are checked, or a seeded subset of 200 when there are more.
GradCheckResult gradient_check(const RnnParams& params,
                               const SequenceBatch& batch,
                               const LossSpec& loss, double fd_step = 1e-5,
                               std::uint64_t seed = 0);

/// Seeded (params, batch) pair whose loss surface is differentiable at the
/// evaluation point: relu pre-activations and margin-loss knots are kept at
/// distance >= 1e-3, regenerating from derived seeds until satisfied.
struct GradCheckConfig {
  RnnParams params;
  SequenceBatch batch;
};

GradCheckConfig make_smooth_gradient_config(std::uint64_t seed,
                                            const LossSpec& loss,
                                            ActivationKind activation,
                                            std::size_t d_x, std::size_t d_h,
                                            std::size_t num_classes,
                                            std::size_t t, std::size_t n);

/// Measures every norm of the parameter matrices and the input data needed
/// by the bound family. Spectral estimates are clamped to their Frobenius
/// majorants. The params-only overload assumes unit-norm step inputs
/// (B_x = B_row = B_x1 = 1).
NormProfile extract_norm_profile(const RnnParams& params);
NormProfile extract_norm_profile(const RnnParams& params,
                                 const SequenceBatch& batch);

}  // namespace rnncap

#endif  // RNNCAP_EMPIRICAL_HPP
