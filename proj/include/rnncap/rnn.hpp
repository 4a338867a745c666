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

#ifndef RNNCAP_RNN_HPP
#define RNNCAP_RNN_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rnncap/losses.hpp"
#include "rnncap/matrix.hpp"

namespace rnncap {

enum class ActivationKind { kRelu, kTanh };

std::string activation_name(ActivationKind kind);
ActivationKind activation_from_name(const std::string& name);

/// Entrywise state activation. Both supported kinds are 1-Lipschitz and fix
/// the origin; tanh additionally bounds every entry by 1.
struct Activation {
  ActivationKind kind = ActivationKind::kRelu;

  double apply(double x) const;
  /// Derivative at the pre-activation; the relu kink at 0 uses the
  /// left-side value 0.
  double derivative(double x) const;
  /// Lipschitz constant, 1 for both kinds.
  double lipschitz() const { return 1.0; }
  /// Uniform entry bound, or 0 when the activation is unbounded.
  double entry_bound() const {
    return kind == ActivationKind::kTanh ? 1.0 : 0.0;
  }
};

/// Recurrent network y_t = V h_t, h_t = act(U h_{t-1} + W x_t), h_0 = 0.
struct RnnParams {
  Matrix recurrent;  // U, d_h x d_h
  Matrix input;      // W, d_h x d_x
  Matrix readout;    // V, d_y x d_h
  Activation activation;

  std::size_t d_h() const { return recurrent.rows(); }
  std::size_t d_x() const { return input.cols(); }
  std::size_t d_y() const { return readout.rows(); }

  /// Throws std::invalid_argument when the three shapes are inconsistent or
  /// any dimension is zero.
  void validate() const;
};

/// Seeded initialization with entries N(0, scale^2 / d_h), scale 1 when not
/// given.
RnnParams init_params(std::size_t d_x, std::size_t d_h, std::size_t d_y,
                      ActivationKind activation, std::uint64_t seed,
                      double scale = 1.0);

enum class LabelMode { kTerminal, kPerStep };

/// A batch of n sequences, each of t input vectors in R^{d_x}, with class
/// labels (0-based). Terminal mode stores one label per sequence; per-step
/// mode stores t labels.
struct SequenceBatch {
  std::size_t steps = 0;        // t
  std::size_t input_dim = 0;    // d_x
  std::size_t num_classes = 0;  // K
  double input_bound = 0.0;     // declared B_x
  LabelMode mode = LabelMode::kTerminal;
  std::vector<std::vector<Vector>> inputs;       // n x t x d_x
  std::vector<std::vector<std::size_t>> labels;  // n x (1 or t)

  std::size_t size() const { return inputs.size(); }

  /// Checks shapes, label ranges, and that every input vector's Euclidean
  /// norm is within the declared bound (small slack for rounding). Throws
  /// std::invalid_argument on violation.
  void validate() const;

  /// Content hash over dimensions, inputs (raw bits), and labels.
  std::uint64_t content_hash() const;
};

/// Hidden states h_1..h_t, pre-activations, and outputs y_1..y_t for one
/// sequence.
struct ForwardResult {
  std::vector<Vector> hidden;
  std::vector<Vector> preactivation;
  std::vector<Vector> outputs;
};

/// Runs the recurrence over one sequence. Throws std::invalid_argument on a
/// dimension mismatch and std::runtime_error if an intermediate value is not
/// finite.
ForwardResult forward(const RnnParams& params,
                      const std::vector<Vector>& sequence);

struct Gradients {
  Matrix recurrent;
  Matrix input;
  Matrix readout;

  double global_norm() const;
};

/// Mean loss over the batch (terminal mode scores the final output; per-step
/// mode averages the per-step losses within each sequence).
double empirical_risk(const RnnParams& params, const SequenceBatch& batch,
                      const LossSpec& loss);

/// Weighted sum of per-sequence losses, sum_i weights[i] * loss_i.
double weighted_objective(const RnnParams& params, const SequenceBatch& batch,
                          const LossSpec& loss,
                          const std::vector<double>& weights);

/// Exact gradient of empirical_risk via backpropagation through time.
/// Throws std::runtime_error, naming the offending sequence index, if a
/// non-finite gradient value appears.
Gradients bptt_gradient(const RnnParams& params, const SequenceBatch& batch,
                        const LossSpec& loss);

/// Gradient of weighted_objective for arbitrary per-sequence weights.
Gradients weighted_bptt_gradient(const RnnParams& params,
                                 const SequenceBatch& batch,
                                 const LossSpec& loss,
                                 const std::vector<double>& weights);

/// Rescales the gradient to global norm <= clip (clip <= 0 disables) and
/// applies one SGD step in place. Returns the gradient norm actually applied.
double clip_and_step(RnnParams& params, const Gradients& grads, double lr,
                     double clip);

/// Model checkpoint: parameters plus provenance.
struct Checkpoint {
  RnnParams params;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
};

/// JSON serialization with row-major weight arrays. Values survive a
/// round trip bit-exactly, and rewriting a loaded checkpoint reproduces the
/// original bytes.
std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace rnncap

#endif  // RNNCAP_RNN_HPP
