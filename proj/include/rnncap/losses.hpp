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

#ifndef RNNCAP_LOSSES_HPP
#define RNNCAP_LOSSES_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace rnncap {

enum class LossKind { kCrossEntropy, kHinge, kRamp };

std::string loss_kind_name(LossKind kind);
LossKind loss_kind_from_name(const std::string& name);

/// Multiclass loss family. gamma is the ramp margin width (ignored by the
/// other kinds). rho is the Euclidean Lipschitz constant of f -> loss(f, z);
/// natural_bound is the intrinsic range bound for losses that have one
/// (ramp is within [0, 1]) and 0 for unbounded losses.
struct LossSpec {
  LossKind kind = LossKind::kCrossEntropy;
  double gamma = 1.0;

  double rho() const;
  double natural_bound() const;
};

LossSpec make_loss(LossKind kind, double gamma = 1.0);

/// Loss value together with its (sub)gradient with respect to the score
/// vector f.
struct LossValueGrad {
  double value = 0.0;
  std::vector<double> grad;
};

/// Numerically stable softmax with max subtraction. Requires a nonempty
/// score vector; the result sums to 1.
std::vector<double> softmax(const std::vector<double>& f);

/// Margin operator max_{k != z} f_k - f_z. Requires at least two classes and
/// z in [0, K). Negative margin means correct classification.
double margin(const std::vector<double>& f, std::size_t z);

/// Cross entropy of the softmax of f against label z. Gradient is
/// softmax(f) - onehot(z).
LossValueGrad cross_entropy(const std::vector<double>& f, std::size_t z);

/// Multiclass hinge max{0, 1 + margin}. The subgradient goes through the
/// maximizing coordinate, ties broken by lowest index; at the knot the
/// flat-side derivative (zero) is returned.
LossValueGrad hinge(const std::vector<double>& f, std::size_t z);

/// Ramp loss: 1 for positive margin, 1 + margin/gamma on [-gamma, 0], 0
/// below. Knots take the flat-side derivative (zero). Requires gamma > 0.
LossValueGrad ramp(const std::vector<double>& f, std::size_t z, double gamma);

/// Dispatches to the loss named by spec.
LossValueGrad loss_value_grad(const LossSpec& spec,
                              const std::vector<double>& f, std::size_t z);

/// Lipschitz constant rho and uniform range bound C_t for a score class
/// whose outputs satisfy ||f||_2 <= omega_t. Ramp needs no omega_t (its
/// range bound is 1); the unbounded losses require omega_t > 0 and get
/// C_t = 2 * rho * omega_t.
struct LossConstants {
  double rho = 0.0;
  double range_bound = 0.0;
};

LossConstants loss_constants(const LossSpec& spec, double omega_t);

}  // namespace rnncap

#endif  // RNNCAP_LOSSES_HPP
