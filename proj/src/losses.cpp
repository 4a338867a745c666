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

#include "rnncap/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rnncap {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488016887242097;

void check_scores(const std::vector<double>& f, std::size_t z) {
  if (f.size() < 2) {
    throw std::invalid_argument("loss requires at least two classes");
  }
  if (z >= f.size()) {
    throw std::invalid_argument("label index out of range");
  }
}

/// Index of the largest score among k != z, ties broken by lowest index.
std::size_t rival_argmax(const std::vector<double>& f, std::size_t z) {
  std::size_t best = z == 0 ? 1 : 0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (k == z) continue;
    if (f[k] > f[best]) best = k;
  }
  return best;
}

}  // namespace

std::string loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::kCrossEntropy:
      return "cross_entropy";
    case LossKind::kHinge:
      return "hinge";
    case LossKind::kRamp:
      return "ramp";
  }
  throw std::invalid_argument("unknown loss kind");
}

LossKind loss_kind_from_name(const std::string& name) {
  if (name == "cross_entropy") return LossKind::kCrossEntropy;
  if (name == "hinge") return LossKind::kHinge;
  if (name == "ramp") return LossKind::kRamp;
  throw std::invalid_argument("unknown loss kind: " + name);
}

double LossSpec::rho() const {
  switch (kind) {
    case LossKind::kCrossEntropy:
    case LossKind::kHinge:
      return kSqrt2;
    case LossKind::kRamp:
      return 2.0 / gamma;
  }
  throw std::invalid_argument("unknown loss kind");
}

double LossSpec::natural_bound() const {
  return kind == LossKind::kRamp ? 1.0 : 0.0;
}

LossSpec make_loss(LossKind kind, double gamma) {
  if (kind == LossKind::kRamp && !(gamma > 0.0)) {
    throw std::invalid_argument("ramp loss requires gamma > 0");
  }
  LossSpec spec;
  spec.kind = kind;
  spec.gamma = gamma;
  return spec;
}

std::vector<double> softmax(const std::vector<double>& f) {
  if (f.empty()) throw std::invalid_argument("softmax of empty vector");
  const double m = *std::max_element(f.begin(), f.end());
  std::vector<double> q(f.size());
  double total = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    q[i] = std::exp(f[i] - m);
    total += q[i];
  }
  for (double& v : q) v /= total;
  return q;
}

double margin(const std::vector<double>& f, std::size_t z) {
  check_scores(f, z);
  return f[rival_argmax(f, z)] - f[z];
}

LossValueGrad cross_entropy(const std::vector<double>& f, std::size_t z) {
  check_scores(f, z);
  const double m = *std::max_element(f.begin(), f.end());
  double total = 0.0;
  for (double v : f) total += std::exp(v - m);
  LossValueGrad out;
  out.value = std::log(total) - (f[z] - m);
  out.grad.resize(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    out.grad[i] = std::exp(f[i] - m) / total;
  }
  out.grad[z] -= 1.0;
  return out;
}

LossValueGrad hinge(const std::vector<double>& f, std::size_t z) {
  check_scores(f, z);
  const std::size_t k = rival_argmax(f, z);
  const double psi = f[k] - f[z];
  LossValueGrad out;
  out.grad.assign(f.size(), 0.0);
  if (1.0 + psi <= 0.0) {
    out.value = 0.0;
    return out;
  }
  out.value = 1.0 + psi;
  out.grad[k] = 1.0;
  out.grad[z] = -1.0;
  return out;
}

LossValueGrad ramp(const std::vector<double>& f, std::size_t z, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("ramp requires gamma > 0");
  check_scores(f, z);
  const std::size_t k = rival_argmax(f, z);
  const double psi = f[k] - f[z];
  LossValueGrad out;
  out.grad.assign(f.size(), 0.0);
  if (psi > 0.0) {
    out.value = 1.0;
  } else if (psi < -gamma) {
    out.value = 0.0;
  } else {
    out.value = 1.0 + psi / gamma;
    // Knots at psi = 0 and psi = -gamma take the flat-side derivative.
    if (psi < 0.0 && psi > -gamma) {
      out.grad[k] = 1.0 / gamma;
      out.grad[z] = -1.0 / gamma;
    }
  }
  return out;
}

LossValueGrad loss_value_grad(const LossSpec& spec,
                              const std::vector<double>& f, std::size_t z) {
  switch (spec.kind) {
    case LossKind::kCrossEntropy:
      return cross_entropy(f, z);
    case LossKind::kHinge:
      return hinge(f, z);
    case LossKind::kRamp:
      return ramp(f, z, spec.gamma);
  }
  throw std::invalid_argument("unknown loss kind");
}

LossConstants loss_constants(const LossSpec& spec, double omega_t) {
  LossConstants out;
  out.rho = spec.rho();
  if (spec.kind == LossKind::kRamp) {
    out.range_bound = 1.0;
    return out;
  }
  if (!(omega_t > 0.0)) {
    throw std::invalid_argument(
        "unbounded loss needs a positive output bound omega_t");
  }
  out.range_bound = 2.0 * out.rho * omega_t;
  return out;
}

}  // namespace rnncap
