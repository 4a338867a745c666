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

#include "rnncap/rnn.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rnncap/rng.hpp"
#include "rnncap/util.hpp"

namespace rnncap {

std::string activation_name(ActivationKind kind) {
  return kind == ActivationKind::kRelu ? "relu" : "tanh";
}

ActivationKind activation_from_name(const std::string& name) {
  if (name == "relu") return ActivationKind::kRelu;
  if (name == "tanh") return ActivationKind::kTanh;
  throw std::invalid_argument("unknown activation: " + name);
}

double Activation::apply(double x) const {
  return kind == ActivationKind::kRelu ? (x > 0.0 ? x : 0.0) : std::tanh(x);
}

double Activation::derivative(double x) const {
  if (kind == ActivationKind::kRelu) return x > 0.0 ? 1.0 : 0.0;
  const double th = std::tanh(x);
  return 1.0 - th * th;
}

void RnnParams::validate() const {
  const std::size_t dh = recurrent.rows();
  if (dh == 0 || input.cols() == 0 || readout.rows() == 0) {
    throw std::invalid_argument("network dimensions must be positive");
  }
  if (recurrent.cols() != dh || input.rows() != dh || readout.cols() != dh) {
    throw std::invalid_argument("parameter shapes are inconsistent");
  }
}

RnnParams init_params(std::size_t d_x, std::size_t d_h, std::size_t d_y,
                      ActivationKind activation, std::uint64_t seed,
                      double scale) {
  if (d_x == 0 || d_h == 0 || d_y == 0) {
    throw std::invalid_argument("network dimensions must be positive");
  }
  RnnParams p;
  p.activation.kind = activation;
  p.recurrent = Matrix(d_h, d_h);
  p.input = Matrix(d_h, d_x);
  p.readout = Matrix(d_y, d_h);
  Rng rng(seed);
  const double sd = scale / std::sqrt(static_cast<double>(d_h));
  Rng ru = rng.split(0);
  for (double& v : p.recurrent.data()) v = sd * ru.next_normal();
  Rng rw = rng.split(1);
  for (double& v : p.input.data()) v = sd * rw.next_normal();
  Rng rv = rng.split(2);
  for (double& v : p.readout.data()) v = sd * rv.next_normal();
  return p;
}

void SequenceBatch::validate() const {
  if (inputs.empty()) throw std::invalid_argument("batch is empty");
  if (steps == 0 || input_dim == 0 || num_classes < 2) {
    throw std::invalid_argument("batch dimensions are invalid");
  }
  if (labels.size() != inputs.size()) {
    throw std::invalid_argument("labels and inputs disagree on batch size");
  }
  const std::size_t labels_per_seq =
      mode == LabelMode::kTerminal ? 1 : steps;
  const double bound = input_bound * (1.0 + 1e-12) + 1e-12;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != steps) {
      throw std::invalid_argument("sequence length mismatch");
    }
    for (const Vector& x : inputs[i]) {
      if (x.size() != input_dim) {
        throw std::invalid_argument("input dimension mismatch");
      }
      if (norm2(x) > bound) {
        throw std::invalid_argument(
            "input vector exceeds the declared norm bound");
      }
    }
    if (labels[i].size() != labels_per_seq) {
      throw std::invalid_argument("label count mismatch");
    }
    for (std::size_t z : labels[i]) {
      if (z >= num_classes) throw std::invalid_argument("label out of range");
    }
  }
}

std::uint64_t SequenceBatch::content_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const std::uint64_t dims[5] = {steps, input_dim, num_classes,
                                 static_cast<std::uint64_t>(mode),
                                 inputs.size()};
  h = fnv1a(dims, sizeof(dims), h);
  h = fnv1a(&input_bound, sizeof(input_bound), h);
  for (const auto& seq : inputs) {
    for (const Vector& x : seq) {
      h = fnv1a(x.data(), x.size() * sizeof(double), h);
    }
  }
  for (const auto& seq_labels : labels) {
    for (std::size_t z : seq_labels) {
      const std::uint64_t v = z;
      h = fnv1a(&v, sizeof(v), h);
    }
  }
  return h;
}

ForwardResult forward(const RnnParams& params,
                      const std::vector<Vector>& sequence) {
  params.validate();
  const std::size_t dh = params.d_h();
  ForwardResult out;
  out.hidden.reserve(sequence.size());
  out.preactivation.reserve(sequence.size());
  out.outputs.reserve(sequence.size());
  Vector h(dh, 0.0);
  for (const Vector& x : sequence) {
    if (x.size() != params.d_x()) {
      throw std::invalid_argument("forward: input dimension mismatch");
    }
    Vector pre = matvec(params.recurrent, h);
    const Vector wx = matvec(params.input, x);
    for (std::size_t i = 0; i < dh; ++i) pre[i] += wx[i];
    for (std::size_t i = 0; i < dh; ++i) {
      h[i] = params.activation.apply(pre[i]);
      if (!std::isfinite(h[i])) {
        throw std::runtime_error("forward: non-finite hidden state");
      }
    }
    Vector y = matvec(params.readout, h);
    for (double v : y) {
      if (!std::isfinite(v)) {
        throw std::runtime_error("forward: non-finite output");
      }
    }
    out.preactivation.push_back(std::move(pre));
    out.hidden.push_back(h);
    out.outputs.push_back(std::move(y));
  }
  return out;
}

double Gradients::global_norm() const {
  double acc = 0.0;
  for (double v : recurrent.data()) acc += v * v;
  for (double v : input.data()) acc += v * v;
  for (double v : readout.data()) acc += v * v;
  return std::sqrt(acc);
}

namespace {

struct SequenceLossTerms {
  double value = 0.0;
  // Output-space gradients per step; empty vectors for unlabeled steps.
  std::vector<std::vector<double>> output_grads;
};

/// Loss value and per-step output gradients for one sequence. In terminal
/// mode only the final step is scored; per-step mode averages over steps.
SequenceLossTerms sequence_loss(const ForwardResult& fwd,
                                const std::vector<std::size_t>& labels,
                                LabelMode mode, const LossSpec& loss,
                                bool want_grads) {
  SequenceLossTerms terms;
  const std::size_t t = fwd.outputs.size();
  if (want_grads) terms.output_grads.resize(t);
  if (mode == LabelMode::kTerminal) {
    const LossValueGrad lv = loss_value_grad(loss, fwd.outputs[t - 1],
                                             labels[0]);
    terms.value = lv.value;
    if (want_grads) terms.output_grads[t - 1] = lv.grad;
    return terms;
  }
  const double step_weight = 1.0 / static_cast<double>(t);
  for (std::size_t tau = 0; tau < t; ++tau) {
    LossValueGrad lv = loss_value_grad(loss, fwd.outputs[tau], labels[tau]);
    terms.value += step_weight * lv.value;
    if (want_grads) {
      for (double& g : lv.grad) g *= step_weight;
      terms.output_grads[tau] = std::move(lv.grad);
    }
  }
  return terms;
}

void accumulate_outer(Matrix& target, double w, const Vector& row,
                      const Vector& col) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    const double wr = w * row[i];
    if (wr == 0.0) continue;
    for (std::size_t j = 0; j < col.size(); ++j) {
      target(i, j) += wr * col[j];
    }
  }
}

}  // namespace

double weighted_objective(const RnnParams& params, const SequenceBatch& batch,
                          const LossSpec& loss,
                          const std::vector<double>& weights) {
  batch.validate();
  if (weights.size() != batch.size()) {
    throw std::invalid_argument("weights size mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const ForwardResult fwd = forward(params, batch.inputs[i]);
    total += weights[i] *
             sequence_loss(fwd, batch.labels[i], batch.mode, loss, false)
                 .value;
  }
  return total;
}

double empirical_risk(const RnnParams& params, const SequenceBatch& batch,
                      const LossSpec& loss) {
  const std::vector<double> weights(batch.size(),
                                    1.0 / static_cast<double>(batch.size()));
  return weighted_objective(params, batch, loss, weights);
}

Gradients weighted_bptt_gradient(const RnnParams& params,
                                 const SequenceBatch& batch,
                                 const LossSpec& loss,
                                 const std::vector<double>& weights) {
  batch.validate();
  params.validate();
  if (weights.size() != batch.size()) {
    throw std::invalid_argument("weights size mismatch");
  }
  const std::size_t dh = params.d_h();
  Gradients g;
  g.recurrent = Matrix(dh, dh);
  g.input = Matrix(dh, params.d_x());
  g.readout = Matrix(params.d_y(), dh);

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double w = weights[i];
    if (w == 0.0) continue;
    const ForwardResult fwd = forward(params, batch.inputs[i]);
    const SequenceLossTerms terms =
        sequence_loss(fwd, batch.labels[i], batch.mode, loss, true);
    const std::size_t t = fwd.outputs.size();

    // Backward pass: carry = U^T (dL/dh_{tau+1} * act'(pre_{tau+1})).
    Vector carry(dh, 0.0);
    for (std::size_t step = t; step-- > 0;) {
      Vector dh_vec = carry;
      const std::vector<double>& gy = terms.output_grads[step];
      if (!gy.empty()) {
        accumulate_outer(g.readout, w, gy, fwd.hidden[step]);
        const Vector vty = matvec_transposed(params.readout, gy);
        for (std::size_t k = 0; k < dh; ++k) dh_vec[k] += vty[k];
      }
      Vector e(dh);
      for (std::size_t k = 0; k < dh; ++k) {
        e[k] = dh_vec[k] *
               params.activation.derivative(fwd.preactivation[step][k]);
      }
      if (step > 0) {
        accumulate_outer(g.recurrent, w, e, fwd.hidden[step - 1]);
      }
      accumulate_outer(g.input, w, e, batch.inputs[i][step]);
      carry = matvec_transposed(params.recurrent, e);
    }

    for (const Matrix* part : {&g.recurrent, &g.input, &g.readout}) {
      for (double v : part->data()) {
        if (!std::isfinite(v)) {
          throw std::runtime_error("non-finite gradient at sequence " +
                                   std::to_string(i));
        }
      }
    }
  }
  return g;
}

Gradients bptt_gradient(const RnnParams& params, const SequenceBatch& batch,
                        const LossSpec& loss) {
  const std::vector<double> weights(batch.size(),
                                    1.0 / static_cast<double>(batch.size()));
  return weighted_bptt_gradient(params, batch, loss, weights);
}

double clip_and_step(RnnParams& params, const Gradients& grads, double lr,
                     double clip) {
  double norm = grads.global_norm();
  double factor = 1.0;
  if (clip > 0.0 && norm > clip) {
    factor = clip / norm;
    norm = clip;
  }
  axpy(params.recurrent, -lr * factor, grads.recurrent);
  axpy(params.input, -lr * factor, grads.input);
  axpy(params.readout, -lr * factor, grads.readout);
  return norm;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  return nlohmann::json(m.data());
}

Matrix matrix_from_json(const nlohmann::json& arr, std::size_t rows,
                        std::size_t cols, const char* name) {
  if (!arr.is_array() || arr.size() != rows * cols) {
    throw std::invalid_argument(std::string("checkpoint: bad array for ") +
                                name);
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const auto& v : arr) data.push_back(v.get<double>());
  return Matrix(rows, cols, std::move(data));
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  ckpt.params.validate();
  nlohmann::json j;
  j["d_x"] = ckpt.params.d_x();
  j["d_h"] = ckpt.params.d_h();
  j["d_y"] = ckpt.params.d_y();
  j["activation"] = activation_name(ckpt.params.activation.kind);
  j["U"] = matrix_to_json(ckpt.params.recurrent);
  j["W"] = matrix_to_json(ckpt.params.input);
  j["V"] = matrix_to_json(ckpt.params.readout);
  j["seed"] = ckpt.seed;
  j["epoch"] = ckpt.epoch;
  return j.dump(2) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  Checkpoint ckpt;
  const auto d_x = j.at("d_x").get<std::size_t>();
  const auto d_h = j.at("d_h").get<std::size_t>();
  const auto d_y = j.at("d_y").get<std::size_t>();
  ckpt.params.activation.kind =
      activation_from_name(j.at("activation").get<std::string>());
  ckpt.params.recurrent = matrix_from_json(j.at("U"), d_h, d_h, "U");
  ckpt.params.input = matrix_from_json(j.at("W"), d_h, d_x, "W");
  ckpt.params.readout = matrix_from_json(j.at("V"), d_y, d_h, "V");
  ckpt.seed = j.at("seed").get<std::uint64_t>();
  ckpt.epoch = j.at("epoch").get<std::uint64_t>();
  ckpt.params.validate();
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  atomic_write_file(path, checkpoint_to_json(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace rnncap
