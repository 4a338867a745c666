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

#include "rnncap/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "rnncap/rng.hpp"
#include "rnncap/util.hpp"

namespace rnncap {

namespace {

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

/// Random matrix with the exact Frobenius norm requested.
Matrix random_matrix_with_norm(Rng& rng, std::size_t rows, std::size_t cols,
                               double target_norm) {
  Matrix m(rows, cols);
  double norm = 0.0;
  do {
    for (double& v : m.data()) v = rng.next_normal();
    norm = frobenius_norm(m);
  } while (norm == 0.0);
  const double s = target_norm / norm;
  for (double& v : m.data()) v *= s;
  return m;
}

/// Random vector scaled to the exact Euclidean norm requested.
Vector random_vector_with_norm(Rng& rng, std::size_t dim,
                               double target_norm) {
  Vector v(dim);
  double norm = 0.0;
  do {
    for (double& x : v) x = rng.next_normal();
    norm = norm2(v);
  } while (norm == 0.0);
  for (double& x : v) x *= target_norm / norm;
  return v;
}

}  // namespace

void ClassConstraints::validate() const {
  require(d_h >= 1, "constraint class needs a positive hidden width");
  require(B_U >= 0.0 && B_V >= 0.0 && B_W >= 0.0 && M_U >= 0.0,
          "constraint radii must be nonnegative");
}

void project_to_constraints(RnnParams& params, const ClassConstraints& c) {
  auto shrink_to = [](Matrix& m, double radius) {
    const double norm = frobenius_norm(m);
    if (norm > radius) {
      const double s = radius == 0.0 ? 0.0 : radius / norm;
      for (double& v : m.data()) v *= s;
    }
  };
  shrink_to(params.recurrent, c.B_U);
  shrink_to(params.input, c.B_W);
  shrink_to(params.readout, c.B_V);
  if (c.M_U > 0.0) {
    const double sigma = spectral_norm(params.recurrent);
    if (sigma > c.M_U) {
      const double s = c.M_U / sigma;
      for (double& v : params.recurrent.data()) v *= s;
    }
  }
}

std::string erc_estimate_to_json(const ErcEstimate& e, std::uint64_t seed) {
  nlohmann::json j;
  j["mean"] = e.mean;
  j["std_error"] = e.std_error;
  j["draws"] = e.draws;
  j["restarts"] = e.restarts;
  j["discarded"] = e.discarded;
  j["best_correlations"] = e.best_correlations;
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

ErcEstimate estimate_erc_mc(const ClassConstraints& constraints,
                            const SequenceBatch& batch, const LossSpec& loss,
                            std::size_t draws, std::size_t restarts,
                            std::size_t steps, double lr, std::uint64_t seed) {
  constraints.validate();
  batch.validate();
  require(draws >= 1, "need at least one sign draw");
  require(restarts >= 1, "need at least one restart");
  require(lr > 0.0, "ascent rate must be positive");

  const std::size_t n = batch.size();
  const Rng root(seed);
  ErcEstimate out;
  out.draws = draws;
  out.restarts = restarts;
  out.best_correlations.assign(draws, 0.0);
  std::vector<std::size_t> discarded_per_draw(draws, 0);

  parallel_for(draws, [&](std::size_t draw) {
    Rng draw_rng = root.split(draw);
    Rng sign_rng = draw_rng.split(0);
    std::vector<double> weights(n);
    for (std::size_t i = 0; i < n; ++i) {
      weights[i] = static_cast<double>(sign_rng.next_sign()) /
                   static_cast<double>(n);
    }

    double best = 0.0;
    bool have_best = false;
    for (std::size_t restart = 0; restart < restarts; ++restart) {
      Rng init_rng = draw_rng.split(1 + restart);
      RnnParams params =
          init_params(batch.input_dim, constraints.d_h, batch.num_classes,
                      constraints.activation, init_rng.next_u64());
      project_to_constraints(params, constraints);
      bool diverged = false;
      for (std::size_t step = 0; step < steps; ++step) {
        Gradients g;
        try {
          g = weighted_bptt_gradient(params, batch, loss, weights);
        } catch (const std::runtime_error&) {
          diverged = true;
          break;
        }
        axpy(params.recurrent, lr, g.recurrent);
        axpy(params.input, lr, g.input);
        axpy(params.readout, lr, g.readout);
        project_to_constraints(params, constraints);
      }
      if (diverged) {
        ++discarded_per_draw[draw];
        continue;
      }
      const double value = weighted_objective(params, batch, loss, weights);
      if (!std::isfinite(value)) {
        ++discarded_per_draw[draw];
        continue;
      }
      if (!have_best || value > best) {
        best = value;
        have_best = true;
      }
    }
    if (!have_best) {
      throw std::runtime_error("every ascent restart diverged for a draw");
    }
    out.best_correlations[draw] = best;
  });

  double mean = 0.0;
  for (double v : out.best_correlations) mean += v;
  mean /= static_cast<double>(draws);
  out.mean = mean;
  if (draws > 1) {
    double ss = 0.0;
    for (double v : out.best_correlations) ss += (v - mean) * (v - mean);
    out.std_error = std::sqrt(ss / (static_cast<double>(draws) *
                                    static_cast<double>(draws - 1)));
  }
  for (std::size_t d : discarded_per_draw) out.discarded += d;
  return out;
}

double erc_two_function_exact(const std::vector<double>& values) {
  const std::size_t n = values.size();
  require(n >= 1, "fixture needs at least one point");
  require(n <= 24, "exhaustive enumeration is limited to 24 points");
  const std::uint64_t patterns = 1ULL << n;
  double total = 0.0;
  for (std::uint64_t mask = 0; mask < patterns; ++mask) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s += ((mask >> i) & 1ULL) ? values[i] : -values[i];
    }
    total += std::fabs(s);
  }
  return total / static_cast<double>(patterns) / static_cast<double>(n);
}

ErcEstimate erc_two_function_mc(const std::vector<double>& values,
                                std::size_t draws, std::uint64_t seed) {
  const std::size_t n = values.size();
  require(n >= 1, "fixture needs at least one point");
  require(draws >= 1, "need at least one sign draw");
  const Rng root(seed);
  ErcEstimate out;
  out.draws = draws;
  out.restarts = 1;
  out.best_correlations.assign(draws, 0.0);
  for (std::size_t draw = 0; draw < draws; ++draw) {
    Rng rng = root.split(draw);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s += static_cast<double>(rng.next_sign()) * values[i];
    }
    out.best_correlations[draw] = std::fabs(s) / static_cast<double>(n);
  }
  double mean = 0.0;
  for (double v : out.best_correlations) mean += v;
  mean /= static_cast<double>(draws);
  out.mean = mean;
  if (draws > 1) {
    double ss = 0.0;
    for (double v : out.best_correlations) ss += (v - mean) * (v - mean);
    out.std_error = std::sqrt(ss / (static_cast<double>(draws) *
                                    static_cast<double>(draws - 1)));
  }
  return out;
}

std::string verify_report_to_json(const VerifyReport& report) {
  nlohmann::json j;
  j["op"] = report.op;
  j["trials"] = report.trials;
  j["violations"] = report.violations;
  j["max_slack_ratio"] = report.max_slack_ratio;
  j["seed"] = report.seed;
  return j.dump(2) + "\n";
}

std::string verify_reports_to_json(const std::vector<VerifyReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const VerifyReport& r : reports) {
    nlohmann::json j;
    j["op"] = r.op;
    j["trials"] = r.trials;
    j["violations"] = r.violations;
    j["max_slack_ratio"] = r.max_slack_ratio;
    j["seed"] = r.seed;
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

namespace {

constexpr double kRelativeSlack = 1e-9;

struct RandomConfig {
  RnnParams params;
  std::vector<Vector> inputs;
};

RandomConfig random_config(Rng& rng, std::size_t max_dim, std::size_t max_t) {
  RandomConfig cfg;
  const std::size_t d_h = 1 + rng.next_below(max_dim);
  const std::size_t d_x = 1 + rng.next_below(max_dim);
  const std::size_t d_y = 1 + rng.next_below(max_dim);
  const std::size_t t = 1 + rng.next_below(max_t);
  cfg.params.activation.kind = (rng.next_u64() & 1ULL)
                                   ? ActivationKind::kTanh
                                   : ActivationKind::kRelu;
  cfg.params.recurrent =
      random_matrix_with_norm(rng, d_h, d_h, rng.next_uniform(0.1, 2.0));
  cfg.params.input =
      random_matrix_with_norm(rng, d_h, d_x, rng.next_uniform(0.1, 2.0));
  cfg.params.readout =
      random_matrix_with_norm(rng, d_y, d_h, rng.next_uniform(0.1, 2.0));
  const double input_scale = rng.next_uniform(0.2, 2.0);
  cfg.inputs.reserve(t);
  for (std::size_t tau = 0; tau < t; ++tau) {
    cfg.inputs.push_back(random_vector_with_norm(
        rng, d_x, input_scale * rng.next_uniform(0.25, 1.0)));
  }
  return cfg;
}

double max_input_norm(const std::vector<Vector>& inputs) {
  double best = 0.0;
  for (const Vector& x : inputs) best = std::max(best, norm2(x));
  return best;
}

/// c_tau = sum_{j<tau} x^j for tau = 1..t, accumulated incrementally.
std::vector<double> horizon_sums(double x, std::size_t t) {
  std::vector<double> c(t);
  double acc = 0.0;
  double power = 1.0;
  for (std::size_t tau = 0; tau < t; ++tau) {
    acc += power;
    power *= x;
    c[tau] = acc;
  }
  return c;
}

void record_ratio(double lhs, double bound, VerifyReport* report) {
  if (bound > 0.0) {
    const double ratio = lhs / bound;
    report->max_slack_ratio = std::max(report->max_slack_ratio, ratio);
    if (ratio > 1.0 + kRelativeSlack) ++report->violations;
  } else if (lhs > kRelativeSlack) {
    ++report->violations;
  }
}

}  // namespace

VerifyReport verify_hidden_norm(std::size_t trials, std::uint64_t seed) {
  require(trials >= 1, "need at least one trial");
  VerifyReport report;
  report.op = "hidden_norm";
  report.trials = trials;
  report.seed = seed;
  const Rng root(seed);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng = root.split(trial);
    const RandomConfig cfg = random_config(rng, 8, 12);
    const double rho_h = cfg.params.activation.lipschitz();
    const double b_w = frobenius_norm(cfg.params.input);
    const double m_u = spectral_norm(cfg.params.recurrent);
    const double b_u = frobenius_norm(cfg.params.recurrent);
    const double b_x = max_input_norm(cfg.inputs);
    const ForwardResult fwd = forward(cfg.params, cfg.inputs);
    const std::vector<double> c_frob =
        horizon_sums(rho_h * b_u, cfg.inputs.size());
    const std::vector<double> c_spec =
        horizon_sums(rho_h * std::min(m_u, b_u), cfg.inputs.size());
    for (std::size_t tau = 0; tau < fwd.hidden.size(); ++tau) {
      const double h_norm = norm2(fwd.hidden[tau]);
      record_ratio(h_norm, rho_h * b_w * b_x * c_frob[tau], &report);
      record_ratio(h_norm, rho_h * b_w * b_x * c_spec[tau], &report);
      if (cfg.params.activation.kind == ActivationKind::kTanh) {
        for (double v : fwd.hidden[tau]) {
          if (std::fabs(v) > cfg.params.activation.entry_bound() +
                                 kRelativeSlack) {
            ++report.violations;
          }
        }
      }
    }
  }
  return report;
}

VerifyReport verify_output_lipschitz(std::size_t trials, std::uint64_t seed) {
  require(trials >= 1, "need at least one trial");
  VerifyReport report;
  report.op = "output_lipschitz";
  report.trials = trials;
  report.seed = seed;
  const Rng root(seed);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng = root.split(trial);
    const RandomConfig first = random_config(rng, 8, 12);
    RnnParams second;
    second.activation = first.params.activation;
    const std::size_t d_h = first.params.d_h();
    const std::size_t d_x = first.params.d_x();
    const std::size_t d_y = first.params.d_y();
    second.recurrent =
        random_matrix_with_norm(rng, d_h, d_h, rng.next_uniform(0.1, 2.0));
    second.input =
        random_matrix_with_norm(rng, d_h, d_x, rng.next_uniform(0.1, 2.0));
    second.readout =
        random_matrix_with_norm(rng, d_y, d_h, rng.next_uniform(0.1, 2.0));

    const double rho_h = first.params.activation.lipschitz();
    const double b_u = std::max(frobenius_norm(first.params.recurrent),
                                frobenius_norm(second.recurrent));
    const double b_w = std::max(frobenius_norm(first.params.input),
                                frobenius_norm(second.input));
    const double b_v = std::max(frobenius_norm(first.params.readout),
                                frobenius_norm(second.readout));
    const double b_x = max_input_norm(first.inputs);
    const std::size_t t = first.inputs.size();

    const std::vector<double> c = horizon_sums(rho_h * b_u, t);
    const double c_t = c[t - 1];
    // b_t = sum_{j=0}^{t-2} (j+1) x^j.
    double b_t = 0.0;
    {
      const double x = rho_h * b_u;
      double power = 1.0;
      for (std::size_t j = 0; j + 1 < t; ++j) {
        b_t += static_cast<double>(j + 1) * power;
        power *= x;
      }
    }
    const double a = rho_h * b_x;
    const double l_v = a * b_w * c_t;
    const double l_u = a * rho_h * b_w * b_v * b_t;
    const double l_w = a * b_v * c_t;

    const ForwardResult y1 = forward(first.params, first.inputs);
    const ForwardResult y2 = forward(second, first.inputs);
    Vector diff = y1.outputs[t - 1];
    for (std::size_t i = 0; i < diff.size(); ++i) {
      diff[i] -= y2.outputs[t - 1][i];
    }
    const double lhs = norm2(diff);
    const double bound =
        l_v * frobenius_norm(sub(first.params.readout, second.readout)) +
        l_u * frobenius_norm(sub(first.params.recurrent, second.recurrent)) +
        l_w * frobenius_norm(sub(first.params.input, second.input));
    record_ratio(lhs, bound, &report);
  }
  return report;
}

VerifyReport verify_loss_lipschitz(const LossSpec& loss, std::size_t trials,
                                   std::uint64_t seed) {
  require(trials >= 1, "need at least one trial");
  VerifyReport report;
  report.op = "loss_lipschitz:" + loss_kind_name(loss.kind);
  report.trials = trials;
  report.seed = seed;
  const Rng root(seed);
  const double rho = loss.rho();
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng = root.split(trial);
    const std::size_t k = 2 + rng.next_below(9);
    const std::size_t z = rng.next_below(k);
    std::vector<double> f(k);
    std::vector<double> g(k);
    for (std::size_t i = 0; i < k; ++i) {
      f[i] = rng.next_uniform(-5.0, 5.0);
      g[i] = rng.next_uniform(-5.0, 5.0);
    }
    const double lv = loss_value_grad(loss, f, z).value;
    const double gv = loss_value_grad(loss, g, z).value;
    double dist = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      dist += (f[i] - g[i]) * (f[i] - g[i]);
    }
    dist = std::sqrt(dist);
    const double lhs = std::fabs(lv - gv);
    const double bound = rho * dist + 1e-12;
    record_ratio(lhs, bound, &report);
  }
  return report;
}

GradCheckResult gradient_check(const RnnParams& params,
                               const SequenceBatch& batch,
                               const LossSpec& loss, double fd_step,
                               std::uint64_t seed) {
  require(fd_step > 0.0, "finite-difference step must be positive");
  const Gradients analytic = bptt_gradient(params, batch, loss);
  RnnParams probe = params;
  struct Slot {
    Matrix* matrix;
    const Matrix* grad;
  };
  const Slot slots[3] = {{&probe.recurrent, &analytic.recurrent},
                         {&probe.input, &analytic.input},
                         {&probe.readout, &analytic.readout}};
  std::size_t total = 0;
  for (const Slot& s : slots) total += s.matrix->size();

  std::vector<std::pair<std::size_t, std::size_t>> coords;  // (slot, index)
  for (std::size_t si = 0; si < 3; ++si) {
    for (std::size_t i = 0; i < slots[si].matrix->size(); ++i) {
      coords.emplace_back(si, i);
    }
  }
  if (total > 200) {
    // Seeded subset: partial Fisher-Yates for the first 200 positions.
    Rng rng = Rng(seed).split(0x6c0de);
    for (std::size_t i = 0; i < 200; ++i) {
      const std::size_t j =
          i + static_cast<std::size_t>(rng.next_below(coords.size() - i));
      std::swap(coords[i], coords[j]);
    }
    coords.resize(200);
  }

  GradCheckResult result;
  result.coords_checked = coords.size();
  for (const auto& [si, idx] : coords) {
    double& cell = slots[si].matrix->data()[idx];
    const double saved = cell;
    cell = saved + fd_step;
    const double plus = empirical_risk(probe, batch, loss);
    cell = saved - fd_step;
    const double minus = empirical_risk(probe, batch, loss);
    cell = saved;
    const double fd = (plus - minus) / (2.0 * fd_step);
    const double an = slots[si].grad->data()[idx];
    const double denom = std::max({1e-8, std::fabs(fd), std::fabs(an)});
    result.max_rel_error =
        std::max(result.max_rel_error, std::fabs(fd - an) / denom);
  }
  return result;
}

namespace {

constexpr double kKnotMargin = 1e-3;

/// True when the loss surface is locally smooth at every scored output:
/// margin losses stay clear of their knots and argmax ties, and relu
/// pre-activations stay clear of the kink at zero.
bool config_is_smooth(const RnnParams& params, const SequenceBatch& batch,
                      const LossSpec& loss) {
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const ForwardResult fwd = forward(params, batch.inputs[i]);
    if (params.activation.kind == ActivationKind::kRelu) {
      for (const Vector& pre : fwd.preactivation) {
        for (double v : pre) {
          if (std::fabs(v) < kKnotMargin) return false;
        }
      }
    }
    const std::size_t t = fwd.outputs.size();
    const std::size_t first_scored =
        batch.mode == LabelMode::kTerminal ? t - 1 : 0;
    for (std::size_t tau = first_scored; tau < t; ++tau) {
      const std::size_t z = batch.mode == LabelMode::kTerminal
                                ? batch.labels[i][0]
                                : batch.labels[i][tau];
      const std::vector<double>& f = fwd.outputs[tau];
      // Unique rival argmax by a margin, so the subgradient face is stable.
      double best = -1e300;
      double second = -1e300;
      for (std::size_t kk = 0; kk < f.size(); ++kk) {
        if (kk == z) continue;
        if (f[kk] > best) {
          second = best;
          best = f[kk];
        } else if (f[kk] > second) {
          second = f[kk];
        }
      }
      if (second > -1e300 && best - second < kKnotMargin) return false;
      const double psi = best - f[z];
      if (loss.kind == LossKind::kHinge) {
        if (std::fabs(1.0 + psi) < kKnotMargin) return false;
      } else if (loss.kind == LossKind::kRamp) {
        if (std::fabs(psi) < kKnotMargin) return false;
        if (std::fabs(psi + loss.gamma) < kKnotMargin) return false;
      }
    }
  }
  return true;
}

}  // namespace

GradCheckConfig make_smooth_gradient_config(std::uint64_t seed,
                                            const LossSpec& loss,
                                            ActivationKind activation,
                                            std::size_t d_x, std::size_t d_h,
                                            std::size_t num_classes,
                                            std::size_t t, std::size_t n) {
  require(num_classes >= 2, "need at least two classes");
  require(t >= 1 && n >= 1 && d_x >= 1 && d_h >= 1, "bad config shape");
  const Rng root(seed);
  for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
    Rng rng = root.split(attempt);
    GradCheckConfig cfg;
    cfg.params.activation.kind = activation;
    cfg.params.recurrent =
        random_matrix_with_norm(rng, d_h, d_h, rng.next_uniform(0.3, 1.2));
    cfg.params.input =
        random_matrix_with_norm(rng, d_h, d_x, rng.next_uniform(0.5, 1.5));
    cfg.params.readout = random_matrix_with_norm(rng, num_classes, d_h,
                                                 rng.next_uniform(0.5, 1.5));
    cfg.batch.steps = t;
    cfg.batch.input_dim = d_x;
    cfg.batch.num_classes = num_classes;
    cfg.batch.mode = LabelMode::kTerminal;
    cfg.batch.inputs.resize(n);
    cfg.batch.labels.resize(n);
    double max_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t tau = 0; tau < t; ++tau) {
        Vector x = random_vector_with_norm(rng, d_x,
                                           rng.next_uniform(0.5, 1.5));
        max_norm = std::max(max_norm, norm2(x));
        cfg.batch.inputs[i].push_back(std::move(x));
      }
      cfg.batch.labels[i] = {rng.next_below(num_classes)};
    }
    cfg.batch.input_bound = max_norm;
    cfg.batch.validate();
    if (config_is_smooth(cfg.params, cfg.batch, loss)) return cfg;
  }
  throw std::runtime_error(
      "could not find a smooth gradient-check configuration");
}

NormProfile extract_norm_profile(const RnnParams& params) {
  params.validate();
  NormProfile p;
  p.d_x = params.d_x();
  p.d_h = params.d_h();
  p.d_y = params.d_y();
  p.rho_h = params.activation.lipschitz();
  p.entry_bound = params.activation.entry_bound();
  p.B_U = frobenius_norm(params.recurrent);
  p.B_W = frobenius_norm(params.input);
  p.B_V = frobenius_norm(params.readout);
  p.M_U = spectral_norm(params.recurrent);
  p.M_W = spectral_norm(params.input);
  p.M_V = spectral_norm(params.readout);
  p.B_U1 = one_norm(params.recurrent);
  p.B_W1 = one_norm(params.input);
  p.B_V1 = one_norm(params.readout);
  p.B_x = 1.0;
  p.B_row = 1.0;
  p.B_x1 = 1.0;
  return p.normalized();
}

NormProfile extract_norm_profile(const RnnParams& params,
                                 const SequenceBatch& batch) {
  batch.validate();
  NormProfile p = extract_norm_profile(params);
  double max2 = 0.0;
  double max1 = 0.0;
  for (const auto& seq : batch.inputs) {
    for (const Vector& x : seq) {
      max2 = std::max(max2, norm2(x));
      max1 = std::max(max1, norm1(x));
    }
  }
  // Per-step inputs are the rows of the design matrix, so the row bound and
  // the per-step Euclidean bound coincide; the 1-norm bound is the largest
  // per-step absolute sum.
  p.B_x = max2;
  p.B_row = max2;
  p.B_x1 = max1;
  return p.normalized();
}

}  // namespace rnncap
