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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rnncap/empirical.hpp"
#include "rnncap/losses.hpp"
#include "rnncap/rng.hpp"

using rnncap::ActivationKind;
using rnncap::ClassConstraints;
using rnncap::ErcEstimate;
using rnncap::LabelMode;
using rnncap::LossKind;
using rnncap::LossSpec;
using rnncap::Matrix;
using rnncap::NormProfile;
using rnncap::Rng;
using rnncap::RnnParams;
using rnncap::SequenceBatch;

namespace {

SequenceBatch random_batch(std::uint64_t seed, std::size_t n, std::size_t t,
                           std::size_t d_x, std::size_t k) {
  Rng rng(seed);
  SequenceBatch batch;
  batch.steps = t;
  batch.input_dim = d_x;
  batch.num_classes = k;
  batch.input_bound = std::sqrt(static_cast<double>(d_x));
  batch.mode = LabelMode::kTerminal;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<rnncap::Vector> seq;
    for (std::size_t s = 0; s < t; ++s) {
      rnncap::Vector x(d_x);
      for (double& v : x) v = rng.next_uniform(-1.0, 1.0);
      seq.push_back(x);
    }
    batch.inputs.push_back(std::move(seq));
    batch.labels.push_back({rng.next_below(k)});
  }
  batch.validate();
  return batch;
}

double column_one_norm_max(const Matrix& m) {
  double best = 0.0;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) sum += std::fabs(m(r, c));
    best = std::max(best, sum);
  }
  return best;
}

double frob(const Matrix& m) {
  double sq = 0.0;
  for (double v : m.data()) sq += v * v;
  return std::sqrt(sq);
}

}  // namespace

TEST_CASE("constraint validation and projection") {
  ClassConstraints c;
  c.d_h = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.d_h = 2;
  c.B_U = -1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.B_U = c.B_V = c.B_W = 1.0;
  c.validate();

  // a model already inside the ball is untouched
  RnnParams tiny = rnncap::init_params(2, 2, 2, ActivationKind::kRelu, 3,
                                       0.01);
  const std::vector<double> before = tiny.recurrent.data();
  rnncap::project_to_constraints(tiny, c);
  CHECK(tiny.recurrent.data() == before);

  // outside models shrink radially onto the sphere
  RnnParams big = rnncap::init_params(2, 2, 2, ActivationKind::kRelu, 4, 5.0);
  const Matrix original = big.input;
  rnncap::project_to_constraints(big, c);
  CHECK(frob(big.input) == doctest::Approx(1.0).epsilon(1e-12));
  const double scale = frob(original) != 0.0 ? 1.0 / frob(original) : 0.0;
  for (std::size_t i = 0; i < original.data().size(); ++i) {
    CHECK(big.input.data()[i] ==
          doctest::Approx(original.data()[i] * scale).epsilon(1e-12));
  }

  // the spectral cap rescales the recurrent matrix alone
  ClassConstraints capped;
  capped.d_h = 2;
  capped.B_U = 100.0;
  capped.B_V = 100.0;
  capped.B_W = 100.0;
  capped.M_U = 1.0;
  RnnParams diag = rnncap::init_params(2, 2, 2, ActivationKind::kRelu, 5,
                                       0.01);
  diag.recurrent = Matrix(2, 2, {2.0, 0.0, 0.0, 0.5});
  rnncap::project_to_constraints(diag, capped);
  CHECK(diag.recurrent(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(diag.recurrent(1, 1) == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("two function complexity matches exhaustive enumeration") {
  CHECK(rnncap::erc_two_function_exact({1.0, 1.0}) == 0.5);
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.next_below(11);
    std::vector<double> values(n);
    for (double& v : values) v = rng.next_uniform(-2.0, 2.0);
    const double exact = rnncap::erc_two_function_exact(values);
    const double reference = rnncap_tests::oracle_sign_average(values);
    CHECK(exact == doctest::Approx(reference).epsilon(1e-12));
  }
  CHECK_THROWS_AS(rnncap::erc_two_function_exact(std::vector<double>(25, 1.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(rnncap::erc_two_function_exact({}), std::invalid_argument);
}

TEST_CASE("two function monte carlo approaches the exact value") {
  Rng rng(22);
  std::vector<double> values(10);
  for (double& v : values) v = rng.next_uniform(-1.0, 1.0);
  const double exact = rnncap::erc_two_function_exact(values);
  const ErcEstimate mc = rnncap::erc_two_function_mc(values, 4000, 77);
  CHECK(mc.draws == 4000);
  CHECK(mc.std_error > 0.0);
  CHECK(std::fabs(mc.mean - exact) <= 5.0 * mc.std_error + 1e-9);
  const ErcEstimate again = rnncap::erc_two_function_mc(values, 4000, 77);
  CHECK(again.mean == mc.mean);
  CHECK(again.std_error == mc.std_error);
}

TEST_CASE("monte carlo class complexity is deterministic and thread safe") {
  ClassConstraints c;
  c.d_h = 3;
  c.activation = ActivationKind::kTanh;
  c.B_U = 1.0;
  c.B_V = 1.0;
  c.B_W = 1.0;
  const SequenceBatch batch = random_batch(31, 8, 3, 2, 2);
  const LossSpec loss = rnncap::make_loss(LossKind::kRamp, 1.0);

  setenv("RNNCAP_THREADS", "1", 1);
  const ErcEstimate serial =
      rnncap::estimate_erc_mc(c, batch, loss, 6, 2, 25, 0.1, 99);
  setenv("RNNCAP_THREADS", "4", 1);
  const ErcEstimate threaded =
      rnncap::estimate_erc_mc(c, batch, loss, 6, 2, 25, 0.1, 99);
  unsetenv("RNNCAP_THREADS");

  CHECK(serial.mean == threaded.mean);
  CHECK(serial.std_error == threaded.std_error);
  CHECK(serial.best_correlations == threaded.best_correlations);
  CHECK(serial.draws == 6);
  CHECK(serial.restarts == 2);
  CHECK(serial.best_correlations.size() == 6);

  const ErcEstimate repeat =
      rnncap::estimate_erc_mc(c, batch, loss, 6, 2, 25, 0.1, 99);
  CHECK(repeat.mean == serial.mean);

  // json carries every field plus the seed
  const nlohmann::json j =
      nlohmann::json::parse(rnncap::erc_estimate_to_json(serial, 99));
  CHECK(j.at("draws").get<std::size_t>() == 6);
  CHECK(j.at("restarts").get<std::size_t>() == 2);
  CHECK(j.at("seed").get<std::uint64_t>() == 99);
  CHECK(j.at("best_correlations").size() == 6);
  CHECK(j.at("mean").get<double>() == serial.mean);
  CHECK(j.contains("std_error"));
  CHECK(j.contains("discarded"));
}

TEST_CASE("more ascent restarts never lower the draw suprema") {
  ClassConstraints c;
  c.d_h = 2;
  c.activation = ActivationKind::kRelu;
  c.B_U = 0.8;
  c.B_V = 1.0;
  c.B_W = 1.0;
  const SequenceBatch batch = random_batch(32, 6, 2, 2, 2);
  const LossSpec loss = rnncap::make_loss(LossKind::kHinge);
  const ErcEstimate one =
      rnncap::estimate_erc_mc(c, batch, loss, 5, 1, 20, 0.1, 7);
  const ErcEstimate two =
      rnncap::estimate_erc_mc(c, batch, loss, 5, 2, 20, 0.1, 7);
  REQUIRE(one.best_correlations.size() == two.best_correlations.size());
  for (std::size_t i = 0; i < one.best_correlations.size(); ++i) {
    CHECK(two.best_correlations[i] >= one.best_correlations[i] - 1e-15);
  }
  CHECK(two.mean >= one.mean - 1e-15);
}

TEST_CASE("backpropagation passes the central difference check") {
  const struct {
    ActivationKind act;
    LossKind loss;
    double gamma;
  } cases[] = {
      {ActivationKind::kRelu, LossKind::kCrossEntropy, 0.0},
      {ActivationKind::kRelu, LossKind::kHinge, 0.0},
      {ActivationKind::kRelu, LossKind::kRamp, 1.0},
      {ActivationKind::kTanh, LossKind::kCrossEntropy, 0.0},
      {ActivationKind::kTanh, LossKind::kHinge, 0.0},
      {ActivationKind::kTanh, LossKind::kRamp, 1.0},
  };
  std::uint64_t seed = 500;
  for (const auto& cfg : cases) {
    const LossSpec loss = rnncap::make_loss(cfg.loss, cfg.gamma);
    const rnncap::GradCheckConfig smooth = rnncap::make_smooth_gradient_config(
        seed++, loss, cfg.act, 3, 4, 3, 4, 5);
    const rnncap::GradCheckResult result =
        rnncap::gradient_check(smooth.params, smooth.batch, loss, 1e-5, 11);
    CAPTURE(static_cast<int>(cfg.loss));
    CHECK(result.coords_checked > 0);
    CHECK(result.max_rel_error <= 1e-4);
  }
}

TEST_CASE("smooth configs keep relu preactivations away from the kink") {
  const LossSpec loss = rnncap::make_loss(LossKind::kHinge);
  const rnncap::GradCheckConfig cfg = rnncap::make_smooth_gradient_config(
      901, loss, ActivationKind::kRelu, 3, 4, 3, 4, 5);
  for (const auto& seq : cfg.batch.inputs) {
    const rnncap::ForwardResult run = rnncap::forward(cfg.params, seq);
    for (const auto& pre : run.preactivation) {
      for (double v : pre) CHECK(std::fabs(v) >= 0.999e-3);
    }
  }
}

TEST_CASE("norm profile extraction measures every constant") {
  const RnnParams params =
      rnncap::init_params(3, 4, 2, ActivationKind::kTanh, 41, 0.7);
  const SequenceBatch batch = random_batch(42, 6, 3, 3, 2);
  const NormProfile p = rnncap::extract_norm_profile(params, batch);
  p.validate();
  CHECK(p.d_x == 3);
  CHECK(p.d_h == 4);
  CHECK(p.d_y == 2);
  CHECK(p.entry_bound == 1.0);
  CHECK(p.rho_h == 1.0);
  CHECK(p.B_U == doctest::Approx(frob(params.recurrent)).epsilon(1e-12));
  CHECK(p.B_W == doctest::Approx(frob(params.input)).epsilon(1e-12));
  CHECK(p.B_V == doctest::Approx(frob(params.readout)).epsilon(1e-12));
  CHECK(p.M_U ==
        doctest::Approx(rnncap_tests::oracle_spectral_norm(params.recurrent))
            .epsilon(1e-8));
  CHECK(p.M_U <= p.B_U * (1.0 + 1e-12));
  CHECK(p.B_U1 ==
        doctest::Approx(column_one_norm_max(params.recurrent))
            .epsilon(1e-12));
  CHECK(p.B_W1 ==
        doctest::Approx(column_one_norm_max(params.input)).epsilon(1e-12));
  CHECK(p.B_V1 ==
        doctest::Approx(column_one_norm_max(params.readout)).epsilon(1e-12));

  double b2 = 0.0, b1 = 0.0;
  for (const auto& seq : batch.inputs) {
    for (const auto& x : seq) {
      double sq = 0.0, one = 0.0;
      for (double v : x) {
        sq += v * v;
        one += std::fabs(v);
      }
      b2 = std::max(b2, std::sqrt(sq));
      b1 = std::max(b1, one);
    }
  }
  CHECK(p.B_x == doctest::Approx(b2).epsilon(1e-12));
  CHECK(p.B_row == doctest::Approx(b2).epsilon(1e-12));
  CHECK(p.B_x1 == doctest::Approx(b1).epsilon(1e-12));

  // the params-only overload assumes unit inputs
  const RnnParams relu =
      rnncap::init_params(3, 4, 2, ActivationKind::kRelu, 43, 0.7);
  const NormProfile q = rnncap::extract_norm_profile(relu);
  CHECK(q.B_x == 1.0);
  CHECK(q.B_row == 1.0);
  CHECK(q.B_x1 == 1.0);
  CHECK(q.entry_bound == 0.0);
  CHECK(q.B_U == doctest::Approx(frob(relu.recurrent)).epsilon(1e-12));
}

TEST_CASE("randomized inequality checks hold") {
  const rnncap::VerifyReport hidden = rnncap::verify_hidden_norm(300, 7);
  CHECK(hidden.trials == 300);
  CHECK(hidden.violations == 0);
  CHECK(hidden.max_slack_ratio <= 1.0 + 1e-9);
  CHECK(!hidden.op.empty());

  const rnncap::VerifyReport lipschitz =
      rnncap::verify_output_lipschitz(200, 8);
  CHECK(lipschitz.trials == 200);
  CHECK(lipschitz.violations == 0);
  CHECK(lipschitz.max_slack_ratio <= 1.0 + 1e-9);

  const LossSpec specs[] = {
      rnncap::make_loss(LossKind::kCrossEntropy),
      rnncap::make_loss(LossKind::kHinge),
      rnncap::make_loss(LossKind::kRamp, 0.5),
  };
  std::uint64_t seed = 900;
  for (const LossSpec& spec : specs) {
    const rnncap::VerifyReport r =
        rnncap::verify_loss_lipschitz(spec, 300, seed++);
    CHECK(r.violations == 0);
    CHECK(r.max_slack_ratio <= 1.0 + 1e-9);
  }

  const nlohmann::json arr = nlohmann::json::parse(
      rnncap::verify_reports_to_json({hidden, lipschitz}));
  CHECK(arr.is_array());
  CHECK(arr.size() == 2);
  CHECK(arr[0].at("op").get<std::string>() == hidden.op);
  CHECK(arr[0].at("violations").get<std::size_t>() == 0);
  CHECK(arr[0].contains("trials"));
  CHECK(arr[0].contains("max_slack_ratio"));
  CHECK(arr[0].contains("seed"));
}
