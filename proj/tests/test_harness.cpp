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
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rnncap/empirical.hpp"
#include "rnncap/harness.hpp"
#include "rnncap/rng.hpp"
#include "rnncap/util.hpp"

using rnncap::LabelMode;
using rnncap::ProfileRecord;
using rnncap::Rng;
using rnncap::SequenceBatch;
using rnncap::TrainConfig;

namespace {

std::string temp_path(const std::string& name) {
  return std::string("harness_test_") + name;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::stringstream stream(text);
  std::string line;
  while (std::getline(stream, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream stream(line);
  while (std::getline(stream, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

}  // namespace

TEST_CASE("parity labels count negated symbols") {
  const SequenceBatch batch = rnncap::synth_dataset("parity", 4, 2, 5, 400, 9);
  batch.validate();
  CHECK(batch.size() == 400);
  CHECK(batch.steps == 5);
  CHECK(batch.mode == LabelMode::kTerminal);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    std::size_t negations = 0;
    for (const auto& x : batch.inputs[i]) {
      double sum = 0.0;
      for (double v : x) sum += v;
      // each step is +-e_j, so the coordinate sum gives the sign
      CHECK(std::fabs(std::fabs(sum) - 1.0) <= 1e-12);
      if (sum < 0.0) ++negations;
    }
    CHECK(batch.labels[i][0] == negations % 2);
  }

  // the two-class parity label distribution is exactly balanced
  const SequenceBatch wide =
      rnncap::synth_dataset("parity", 4, 2, 6, 10000, 10);
  std::size_t ones = 0;
  for (const auto& label : wide.labels) ones += label[0];
  // binomial(10000, 1/2) three-sigma window
  CHECK(std::fabs(static_cast<double>(ones) - 5000.0) <= 3.0 * 50.0);

  // a single step is its own parity
  const SequenceBatch single = rnncap::synth_dataset("parity", 3, 2, 1, 50, 2);
  for (std::size_t i = 0; i < single.size(); ++i) {
    double sum = 0.0;
    for (double v : single.inputs[i][0]) sum += v;
    CHECK(single.labels[i][0] == (sum < 0.0 ? 1u : 0u));
  }
}

TEST_CASE("majority labels pick the most frequent symbol") {
  // symbol embeddings depend only on (seed, symbol, d_x), so a length-1
  // batch maps each embedding to its symbol id: the label of a unanimous
  // sequence is that symbol
  std::map<std::vector<double>, std::size_t> embedding_to_symbol;
  const SequenceBatch probe =
      rnncap::synth_dataset("majority", 6, 3, 1, 120, 11);
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const auto key = std::vector<double>(probe.inputs[i][0].begin(),
                                         probe.inputs[i][0].end());
    embedding_to_symbol[key] = probe.labels[i][0];
  }
  REQUIRE(embedding_to_symbol.size() == 3);

  const SequenceBatch batch =
      rnncap::synth_dataset("majority", 6, 3, 5, 300, 11);
  batch.validate();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    std::vector<std::size_t> counts(batch.num_classes, 0);
    for (const auto& x : batch.inputs[i]) {
      const auto key = std::vector<double>(x.begin(), x.end());
      REQUIRE(embedding_to_symbol.count(key) == 1);
      ++counts[embedding_to_symbol[key]];
    }
    std::size_t best = 0;  // ties resolve to the lowest symbol id
    for (std::size_t k = 1; k < counts.size(); ++k) {
      if (counts[k] > counts[best]) best = k;
    }
    CHECK(batch.labels[i][0] == best);
  }

  // determinism: the same seed reproduces the batch bit for bit
  const SequenceBatch a = rnncap::synth_dataset("majority", 6, 3, 5, 300, 11);
  CHECK(a.content_hash() == batch.content_hash());
  const SequenceBatch b = rnncap::synth_dataset("majority", 6, 3, 5, 300, 13);
  CHECK(b.content_hash() != batch.content_hash());

  CHECK_THROWS_AS(rnncap::synth_dataset("mystery", 4, 2, 5, 10, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(rnncap::synth_dataset("parity", 0, 2, 5, 10, 1),
                  std::invalid_argument);
}

TEST_CASE("corpus ingestion ranks tokens and buckets labels") {
  const std::string path = temp_path("corpus.txt");
  {
    std::ofstream out(path);
    // counts: alpha 5, beta 3, gamma 2, delta 1
    out << "alpha beta alpha gamma beta alpha delta alpha gamma beta alpha\n";
  }
  const SequenceBatch batch = rnncap::ingest_corpus(path, 4, 2, 2, 6, 10, 3);
  batch.validate();
  CHECK(batch.size() == 6);
  CHECK(batch.steps == 2);
  CHECK(batch.num_classes == 2);

  // identical tokens map to identical embeddings
  const SequenceBatch again = rnncap::ingest_corpus(path, 4, 2, 2, 6, 10, 3);
  CHECK(again.content_hash() == batch.content_hash());

  // a one-token corpus embeds every step identically
  const std::string mono_path = temp_path("mono.txt");
  {
    std::ofstream out(mono_path);
    out << "tok tok tok tok tok tok tok tok\n";
  }
  const SequenceBatch mono = rnncap::ingest_corpus(mono_path, 4, 2, 2, 3, 10,
                                                   3);
  for (const auto& seq : mono.inputs) {
    for (const auto& x : seq) {
      CHECK(std::vector<double>(x.begin(), x.end()) ==
            std::vector<double>(mono.inputs[0][0].begin(),
                                mono.inputs[0][0].end()));
    }
  }
  // every label is the same bucket too
  for (const auto& label : mono.labels) CHECK(label[0] == mono.labels[0][0]);

  CHECK_THROWS_AS(rnncap::ingest_corpus(path, 4, 2, 2, 500, 10, 3),
                  std::invalid_argument);
  CHECK_THROWS_AS(rnncap::ingest_corpus("no_such_file.txt", 4, 2, 2, 2, 10, 3),
                  std::runtime_error);
  std::remove(path.c_str());
  std::remove(mono_path.c_str());
}

TEST_CASE("training reduces risk deterministically") {
  TrainConfig cfg;
  cfg.task = "majority";
  cfg.d_x = 4;
  cfg.d_h = 8;
  cfg.num_classes = 2;
  cfg.t = 3;
  cfg.n = 200;
  cfg.epochs = 4;
  cfg.batch_size = 20;
  cfg.lr = 0.1;
  cfg.clip = 1.0;
  cfg.loss = "cross_entropy";
  cfg.activation = "tanh";
  cfg.seed = 17;
  cfg.validate();
  const SequenceBatch data = rnncap::build_dataset(cfg);

  const rnncap::TrainResult run = rnncap::train(cfg, data);
  REQUIRE(run.risk_curve.size() == cfg.epochs + 1);
  CHECK(run.risk_curve.back() < run.risk_curve.front());
  CHECK(run.final_checkpoint.epoch == cfg.epochs);
  CHECK(run.logs.size() == cfg.epochs + 1);  // epoch 0 records the start

  const rnncap::TrainResult replay = rnncap::train(cfg, data);
  CHECK(replay.risk_curve == run.risk_curve);
  CHECK(replay.final_checkpoint.params.recurrent.data() ==
        run.final_checkpoint.params.recurrent.data());

  // a zero learning rate is rejected up front
  TrainConfig frozen = cfg;
  frozen.lr = 0.0;
  CHECK_THROWS_AS(rnncap::train(frozen, data), std::invalid_argument);

  // the curve starts at the risk of the seeded initial parameters
  const rnncap::RnnParams fresh = rnncap::init_params(
      cfg.d_x, cfg.d_h, cfg.num_classes, cfg.activation_kind(),
      rnncap::Rng(cfg.seed).split(7).next_u64());
  CHECK(run.risk_curve.front() ==
        doctest::Approx(rnncap::empirical_risk(fresh, data, cfg.loss_spec()))
            .epsilon(1e-15));
}

TEST_CASE("training writes checkpoints and a jsonl log") {
  TrainConfig cfg;
  cfg.task = "parity";
  cfg.d_x = 3;
  cfg.d_h = 4;
  cfg.num_classes = 2;
  cfg.t = 2;
  cfg.n = 40;
  cfg.epochs = 2;
  cfg.batch_size = 10;
  cfg.lr = 0.05;
  cfg.loss = "hinge";
  cfg.activation = "relu";
  cfg.seed = 5;
  const SequenceBatch data = rnncap::build_dataset(cfg);
  const std::string prefix = temp_path("run");
  const rnncap::TrainResult run = rnncap::train(cfg, data, prefix);
  REQUIRE(run.checkpoint_paths.size() == 2);

  for (const std::string& path : run.checkpoint_paths) {
    const rnncap::Checkpoint loaded = rnncap::load_checkpoint(path);
    CHECK(loaded.params.d_h() == 4);
    std::remove(path.c_str());
  }
  std::ifstream log(prefix + ".log.jsonl");
  REQUIRE(log.good());
  std::string line;
  std::size_t lines = 0;
  while (std::getline(log, line)) {
    const nlohmann::json j = nlohmann::json::parse(line);
    CHECK(j.contains("epoch"));
    CHECK(j.contains("risk"));
    CHECK(j.contains("B_U"));
    CHECK(j.contains("M_U"));
    CHECK(j.contains("elapsed_ms"));
    ++lines;
  }
  CHECK(lines == 3);  // epoch 0 plus one line per trained epoch
  log.close();
  std::remove((prefix + ".log.jsonl").c_str());
}

TEST_CASE("config serialization round trips with defaults") {
  TrainConfig cfg;
  cfg.task = "parity";
  cfg.lr = 0.125;
  cfg.seed = 77;
  const std::string text = rnncap::train_config_to_json(cfg);
  const TrainConfig back = rnncap::train_config_from_json(text);
  CHECK(back.task == "parity");
  CHECK(back.lr == 0.125);
  CHECK(back.seed == 77);
  CHECK(rnncap::train_config_to_json(back) == text);

  // omitted fields keep their defaults
  const TrainConfig sparse =
      rnncap::train_config_from_json("{\"task\": \"majority\", \"n\": 12}");
  CHECK(sparse.task == "majority");
  CHECK(sparse.n == 12);
  CHECK(sparse.d_h == TrainConfig{}.d_h);
  CHECK(sparse.loss == TrainConfig{}.loss);

  CHECK_THROWS_AS(rnncap::train_config_from_json("not json"),
                  nlohmann::json::exception);

  rnncap::ExperimentConfig exp;
  exp.base = cfg;
  exp.t_values = {2, 3};
  exp.n_values = {50};
  exp.activations = {"relu", "tanh"};
  exp.delta = 0.05;
  const std::string etext = rnncap::experiment_config_to_json(exp);
  const rnncap::ExperimentConfig eback =
      rnncap::experiment_config_from_json(etext);
  CHECK(eback.t_values == exp.t_values);
  CHECK(eback.n_values == exp.n_values);
  CHECK(eback.activations == exp.activations);
  CHECK(eback.delta == 0.05);
  CHECK(rnncap::experiment_config_to_json(eback) == etext);
}

TEST_CASE("experiment sweep emits one csv row per grid point") {
  rnncap::ExperimentConfig exp;
  exp.base.task = "majority";
  exp.base.d_x = 3;
  exp.base.d_h = 4;
  exp.base.num_classes = 2;
  exp.base.epochs = 1;
  exp.base.batch_size = 10;
  exp.base.lr = 0.05;
  exp.base.loss = "ramp";
  exp.base.gamma = 1.0;
  exp.base.seed = 3;
  exp.t_values = {2, 3};
  exp.n_values = {30};
  exp.activations = {"tanh"};
  exp.delta = 0.01;
  exp.out_csv = temp_path("sweep.csv");
  const rnncap::ExperimentResult result = rnncap::run_experiment(exp);
  CHECK(result.reports.size() == 2);

  const std::vector<std::string> lines = split_lines(result.csv);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == split_lines(rnncap::bound_report_csv_header())[0]);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split_csv(lines[i]);
    CHECK(cells.size() == 16);
    CHECK(cells[6] == "tanh");
    CHECK(cells[7] == "ramp");
  }
  // the atomic write landed with identical bytes
  std::ifstream in(exp.out_csv, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream buffer;
  buffer << in.rdbuf();
  CHECK(buffer.str() == result.csv);
  in.close();
  std::remove(exp.out_csv.c_str());

  // tanh profiles populate every bound column
  for (const rnncap::BoundReport& report : result.reports) {
    CHECK(report.bound3_value.has_value());
    CHECK(report.bound4_star_value.has_value());
  }
}

TEST_CASE("improvement fractions and the comparison table") {
  CHECK(rnncap::improvement_fraction(13.54, 12.89) ==
        doctest::Approx((13.54 - 12.89) / 12.89).epsilon(1e-12));
  CHECK_THROWS_AS(rnncap::improvement_fraction(1.0, 0.0),
                  std::invalid_argument);

  Rng rng(414);
  std::vector<ProfileRecord> records;
  for (int i = 0; i < 3; ++i) {
    ProfileRecord rec;
    rec.profile = rnncap_tests::oracle_random_profile(rng, i > 0, 0.5, 1.5,
                                                      2);
    rec.dataset = "unit";
    rec.loss = "ramp";
    rec.gamma = 1.0;
    rec.t = 3;
    rec.n = 100 + 50 * i;
    records.push_back(rec);
  }

  const std::vector<rnncap::CompareRow> rows =
      rnncap::compare_profile_rows(records, 0.01);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const rnncap::BoundReport& report = rows[i].report;
    REQUIRE(report.bound1_value.has_value());
    REQUIRE(report.bound4_value.has_value());
    CHECK(rows[i].imp1 ==
          doctest::Approx(rnncap::improvement_fraction(*report.bound1_value,
                                                       *report.bound4_value))
              .epsilon(1e-12));
    CHECK(rows[i].imp3.has_value() == report.bound3_value.has_value());
  }
  CHECK_FALSE(rows[0].imp3.has_value());

  const std::string csv = rnncap::compare_profiles(records, 0.01);
  const std::vector<std::string> lines = split_lines(csv);
  REQUIRE(lines.size() == 4);
  const auto header = split_csv(lines[0]);
  REQUIRE(header.size() == 19);
  CHECK(header[16] == "imp_per1");
  CHECK(header[18] == "imp_per3");
  // the relu row leaves imp_per3 empty
  const auto first = split_csv(lines[1]);
  REQUIRE(first.size() == 19);
  CHECK(first[18].empty());
  const auto second = split_csv(lines[2]);
  CHECK_FALSE(second[18].empty());

  const nlohmann::json arr =
      nlohmann::json::parse(rnncap::compare_rows_to_json(rows));
  REQUIRE(arr.is_array());
  REQUIRE(arr.size() == 3);
  CHECK(arr[0].at("improvements").at("imp_per3").is_null());
  CHECK(arr[1].at("improvements").at("imp_per3").is_number());
  CHECK(arr[0].at("improvements").at("imp_per1").get<double>() ==
        doctest::Approx(rows[0].imp1).epsilon(1e-12));

  // records without a horizon are rejected
  ProfileRecord missing;
  missing.profile = records[0].profile;
  missing.loss = "ramp";
  CHECK_THROWS_AS(rnncap::compare_profile_rows({missing}, 0.01),
                  std::invalid_argument);
}
