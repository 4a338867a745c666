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

#include "rnncap/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rnncap/empirical.hpp"
#include "rnncap/rng.hpp"
#include "rnncap/util.hpp"

namespace rnncap {

namespace {

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

Vector unit_embedding(std::uint64_t seed, std::uint64_t index,
                      std::size_t dim) {
  Rng rng = Rng(seed).split(0x9000 + index);
  Vector v(dim);
  double norm = 0.0;
  do {
    for (double& x : v) x = rng.next_normal();
    norm = norm2(v);
  } while (norm == 0.0);
  for (double& x : v) x /= norm;
  return v;
}

}  // namespace

LossSpec TrainConfig::loss_spec() const {
  return make_loss(loss_kind_from_name(loss), gamma);
}

ActivationKind TrainConfig::activation_kind() const {
  return activation_from_name(activation);
}

void TrainConfig::validate() const {
  require(task == "parity" || task == "majority" || task == "corpus",
          "task must be parity, majority, or corpus");
  require(d_x >= 1 && d_h >= 1, "dimensions must be positive");
  require(num_classes >= 2, "need at least two classes");
  require(t >= 1, "sequence length must be positive");
  require(n >= 1, "sample count must be positive");
  require(epochs >= 1, "epoch count must be positive");
  require(batch_size >= 1, "batch size must be positive");
  require(lr > 0.0, "learning rate must be positive");
  require(clip >= 0.0, "clip must be nonnegative");
  loss_spec();
  activation_from_name(activation);
  if (task == "corpus") {
    require(!corpus_path.empty(), "corpus task needs corpus_path");
    require(vocab_size >= 1, "vocab_size must be positive");
  }
}

std::string train_config_to_json(const TrainConfig& cfg) {
  nlohmann::json j;
  j["task"] = cfg.task;
  j["d_x"] = cfg.d_x;
  j["d_h"] = cfg.d_h;
  j["num_classes"] = cfg.num_classes;
  j["t"] = cfg.t;
  j["n"] = cfg.n;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["lr"] = cfg.lr;
  j["clip"] = cfg.clip;
  j["loss"] = cfg.loss;
  j["gamma"] = cfg.gamma;
  j["activation"] = cfg.activation;
  j["seed"] = cfg.seed;
  j["corpus_path"] = cfg.corpus_path;
  j["vocab_size"] = cfg.vocab_size;
  return j.dump(2) + "\n";
}

TrainConfig train_config_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  TrainConfig cfg;
  cfg.task = j.value("task", cfg.task);
  cfg.d_x = j.value("d_x", cfg.d_x);
  cfg.d_h = j.value("d_h", cfg.d_h);
  cfg.num_classes = j.value("num_classes", cfg.num_classes);
  cfg.t = j.value("t", cfg.t);
  cfg.n = j.value("n", cfg.n);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.clip = j.value("clip", cfg.clip);
  cfg.loss = j.value("loss", cfg.loss);
  cfg.gamma = j.value("gamma", cfg.gamma);
  cfg.activation = j.value("activation", cfg.activation);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.corpus_path = j.value("corpus_path", cfg.corpus_path);
  cfg.vocab_size = j.value("vocab_size", cfg.vocab_size);
  cfg.validate();
  return cfg;
}

SequenceBatch synth_dataset(const std::string& task, std::size_t d_x,
                            std::size_t num_classes, std::size_t t,
                            std::size_t n, std::uint64_t seed) {
  require(task == "parity" || task == "majority",
          "synthetic task must be parity or majority");
  require(d_x >= 1 && num_classes >= 2 && t >= 1 && n >= 1,
          "bad dataset shape");
  SequenceBatch batch;
  batch.steps = t;
  batch.input_dim = d_x;
  batch.num_classes = num_classes;
  batch.input_bound = 1.0;
  batch.mode = LabelMode::kTerminal;
  batch.inputs.resize(n);
  batch.labels.resize(n);

  std::vector<Vector> embeddings;
  if (task == "majority") {
    embeddings.reserve(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) {
      embeddings.push_back(unit_embedding(seed, c, d_x));
    }
  }

  const Rng root(seed);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = root.split(i);
    batch.inputs[i].reserve(t);
    if (task == "parity") {
      std::size_t flips = 0;
      for (std::size_t tau = 0; tau < t; ++tau) {
        const std::size_t j = rng.next_below(d_x);
        const int sign = rng.next_sign();
        if (sign < 0) ++flips;
        Vector x(d_x, 0.0);
        x[j] = static_cast<double>(sign);
        batch.inputs[i].push_back(std::move(x));
      }
      batch.labels[i] = {flips % num_classes};
    } else {
      std::vector<std::size_t> counts(num_classes, 0);
      for (std::size_t tau = 0; tau < t; ++tau) {
        const std::size_t c = rng.next_below(num_classes);
        ++counts[c];
        batch.inputs[i].push_back(embeddings[c]);
      }
      std::size_t best = 0;
      for (std::size_t c = 1; c < num_classes; ++c) {
        if (counts[c] > counts[best]) best = c;
      }
      batch.labels[i] = {best};
    }
  }
  batch.validate();
  return batch;
}

SequenceBatch ingest_corpus(const std::string& path, std::size_t d_x,
                            std::size_t num_classes, std::size_t t,
                            std::size_t n, std::size_t vocab_size,
                            std::uint64_t seed) {
  require(d_x >= 1 && num_classes >= 2 && t >= 1 && n >= 1 &&
              vocab_size >= 1,
          "bad corpus shape");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open corpus: " + path);
  std::vector<std::string> tokens;
  std::string tok;
  while (in >> tok) tokens.push_back(tok);

  std::map<std::string, std::size_t> counts;
  for (const std::string& s : tokens) ++counts[s];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                          counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const std::size_t kept = std::min(vocab_size, ranked.size());
  std::map<std::string, std::size_t> rank;  // 0 = most frequent
  for (std::size_t r = 0; r < kept; ++r) rank[ranked[r].first] = r;
  const std::size_t unknown_rank = kept;  // everything outside the vocab

  if (tokens.size() < t + 1 || tokens.size() - t < n) {
    throw std::invalid_argument(
        "corpus provides " +
        std::to_string(tokens.size() < t + 1 ? 0 : tokens.size() - t) +
        " windows but " + std::to_string(n) + " were requested");
  }

  std::vector<Vector> embeddings(kept + 1);
  for (std::size_t r = 0; r <= kept; ++r) {
    embeddings[r] = unit_embedding(seed, r, d_x);
  }
  auto rank_of = [&](const std::string& s) {
    const auto it = rank.find(s);
    return it == rank.end() ? unknown_rank : it->second;
  };
  auto bucket_of = [&](std::size_t r) {
    return std::min(num_classes - 1, r * num_classes / (kept + 1));
  };

  SequenceBatch batch;
  batch.steps = t;
  batch.input_dim = d_x;
  batch.num_classes = num_classes;
  batch.input_bound = 1.0;
  batch.mode = LabelMode::kTerminal;
  batch.inputs.resize(n);
  batch.labels.resize(n);
  for (std::size_t w = 0; w < n; ++w) {
    batch.inputs[w].reserve(t);
    for (std::size_t tau = 0; tau < t; ++tau) {
      batch.inputs[w].push_back(embeddings[rank_of(tokens[w + tau])]);
    }
    batch.labels[w] = {bucket_of(rank_of(tokens[w + t]))};
  }
  batch.validate();
  return batch;
}

SequenceBatch build_dataset(const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.task == "corpus") {
    return ingest_corpus(cfg.corpus_path, cfg.d_x, cfg.num_classes, cfg.t,
                         cfg.n, cfg.vocab_size, cfg.seed);
  }
  return synth_dataset(cfg.task, cfg.d_x, cfg.num_classes, cfg.t, cfg.n,
                       cfg.seed);
}

namespace {

SequenceBatch make_minibatch(const SequenceBatch& data,
                             const std::vector<std::size_t>& order,
                             std::size_t begin, std::size_t end) {
  SequenceBatch mini;
  mini.steps = data.steps;
  mini.input_dim = data.input_dim;
  mini.num_classes = data.num_classes;
  mini.input_bound = data.input_bound;
  mini.mode = data.mode;
  mini.inputs.reserve(end - begin);
  mini.labels.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    mini.inputs.push_back(data.inputs[order[i]]);
    mini.labels.push_back(data.labels[order[i]]);
  }
  return mini;
}

std::string epoch_log_line(const EpochLog& log) {
  nlohmann::json j;
  j["epoch"] = log.epoch;
  j["risk"] = log.risk;
  j["B_U"] = log.frobenius_u;
  j["M_U"] = log.spectral_u;
  j["elapsed_ms"] = log.elapsed_ms;
  return j.dump() + "\n";
}

std::string checkpoint_path_for_epoch(const std::string& prefix,
                                      std::size_t epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), ".epoch%03zu.json", epoch);
  return prefix + buf;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const SequenceBatch& data,
                  const std::string& checkpoint_prefix) {
  cfg.validate();
  data.validate();
  const LossSpec loss = cfg.loss_spec();
  const Rng root(cfg.seed);
  RnnParams params =
      init_params(data.input_dim, cfg.d_h, data.num_classes,
                  cfg.activation_kind(), Rng(cfg.seed).split(7).next_u64());

  TrainResult result;
  std::string log_lines;
  auto record_epoch = [&](std::size_t epoch, double risk, double ms) {
    EpochLog log;
    log.epoch = epoch;
    log.risk = risk;
    log.frobenius_u = frobenius_norm(params.recurrent);
    log.spectral_u = spectral_norm(params.recurrent);
    log.elapsed_ms = ms;
    result.logs.push_back(log);
    log_lines += epoch_log_line(log);
  };

  const double initial_risk = empirical_risk(params, data, loss);
  result.risk_curve.push_back(initial_risk);
  record_epoch(0, initial_risk, 0.0);

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    Rng shuffle_rng = root.split(0x500 + epoch);
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      const std::size_t j =
          i + static_cast<std::size_t>(
                  shuffle_rng.next_below(order.size() - i));
      std::swap(order[i], order[j]);
    }
    for (std::size_t begin = 0; begin < order.size();
         begin += cfg.batch_size) {
      const std::size_t end =
          std::min(order.size(), begin + cfg.batch_size);
      const SequenceBatch mini = make_minibatch(data, order, begin, end);
      const Gradients grads = bptt_gradient(params, mini, loss);
      clip_and_step(params, grads, cfg.lr, cfg.clip);
    }
    const double risk = empirical_risk(params, data, loss);
    result.risk_curve.push_back(risk);
    const double ms =
        std::chrono::duration<double, std::milli>(
            std::chrono::steady_clock::now() - start)
            .count();
    record_epoch(epoch, risk, ms);
    if (!checkpoint_prefix.empty()) {
      const std::string path =
          checkpoint_path_for_epoch(checkpoint_prefix, epoch);
      save_checkpoint({params, cfg.seed, epoch}, path);
      result.checkpoint_paths.push_back(path);
    }
  }

  result.final_checkpoint = {params, cfg.seed, cfg.epochs};
  if (!checkpoint_prefix.empty()) {
    atomic_write_file(checkpoint_prefix + ".log.jsonl", log_lines);
  }
  return result;
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["base"] = nlohmann::json::parse(train_config_to_json(cfg.base));
  j["t_values"] = cfg.t_values;
  j["n_values"] = cfg.n_values;
  j["activations"] = cfg.activations;
  j["delta"] = cfg.delta;
  j["out_csv"] = cfg.out_csv;
  return j.dump(2) + "\n";
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  ExperimentConfig cfg;
  if (j.contains("base")) {
    cfg.base = train_config_from_json(j.at("base").dump());
  }
  cfg.t_values = j.value("t_values", cfg.t_values);
  cfg.n_values = j.value("n_values", cfg.n_values);
  cfg.activations = j.value("activations", cfg.activations);
  cfg.delta = j.value("delta", cfg.delta);
  cfg.out_csv = j.value("out_csv", cfg.out_csv);
  return cfg;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  require(cfg.delta > 0.0 && cfg.delta < 1.0, "delta must be in (0, 1)");
  const std::vector<std::string> activations =
      cfg.activations.empty() ? std::vector<std::string>{cfg.base.activation}
                              : cfg.activations;
  const std::vector<std::size_t> t_values =
      cfg.t_values.empty() ? std::vector<std::size_t>{cfg.base.t}
                           : cfg.t_values;
  const std::vector<std::size_t> n_values =
      cfg.n_values.empty() ? std::vector<std::size_t>{cfg.base.n}
                           : cfg.n_values;

  ExperimentResult result;
  result.csv = bound_report_csv_header();
  for (const std::string& activation : activations) {
    for (const std::size_t t : t_values) {
      for (const std::size_t n : n_values) {
        TrainConfig point = cfg.base;
        point.activation = activation;
        point.t = t;
        point.n = n;
        point.validate();
        const SequenceBatch data = build_dataset(point);
        const TrainResult trained = train(point, data);
        ProfileRecord rec;
        rec.profile =
            extract_norm_profile(trained.final_checkpoint.params, data);
        rec.dataset = point.task;
        rec.activation = activation;
        rec.loss = point.loss;
        rec.gamma = point.gamma;
        rec.t = t;
        rec.n = n;
        const BoundReport report = compute_bound_report(
            rec, t, n, point.loss_spec(), cfg.delta,
            trained.risk_curve.back(), 0.0);
        result.csv += bound_report_csv_row(report);
        result.reports.push_back(report);
      }
    }
  }
  if (!cfg.out_csv.empty()) atomic_write_file(cfg.out_csv, result.csv);
  return result;
}

double improvement_fraction(double competitor, double reference) {
  require(reference > 0.0, "reference bound must be positive");
  return (competitor - reference) / reference;
}

std::vector<CompareRow> compare_profile_rows(
    const std::vector<ProfileRecord>& records, double delta) {
  require(!records.empty(), "compare needs at least one profile");
  std::vector<CompareRow> rows;
  rows.reserve(records.size());
  for (const ProfileRecord& rec : records) {
    require(rec.t >= 1, "profile record is missing its horizon t");
    require(rec.n >= 1, "profile record is missing its sample count n");
    const LossSpec loss = make_loss(loss_kind_from_name(rec.loss), rec.gamma);
    CompareRow row;
    row.report = compute_bound_report(rec, rec.t, rec.n, loss, delta, 0.0,
                                      0.0);
    // kAll selection: bound1/2/4 are always populated here.
    const double reference = *row.report.bound4_value;
    row.imp1 = improvement_fraction(*row.report.bound1_value, reference);
    row.imp2 = improvement_fraction(*row.report.bound2_value, reference);
    if (row.report.bound3_value) {
      row.imp3 = improvement_fraction(*row.report.bound3_value, reference);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string compare_profiles(const std::vector<ProfileRecord>& records,
                             double delta) {
  std::string csv =
      bound_report_csv_header({"imp_per1", "imp_per2", "imp_per3"});
  for (const CompareRow& row : compare_profile_rows(records, delta)) {
    std::vector<std::string> cells;
    cells.push_back(format_double(row.imp1));
    cells.push_back(format_double(row.imp2));
    cells.push_back(row.imp3 ? format_double(*row.imp3) : std::string());
    csv += bound_report_csv_row(row.report, cells);
  }
  return csv;
}

std::string compare_rows_to_json(const std::vector<CompareRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const CompareRow& row : rows) {
    nlohmann::json j =
        nlohmann::json::parse(bound_report_to_json(row.report));
    j["improvements"]["imp_per1"] = row.imp1;
    j["improvements"]["imp_per2"] = row.imp2;
    if (row.imp3) {
      j["improvements"]["imp_per3"] = *row.imp3;
    } else {
      j["improvements"]["imp_per3"] = nullptr;
    }
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

}  // namespace rnncap
