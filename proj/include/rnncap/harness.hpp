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

#ifndef RNNCAP_HARNESS_HPP
#define RNNCAP_HARNESS_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rnncap/capacity.hpp"
#include "rnncap/rnn.hpp"

namespace rnncap {

/// Training recipe. Serialized as JSON with these exact field names.
struct TrainConfig {
  std::string task = "majority";  // parity | majority | corpus
  std::size_t d_x = 8;
  std::size_t d_h = 16;
  std::size_t num_classes = 2;
  std::size_t t = 5;
  std::size_t n = 2000;
  std::size_t epochs = 20;
  std::size_t batch_size = 20;
  double lr = 0.1;
  double clip = 0.25;
  std::string loss = "cross_entropy";
  double gamma = 1.0;
  std::string activation = "relu";
  std::uint64_t seed = 42;
  std::string corpus_path;
  std::size_t vocab_size = 50;

  LossSpec loss_spec() const;
  ActivationKind activation_kind() const;
  void validate() const;
};

std::string train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& text);

/// Synthetic sequence classification data with unit-norm step inputs.
///
/// parity: each step emits a signed basis vector +-e_j; the label is the
/// count of negated symbols modulo the class count (classic sign-flip parity
/// at num_classes = 2, where the label distribution is exactly balanced).
///
/// majority: each step emits the fixed unit embedding of one of num_classes
/// symbols; the label is the most frequent symbol, ties to the lowest index.
SequenceBatch synth_dataset(const std::string& task, std::size_t d_x,
                            std::size_t num_classes, std::size_t t,
                            std::size_t n, std::uint64_t seed);

/// Whitespace-tokenized text corpus: the vocab_size most frequent tokens
/// keep their identity, the rest map to an unknown token. Each window of t
/// tokens becomes a sequence of fixed seeded unit embeddings; the label is
/// the frequency-rank bucket (num_classes equal-width buckets) of the next
/// token. Throws std::runtime_error when the file is unreadable and
/// std::invalid_argument when fewer than n windows exist.
SequenceBatch ingest_corpus(const std::string& path, std::size_t d_x,
                            std::size_t num_classes, std::size_t t,
                            std::size_t n, std::size_t vocab_size,
                            std::uint64_t seed);

/// Builds the dataset a config describes (synthetic task or corpus).
SequenceBatch build_dataset(const TrainConfig& cfg);

struct EpochLog {
  std::size_t epoch = 0;
  double risk = 0.0;
  double frobenius_u = 0.0;
  double spectral_u = 0.0;
  double elapsed_ms = 0.0;
};

struct TrainResult {
  Checkpoint final_checkpoint;
  std::vector<double> risk_curve;  // index 0 is the initial parameters
  std::vector<std::string> checkpoint_paths;
  std::vector<EpochLog> logs;
};

/// Minibatch SGD with gradient clipping over seeded shuffles. When
/// checkpoint_prefix is nonempty, every epoch writes
/// <prefix>.epochNNN.json plus one JSONL line ({"epoch", "risk", "B_U",
/// "M_U", "elapsed_ms"}) to <prefix>.log.jsonl.
TrainResult train(const TrainConfig& cfg, const SequenceBatch& data,
                  const std::string& checkpoint_prefix = "");

/// Sweep description for the bound comparison pipeline.
struct ExperimentConfig {
  TrainConfig base;
  std::vector<std::size_t> t_values;
  std::vector<std::size_t> n_values;
  std::vector<std::string> activations;
  double delta = 0.01;
  std::string out_csv;
};

std::string experiment_config_to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json(const std::string& text);

struct ExperimentResult {
  std::vector<BoundReport> reports;
  std::string csv;
};

/// Trains one model per (activation, t, n) sweep point, extracts its norm
/// profile, and evaluates the bound family. The CSV is written atomically to
/// cfg.out_csv when set.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Improvement of the reference complexity bound over a competitor,
/// (competitor - reference) / reference.
double improvement_fraction(double competitor, double reference);

/// One evaluated comparison row: the full bound report plus improvement
/// fractions of bound1..bound3 over bound4 (imp3 absent without bound3).
struct CompareRow {
  BoundReport report;
  double imp1 = 0.0;
  double imp2 = 0.0;
  std::optional<double> imp3;
};

/// Evaluates every record at its own (t, n). Every record must carry its
/// evaluation horizon t and sample count n.
std::vector<CompareRow> compare_profile_rows(
    const std::vector<ProfileRecord>& records, double delta);

/// CSV rendering of compare_profile_rows with trailing columns
/// imp_per1..imp_per3.
std::string compare_profiles(const std::vector<ProfileRecord>& records,
                             double delta);
std::string compare_rows_to_json(const std::vector<CompareRow>& rows);

}  // namespace rnncap

#endif  // RNNCAP_HARNESS_HPP
