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

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rnncap/capacity.hpp"
#include "rnncap/empirical.hpp"
#include "rnncap/harness.hpp"
#include "rnncap/losses.hpp"
#include "rnncap/rnn.hpp"
#include "rnncap/util.hpp"

namespace {

using nlohmann::json;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes to --out atomically, or to stdout when no path was given.
void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    rnncap::atomic_write_file(out_path, text);
  }
}

/// One-line echo of the effective options, so runs are reproducible from
/// their logs alone.
void log_resolved(const json& resolved) {
  std::cerr << resolved.dump() << "\n";
}

std::string strip_json_suffix(const std::string& path) {
  const std::string suffix = ".json";
  if (path.size() > suffix.size() &&
      path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return path.substr(0, path.size() - suffix.size());
  }
  return path;
}

struct TrainArgs {
  std::string config_path;
  std::string out = "checkpoint.json";
};

int run_train(const TrainArgs& args) {
  const rnncap::TrainConfig cfg =
      rnncap::train_config_from_json(read_text_file(args.config_path));
  json resolved;
  resolved["command"] = "train";
  resolved["config"] = json::parse(rnncap::train_config_to_json(cfg));
  resolved["out"] = args.out;
  log_resolved(resolved);

  const rnncap::SequenceBatch data = rnncap::build_dataset(cfg);
  const std::string prefix = strip_json_suffix(args.out);
  const rnncap::TrainResult result = rnncap::train(cfg, data, prefix);
  rnncap::save_checkpoint(result.final_checkpoint, args.out);

  json summary;
  summary["checkpoint"] = args.out;
  summary["epochs"] = cfg.epochs;
  summary["initial_risk"] = result.risk_curve.front();
  summary["final_risk"] = result.risk_curve.back();
  summary["risk_curve"] = result.risk_curve;
  summary["epoch_checkpoints"] = result.checkpoint_paths.size();
  std::cout << summary.dump(2) << "\n";
  return 0;
}

struct NormsArgs {
  std::string checkpoint_path;
  std::string config_path;
  std::string dataset;
  std::uint64_t t = 0;
  std::uint64_t n = 0;
  std::string out;
};

int run_norms(const NormsArgs& args) {
  json resolved;
  resolved["command"] = "norms";
  resolved["checkpoint"] = args.checkpoint_path;
  resolved["config"] = args.config_path;
  log_resolved(resolved);

  const rnncap::Checkpoint ckpt =
      rnncap::load_checkpoint(args.checkpoint_path);
  rnncap::ProfileRecord rec;
  rec.activation = rnncap::activation_name(ckpt.params.activation.kind);
  if (!args.config_path.empty()) {
    const rnncap::TrainConfig cfg =
        rnncap::train_config_from_json(read_text_file(args.config_path));
    const rnncap::SequenceBatch data = rnncap::build_dataset(cfg);
    rec.profile = rnncap::extract_norm_profile(ckpt.params, data);
    rec.dataset = cfg.task;
    rec.loss = cfg.loss;
    rec.gamma = cfg.gamma;
    rec.t = cfg.t;
    rec.n = cfg.n;
  } else {
    rec.profile = rnncap::extract_norm_profile(ckpt.params);
    std::cerr << "note: no dataset config given; input norms assumed to be"
              << " 1 (B_x = B_row = B_x1 = 1)\n";
  }
  if (!args.dataset.empty()) rec.dataset = args.dataset;
  if (args.t > 0) rec.t = args.t;
  if (args.n > 0) rec.n = args.n;
  emit(args.out, rnncap::profile_record_to_json(rec));
  return 0;
}

struct BoundsArgs {
  std::string norms_path;
  std::uint64_t t = 0;
  std::uint64_t n = 0;
  std::string loss;
  double gamma = 0.0;
  double delta = 0.01;
  double risk = 0.0;
  double omega = 0.0;
  std::string which = "all";
  std::string format = "json";
  std::string out;
};

int run_bounds(const BoundsArgs& args) {
  rnncap::ProfileRecord rec =
      rnncap::profile_record_from_json(read_text_file(args.norms_path));
  if (args.t > 0) rec.t = args.t;
  if (args.n > 0) rec.n = args.n;
  if (!args.loss.empty()) rec.loss = args.loss;
  if (args.gamma > 0.0) rec.gamma = args.gamma;
  if (rec.t < 1 || rec.n < 1) {
    throw std::invalid_argument(
        "the profile carries no horizon/sample count; pass --t and --n");
  }
  json resolved;
  resolved["command"] = "bounds";
  resolved["norms"] = args.norms_path;
  resolved["t"] = rec.t;
  resolved["n"] = rec.n;
  resolved["loss"] = rec.loss;
  resolved["delta"] = args.delta;
  resolved["which"] = args.which;
  log_resolved(resolved);

  const rnncap::LossSpec loss =
      rnncap::make_loss(rnncap::loss_kind_from_name(rec.loss), rec.gamma);
  const rnncap::BoundReport report = rnncap::compute_bound_report(
      rec, rec.t, rec.n, loss, args.delta, args.risk, args.omega, {},
      rnncap::bound_selection_from_name(args.which));
  if (args.format == "csv") {
    emit(args.out, rnncap::bound_report_csv_header() +
                       rnncap::bound_report_csv_row(report));
  } else {
    emit(args.out, rnncap::bound_report_to_json(report));
  }
  return 0;
}

struct VerifyArgs {
  std::string suite = "all";
  std::size_t trials = 1000;
  std::uint64_t seed = 42;
  std::string out;
};

int run_verify(const VerifyArgs& args) {
  json resolved;
  resolved["command"] = "verify";
  resolved["suite"] = args.suite;
  resolved["trials"] = args.trials;
  resolved["seed"] = args.seed;
  log_resolved(resolved);

  std::vector<rnncap::VerifyReport> reports;
  const bool lemmas = args.suite == "lemmas" || args.suite == "all";
  const bool gradcheck = args.suite == "gradcheck" || args.suite == "all";
  if (lemmas) {
    reports.push_back(rnncap::verify_hidden_norm(args.trials, args.seed));
    reports.push_back(
        rnncap::verify_output_lipschitz(args.trials, args.seed + 1));
    const rnncap::LossSpec losses[] = {
        rnncap::make_loss(rnncap::LossKind::kCrossEntropy),
        rnncap::make_loss(rnncap::LossKind::kHinge),
        rnncap::make_loss(rnncap::LossKind::kRamp, 1.0),
    };
    std::uint64_t shift = 2;
    for (const rnncap::LossSpec& loss : losses) {
      reports.push_back(
          rnncap::verify_loss_lipschitz(loss, args.trials, args.seed + shift));
      ++shift;
    }
  }
  if (gradcheck) {
    // Smooth seeded configurations, one per activation/loss pairing. The
    // backpropagated gradient must match central differences to 1e-4.
    constexpr double kTolerance = 1e-4;
    const rnncap::ActivationKind activations[] = {
        rnncap::ActivationKind::kRelu, rnncap::ActivationKind::kTanh};
    const rnncap::LossSpec losses[] = {
        rnncap::make_loss(rnncap::LossKind::kCrossEntropy),
        rnncap::make_loss(rnncap::LossKind::kHinge),
        rnncap::make_loss(rnncap::LossKind::kRamp, 1.0),
    };
    std::uint64_t variant = 0;
    for (const rnncap::ActivationKind activation : activations) {
      for (const rnncap::LossSpec& loss : losses) {
        const std::uint64_t seed = args.seed + 100 + variant;
        const rnncap::GradCheckConfig config =
            rnncap::make_smooth_gradient_config(seed, loss, activation,
                                                /*d_x=*/3, /*d_h=*/4,
                                                /*num_classes=*/3, /*t=*/4,
                                                /*n=*/5);
        const rnncap::GradCheckResult result = rnncap::gradient_check(
            config.params, config.batch, loss, 1e-5, seed);
        rnncap::VerifyReport report;
        report.op = "gradient_check:" + rnncap::activation_name(activation) +
                    ":" + rnncap::loss_kind_name(loss.kind);
        report.trials = result.coords_checked;
        report.violations = result.max_rel_error > kTolerance ? 1 : 0;
        report.max_slack_ratio = result.max_rel_error / kTolerance;
        report.seed = seed;
        reports.push_back(report);
        ++variant;
      }
    }
  }
  emit(args.out, rnncap::verify_reports_to_json(reports));
  std::size_t total_violations = 0;
  for (const rnncap::VerifyReport& r : reports) total_violations += r.violations;
  if (total_violations > 0) {
    std::cerr << "error: " << total_violations
              << " verification violation(s) detected\n";
    return 1;
  }
  return 0;
}

struct ErcArgs {
  std::string config_path;
  double b_u = 1.0;
  double b_v = 1.0;
  double b_w = 1.0;
  double m_u = 0.0;
  std::size_t draws = 64;
  std::size_t restarts = 8;
  std::size_t steps = 200;
  double lr = 0.05;
  std::uint64_t seed = 0;  // 0 inherits the config seed
  std::string out;
};

int run_erc(const ErcArgs& args) {
  const rnncap::TrainConfig cfg =
      rnncap::train_config_from_json(read_text_file(args.config_path));
  const std::uint64_t seed = args.seed != 0 ? args.seed : cfg.seed;
  json resolved;
  resolved["command"] = "erc";
  resolved["config"] = json::parse(rnncap::train_config_to_json(cfg));
  resolved["B_U"] = args.b_u;
  resolved["B_V"] = args.b_v;
  resolved["B_W"] = args.b_w;
  resolved["M_U"] = args.m_u;
  resolved["draws"] = args.draws;
  resolved["restarts"] = args.restarts;
  resolved["steps"] = args.steps;
  resolved["lr"] = args.lr;
  resolved["seed"] = seed;
  log_resolved(resolved);

  const rnncap::SequenceBatch data = rnncap::build_dataset(cfg);
  rnncap::ClassConstraints constraints;
  constraints.d_h = cfg.d_h;
  constraints.activation = cfg.activation_kind();
  constraints.B_U = args.b_u;
  constraints.B_V = args.b_v;
  constraints.B_W = args.b_w;
  constraints.M_U = args.m_u;
  const rnncap::ErcEstimate estimate =
      rnncap::estimate_erc_mc(constraints, data, cfg.loss_spec(), args.draws,
                              args.restarts, args.steps, args.lr, seed);
  emit(args.out, rnncap::erc_estimate_to_json(estimate, seed));
  return 0;
}

struct CompareArgs {
  std::vector<std::string> profile_paths;
  double delta = 0.01;
  std::string format = "csv";
  std::string out;
};

int run_compare(const CompareArgs& args) {
  json resolved;
  resolved["command"] = "compare";
  resolved["profiles"] = args.profile_paths;
  resolved["delta"] = args.delta;
  resolved["format"] = args.format;
  log_resolved(resolved);

  std::vector<rnncap::ProfileRecord> records;
  records.reserve(args.profile_paths.size());
  for (const std::string& path : args.profile_paths) {
    records.push_back(
        rnncap::profile_record_from_json(read_text_file(path)));
  }
  if (args.format == "json") {
    emit(args.out, rnncap::compare_rows_to_json(
                       rnncap::compare_profile_rows(records, args.delta)));
  } else {
    emit(args.out, rnncap::compare_profiles(records, args.delta));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "rnncap: trains small recurrent classifiers, measures their weight "
      "norms, and evaluates capacity-based generalization and estimation "
      "bounds"};
  app.require_subcommand(1);

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand(
      "train", "Train a recurrent classifier from a JSON config");
  train_cmd->add_option("--config", train_args.config_path,
                        "Training config JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train_args.out,
                        "Final checkpoint path (default checkpoint.json)");

  NormsArgs norms_args;
  CLI::App* norms_cmd = app.add_subcommand(
      "norms", "Extract the norm profile of a checkpoint");
  norms_cmd->add_option("checkpoint", norms_args.checkpoint_path,
                        "Checkpoint JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  norms_cmd->add_option("--config", norms_args.config_path,
                        "Training config used to rebuild the dataset for "
                        "input norms")
      ->check(CLI::ExistingFile);
  norms_cmd->add_option("--dataset", norms_args.dataset,
                        "Dataset label for the profile record");
  norms_cmd->add_option("--t", norms_args.t, "Horizon recorded with the profile");
  norms_cmd->add_option("--n", norms_args.n,
                        "Sample count recorded with the profile");
  norms_cmd->add_option("--out", norms_args.out,
                        "Output path (stdout when omitted)");

  BoundsArgs bounds_args;
  CLI::App* bounds_cmd = app.add_subcommand(
      "bounds", "Evaluate the bound family for a norm profile");
  bounds_cmd->add_option("--norms", bounds_args.norms_path,
                         "Norm profile record JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  bounds_cmd->add_option("--t", bounds_args.t, "Horizon override");
  bounds_cmd->add_option("--n", bounds_args.n, "Sample count override");
  bounds_cmd->add_option("--loss", bounds_args.loss,
                         "Loss override: cross_entropy | hinge | ramp");
  bounds_cmd->add_option("--gamma", bounds_args.gamma,
                         "Ramp margin override");
  bounds_cmd->add_option("--delta", bounds_args.delta,
                         "Confidence level (default 0.01)");
  bounds_cmd->add_option("--risk", bounds_args.risk,
                         "Empirical risk entering the total bound");
  bounds_cmd->add_option("--omega", bounds_args.omega,
                         "Output range bound omega_t (0 selects the analytic "
                         "default)");
  bounds_cmd
      ->add_option("--which", bounds_args.which,
                   "Bound subset: all | ours | competitors")
      ->check(CLI::IsMember({"all", "ours", "competitors"}));
  bounds_cmd->add_option("--format", bounds_args.format, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}));
  bounds_cmd->add_option("--out", bounds_args.out,
                         "Output path (stdout when omitted)");

  VerifyArgs verify_args;
  CLI::App* verify_cmd = app.add_subcommand(
      "verify", "Randomized checks of the norm and Lipschitz inequalities "
                "and the gradient");
  verify_cmd
      ->add_option("--suite", verify_args.suite,
                   "lemmas | gradcheck | all (default all)")
      ->check(CLI::IsMember({"lemmas", "gradcheck", "all"}));
  verify_cmd->add_option("--trials", verify_args.trials,
                         "Trials per randomized check (default 1000)");
  verify_cmd->add_option("--seed", verify_args.seed, "Base seed (default 42)");
  verify_cmd->add_option("--out", verify_args.out,
                         "Output path (stdout when omitted)");

  ErcArgs erc_args;
  CLI::App* erc_cmd = app.add_subcommand(
      "erc", "Monte-Carlo estimate of the empirical Rademacher complexity "
             "over a constrained class");
  erc_cmd->add_option("--config", erc_args.config_path,
                      "Training config JSON describing the dataset")
      ->required()
      ->check(CLI::ExistingFile);
  erc_cmd->add_option("--b-u", erc_args.b_u,
                      "Frobenius radius of the recurrent matrix");
  erc_cmd->add_option("--b-v", erc_args.b_v,
                      "Frobenius radius of the readout matrix");
  erc_cmd->add_option("--b-w", erc_args.b_w,
                      "Frobenius radius of the input matrix");
  erc_cmd->add_option("--m-u", erc_args.m_u,
                      "Spectral cap on the recurrent matrix (0 disables)");
  erc_cmd->add_option("--draws", erc_args.draws,
                      "Sign draws to average (default 64)");
  erc_cmd->add_option("--restarts", erc_args.restarts,
                      "Ascent restarts per draw (default 8)");
  erc_cmd->add_option("--steps", erc_args.steps,
                      "Ascent steps per restart (default 200)");
  erc_cmd->add_option("--lr", erc_args.lr,
                      "Ascent step size (default 0.05)");
  erc_cmd->add_option("--seed", erc_args.seed,
                      "Seed (0 inherits the config seed)");
  erc_cmd->add_option("--out", erc_args.out,
                      "Output path (stdout when omitted)");

  CompareArgs compare_args;
  CLI::App* compare_cmd = app.add_subcommand(
      "compare", "Bound table with improvement columns for norm profiles");
  compare_cmd
      ->add_option("--profiles", compare_args.profile_paths,
                   "Norm profile record JSON files")
      ->required()
      ->check(CLI::ExistingFile);
  compare_cmd->add_option("--delta", compare_args.delta,
                          "Confidence level (default 0.01)");
  compare_cmd->add_option("--format", compare_args.format, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}));
  compare_cmd->add_option("--out", compare_args.out,
                          "Output path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train_cmd) return run_train(train_args);
    if (*norms_cmd) return run_norms(norms_args);
    if (*bounds_cmd) return run_bounds(bounds_args);
    if (*verify_cmd) return run_verify(verify_args);
    if (*erc_cmd) return run_erc(erc_args);
    if (*compare_cmd) return run_compare(compare_args);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
