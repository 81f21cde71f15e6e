// Copyright 2026 The KFDS Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// kfds: corpus generation, staged training, evaluation and the verification
// suites. Exit status 0 on success, 1 when a verification suite fails, 2 for
// usage and I/O errors.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "kfds/io.hpp"
#include "kfds/pipeline.hpp"
#include "kfds/simd.hpp"
#include "kfds/verify.hpp"

namespace {

namespace fs = std::filesystem;
using namespace kfds;

constexpr int kVerifyFailed = 1;
constexpr int kUsage = 2;

void init_logging() {
  auto logger = spdlog::stderr_logger_st("kfds");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("KFDS_LOG")) {
    const std::string level = env;
    if (level == "error") {
      spdlog::set_level(spdlog::level::err);
    } else if (level == "debug") {
      spdlog::set_level(spdlog::level::debug);
    } else if (level != "info") {
      spdlog::warn("KFDS_LOG='{}' not recognised; using info", level);
    }
  }
}

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> stage;
  std::optional<std::string> lsl;
  std::optional<std::string> fusion;
  std::string init;
  std::string out;
  std::optional<std::size_t> workers;
  std::string corpus;
  std::string model;
  bool all = false;
  std::string suite = "all";
};

toy::StageConfig resolve_stage_config(const Options& o) {
  const std::string text = o.config.empty() ? "{}" : io::read_text(o.config);
  // The stage picks the schedule defaults; the file and then flags override.
  int stage = io::stage_config_from_json(text, {}).stage;
  if (o.stage) stage = *o.stage;
  toy::StageConfig cfg =
      io::stage_config_from_json(text, toy::default_stage_config(stage));
  cfg.stage = stage;
  if (o.seed) cfg.seed = *o.seed;
  if (o.lsl) cfg.lsl = toy::parse_lsl(*o.lsl);
  if (o.fusion) cfg.fusion.mode = downsample::parse_fusion(*o.fusion);
  if (o.workers) cfg.workers = *o.workers;
  return cfg;
}

fs::path metrics_path(const fs::path& model_out) {
  fs::path p = model_out;
  p.replace_extension(".metrics.csv");
  return p;
}

int cmd_gen_data(const Options& o) {
  toy::CorpusConfig cfg;
  if (!o.config.empty()) cfg = io::corpus_config_from_json(io::read_text(o.config));
  if (o.seed) cfg.seed = *o.seed;
  const toy::Corpus corpus = toy::generate_corpus(cfg);
  io::write_corpus(o.out, corpus);
  spdlog::info("wrote {} utterances to {}", corpus.utterances.size(), o.out);
  return 0;
}

int cmd_train(const Options& o) {
  const toy::StageConfig cfg = resolve_stage_config(o);
  if (cfg.stage > 1 && o.init.empty()) throw Error("stage requires --init");
  const toy::Corpus corpus = io::read_corpus(o.corpus);
  toy::ToyModel model = o.init.empty()
                            ? toy::init_model(corpus.dim, corpus.vocab, cfg.seed)
                            : io::read_model(o.init).model;
  toy::TrainResult result = toy::train_stage(std::move(model), corpus, cfg);
  io::write_model(o.out, {result.model, cfg, result.report.loss_curve});
  io::write_metrics_csv(metrics_path(o.out), result.history);
  spdlog::info("stage {} held-out ter {:.4f} drop {:.4f}", cfg.stage,
               result.report.token_error_rate, result.report.mean_drop_ratio);
  return 0;
}

int cmd_eval(const Options& o) {
  const io::ModelFile file = io::read_model(o.model);
  const toy::Corpus corpus = io::read_corpus(o.corpus);
  toy::StageConfig cfg = file.config;
  if (o.stage) cfg.stage = *o.stage;
  if (o.fusion) cfg.fusion.mode = downsample::parse_fusion(*o.fusion);
  toy::check_compatible(file.model, corpus, cfg);
  const auto held_out = toy::held_out_indices(corpus);
  toy::EvalReport report =
      o.all ? toy::evaluate(file.model, corpus, cfg)
            : toy::evaluate(file.model, corpus, cfg, held_out);
  report.loss_curve = file.loss_curve;
  std::cout << io::report_to_json(report, cfg.stage);
  return 0;
}

void print_suite(const verify::SuiteResult& r) {
  std::cout << (r.ok() ? "PASS " : "FAIL ") << r.name << " " << r.passed << "/"
            << r.cases << " max_error " << r.max_error << "\n";
  for (const auto& f : r.failures) std::cout << "  " << f << "\n";
}

int cmd_verify(const Options& o) {
  std::vector<verify::SuiteResult> results;
  const bool all = o.suite == "all";
  if (all || o.suite == "axe-oracle") {
    results.push_back(verify::axe_oracle_suite());
    results.push_back(verify::axe_vs_ce_suite());
  }
  if (all || o.suite == "ctc-oracle") results.push_back(verify::ctc_oracle_suite());
  if (all || o.suite == "til-properties") {
    results.push_back(verify::til_properties_suite());
  }
  if (all || o.suite == "gradients") {
    for (auto& r : verify::gradient_suites()) results.push_back(std::move(r));
  }
  bool ok = true;
  for (const auto& r : results) {
    print_suite(r);
    ok = ok && r.ok();
  }
  return ok ? 0 : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  Options o;
  CLI::App app{"Key-frame downsampling toy: data, training, evaluation, checks"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-data", "Write a synthetic corpus (JSONL)");
  gen->add_option("--config", o.config,
                  "JSON with vocab, d, n_utts, len_min, len_max, rep_min, "
                  "rep_max, silence_max, noise_sigma, seed "
                  "(defaults 16, 32, 2000, 5, 12, 2, 6, 2, 0.1, 1)")
      ->check(CLI::ExistingFile);
  gen->add_option("--seed", o.seed, "Overrides the config seed");
  gen->add_option("--out", o.out, "Corpus path")->required();

  auto* train = app.add_subcommand(
      "train", "Train one stage; writes the model JSON and <out>.metrics.csv");
  train->add_option("corpus", o.corpus, "Corpus JSONL")->required()
      ->check(CLI::ExistingFile);
  train->add_option("--config", o.config,
                    "JSON with stage, epochs, learning_rate, batch_size, lsl, "
                    "fusion, fusion_left, fusion_right, alpha0-2, seed, "
                    "workers. Defaults: stage 1 30 epochs lr 0.05; stage 2 "
                    "10 / 0.3; stage 3 10 / 0.6; batch 16, lsl axe, fusion "
                    "attention 1/1, alphas 0.2/0.1/0.7, seed 1, workers 1")
      ->check(CLI::ExistingFile);
  train->add_option("--seed", o.seed, "Init and shuffle seed");
  train->add_option("--stage", o.stage, "1, 2 or 3")->check(CLI::Range(1, 3));
  train->add_option("--lsl", o.lsl, "til, axe or none (stage 3)")
      ->check(CLI::IsMember({"til", "axe", "none"}));
  train->add_option("--fusion", o.fusion, "none, attention or concatenate")
      ->check(CLI::IsMember({"none", "attention", "concatenate"}));
  train->add_option("--init", o.init, "Model from the previous stage")
      ->check(CLI::ExistingFile);
  train->add_option("--out", o.out, "Model path")->required();
  train->add_option("--workers", o.workers, "Parallel utterances per batch")
      ->check(CLI::PositiveNumber);

  auto* eval = app.add_subcommand(
      "eval", "Score a model; JSON report on stdout (held-out split unless --all)");
  eval->add_option("model", o.model, "Model JSON")->required()
      ->check(CLI::ExistingFile);
  eval->add_option("corpus", o.corpus, "Corpus JSONL")->required()
      ->check(CLI::ExistingFile);
  eval->add_flag("--all", o.all, "Score every utterance");
  eval->add_option("--stage", o.stage, "Decode as this stage")
      ->check(CLI::Range(1, 3));
  eval->add_option("--fusion", o.fusion, "Override the stored fusion mode")
      ->check(CLI::IsMember({"none", "attention", "concatenate"}));

  auto* ver = app.add_subcommand("verify", "Run the oracle and gradient suites");
  ver->add_option("suite", o.suite, "axe-oracle, ctc-oracle, gradients, "
                                    "til-properties or all")
      ->check(CLI::IsMember(
          {"axe-oracle", "ctc-oracle", "gradients", "til-properties", "all"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  spdlog::debug("simd kernels: {}", simd::isa_name(simd::active().isa));
  try {
    if (*gen) return cmd_gen_data(o);
    if (*train) return cmd_train(o);
    if (*eval) return cmd_eval(o);
    return cmd_verify(o);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  }
}
