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

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "kfds/ctc.hpp"
#include "kfds/downsample.hpp"
#include "kfds/losses.hpp"
#include "kfds/numerics.hpp"

namespace kfds::toy {

struct CorpusConfig {
  std::size_t vocab = 16;  // including blank
  std::size_t dim = 32;
  std::size_t n_utts = 2000;
  std::size_t len_min = 5;
  std::size_t len_max = 12;
  std::size_t rep_min = 2;
  std::size_t rep_max = 6;
  // Silence frames drawn from [0, silence_max] at each gap and edge.
  std::size_t silence_max = 2;
  double noise_sigma = 0.1;
  std::uint64_t seed = 1;
};

struct SyntheticUtterance {
  Matrix frames;  // T x d
  LabelSequence target;
  // [begin, end) frame span of each target token; diagnostics only.
  std::vector<std::pair<std::size_t, std::size_t>> boundaries;
};

struct Corpus {
  std::size_t dim = 0;
  std::size_t vocab = 0;
  std::uint64_t seed = 0;
  std::vector<SyntheticUtterance> utterances;
};

// Deterministic in the config. Repeated adjacent tokens are always separated
// by at least one silence frame when silence_max > 0; with silence disabled,
// layouts that CTC could not represent are redrawn.
Corpus generate_corpus(const CorpusConfig& config);

// Fixed 90/10 split keyed on the utterance index.
bool is_held_out(std::size_t utterance_index);

struct Linear {
  Matrix weight;              // d x V
  std::vector<double> bias;   // V

  Matrix forward(const Matrix& x) const;
};

struct ToyModel {
  Linear encoder1;  // intermediate CTC head over every frame
  Linear encoder2;  // head over the downsampled frames
  std::optional<Matrix> fusion_projection;  // 3d x d, concatenate fusion only

  std::size_t dim() const { return encoder1.weight.rows(); }
  std::size_t vocab() const { return encoder1.weight.cols(); }
};

// Small seeded Gaussian weights, zero biases.
ToyModel init_model(std::size_t dim, std::size_t vocab, std::uint64_t seed);

enum class LslKind { kTil, kAxe, kNone };
std::string_view lsl_name(LslKind kind);
LslKind parse_lsl(std::string_view name);

struct StageConfig {
  int stage = 1;
  std::size_t epochs = 30;
  double learning_rate = 0.05;
  std::size_t batch_size = 16;
  LslKind lsl = LslKind::kAxe;
  downsample::FusionConfig fusion;
  loss::JointWeights weights;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
};

// Epochs and learning rate tuned per stage on the default corpus
// (30 / 0.05, 10 / 0.3, 10 / 0.6); other fields keep their defaults.
StageConfig default_stage_config(int stage);

struct EvalReport {
  double token_error_rate = 0.0;
  double mean_drop_ratio = 0.0;
  std::vector<double> loss_curve;
  std::size_t utterances = 0;
  std::size_t reference_tokens = 0;
  std::size_t errors = 0;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double loss = 0.0;
  double token_error_rate = 0.0;
  double drop_ratio = 0.0;
};

struct TrainResult {
  ToyModel model;
  EvalReport report;  // on the held-out split
  std::vector<EpochMetrics> history;
};

// Levenshtein distance with unit costs.
std::size_t edit_distance(std::span<const Token> hyp, std::span<const Token> ref);

// Corpus-level token error rate: total edits / total reference tokens.
EvalReport score_hypotheses(const std::vector<LabelSequence>& hyps,
                            const std::vector<LabelSequence>& refs);

// What the model emits for one utterance at a given stage.
struct Decoded {
  LabelSequence hypothesis;
  std::size_t kept_frames = 0;
};

Decoded decode(const ToyModel& model, const Matrix& frames,
               const StageConfig& cfg);

// Scores the utterances whose indices are listed (all when empty).
EvalReport evaluate(const ToyModel& model, const Corpus& corpus,
                    const StageConfig& cfg,
                    std::span<const std::size_t> indices = {});

std::vector<std::size_t> held_out_indices(const Corpus& corpus);
std::vector<std::size_t> training_indices(const Corpus& corpus);

// Validates shapes and stage settings; throws Error on mismatch.
void check_compatible(const ToyModel& model, const Corpus& corpus,
                      const StageConfig& cfg);

// Trains starting from `model`. Errors name the epoch and utterance whenever
// a loss turns non-finite.
TrainResult train_stage(ToyModel model, const Corpus& corpus,
                        const StageConfig& cfg);

}  // namespace kfds::toy
