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

#include <random>
#include <string>

#include "kfds/pipeline.hpp"

namespace kfds::toy {
namespace {

void check_config(const CorpusConfig& c) {
  if (c.vocab < 2) throw Error("vocab must be at least 2");
  if (c.dim < 1) throw Error("dim must be at least 1");
  if (c.len_min < 1 || c.len_max < c.len_min) {
    throw Error("invalid target length range");
  }
  if (c.rep_min < 1 || c.rep_max < c.rep_min) {
    throw Error("invalid frames-per-token range");
  }
  if (!(c.noise_sigma >= 0.0)) throw Error("noise sigma must be >= 0");
}

}  // namespace

Corpus generate_corpus(const CorpusConfig& config) {
  check_config(config);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> unit(0.0, 1.0);

  // Token embeddings are drawn once and frozen; blank/silence is the origin.
  Matrix embeddings(config.vocab, config.dim, 0.0);
  for (std::size_t v = 1; v < config.vocab; ++v) {
    for (double& x : embeddings.row(v)) x = unit(rng);
  }

  std::uniform_int_distribution<std::size_t> length(config.len_min,
                                                    config.len_max);
  std::uniform_int_distribution<std::size_t> reps(config.rep_min,
                                                  config.rep_max);
  std::uniform_int_distribution<std::size_t> silence(0, config.silence_max);
  std::uniform_int_distribution<Token> token(
      1, static_cast<Token>(config.vocab - 1));

  Corpus corpus;
  corpus.dim = config.dim;
  corpus.vocab = config.vocab;
  corpus.seed = config.seed;
  corpus.utterances.reserve(config.n_utts);

  while (corpus.utterances.size() < config.n_utts) {
    LabelSequence target;
    const std::size_t L = length(rng);
    for (std::size_t i = 0; i < L; ++i) target.tokens.push_back(token(rng));

    // Frame layout as a label per frame; blank marks silence.
    std::vector<Token> layout;
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    auto add_silence = [&](std::size_t n) { layout.insert(layout.end(), n, kBlank); };
    if (config.silence_max > 0) add_silence(silence(rng));
    for (std::size_t i = 0; i < L; ++i) {
      if (i > 0 && config.silence_max > 0) {
        std::size_t gap = silence(rng);
        if (gap == 0 && target.tokens[i] == target.tokens[i - 1]) gap = 1;
        add_silence(gap);
      }
      const std::size_t r = reps(rng);
      spans.emplace_back(layout.size(), layout.size() + r);
      layout.insert(layout.end(), r, target.tokens[i]);
    }
    if (config.silence_max > 0) add_silence(silence(rng));

    if (layout.size() < L + repeat_count(target.tokens)) continue;

    SyntheticUtterance utt;
    utt.frames = Matrix(layout.size(), config.dim, 0.0);
    for (std::size_t t = 0; t < layout.size(); ++t) {
      const auto src = embeddings.row(static_cast<std::size_t>(layout[t]));
      auto dst = utt.frames.row(t);
      for (std::size_t c = 0; c < config.dim; ++c) {
        dst[c] = src[c];
        if (config.noise_sigma > 0.0) dst[c] += config.noise_sigma * unit(rng);
      }
    }
    utt.target = std::move(target);
    utt.boundaries = std::move(spans);
    corpus.utterances.push_back(std::move(utt));
  }
  return corpus;
}

bool is_held_out(std::size_t utterance_index) {
  // splitmix64 finalizer
  std::uint64_t z = static_cast<std::uint64_t>(utterance_index) +
                    0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z % 10 == 0;
}

std::vector<std::size_t> held_out_indices(const Corpus& corpus) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
    if (is_held_out(i)) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> training_indices(const Corpus& corpus) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
    if (!is_held_out(i)) out.push_back(i);
  }
  return out;
}

}  // namespace kfds::toy
