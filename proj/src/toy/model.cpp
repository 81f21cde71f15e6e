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
#include "kfds/simd.hpp"

namespace kfds::toy {

Matrix Linear::forward(const Matrix& x) const {
  Matrix out = matmul(x, weight);
  const auto& k = simd::active();
  for (std::size_t t = 0; t < out.rows(); ++t) {
    k.axpy(1.0, bias.data(), out.row(t).data(), bias.size());
  }
  return out;
}

ToyModel init_model(std::size_t dim, std::size_t vocab, std::uint64_t seed) {
  if (dim == 0 || vocab < 2) throw Error("model needs dim >= 1, vocab >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> init(0.0, 0.01);
  auto make = [&] {
    Linear l{Matrix(dim, vocab), std::vector<double>(vocab, 0.0)};
    for (double& w : l.weight.data()) w = init(rng);
    return l;
  };
  ToyModel m;
  m.encoder1 = make();
  m.encoder2 = make();
  return m;
}

std::string_view lsl_name(LslKind kind) {
  switch (kind) {
    case LslKind::kTil: return "til";
    case LslKind::kAxe: return "axe";
    case LslKind::kNone: return "none";
  }
  return "none";
}

LslKind parse_lsl(std::string_view name) {
  if (name == "til") return LslKind::kTil;
  if (name == "axe") return LslKind::kAxe;
  if (name == "none") return LslKind::kNone;
  throw Error("unknown length-similar loss '" + std::string(name) + "'");
}

StageConfig default_stage_config(int stage) {
  if (stage < 1 || stage > 3) throw Error("stage must be 1, 2 or 3");
  StageConfig cfg;
  cfg.stage = stage;
  if (stage == 2) {
    cfg.epochs = 10;
    cfg.learning_rate = 0.3;
  } else if (stage == 3) {
    cfg.epochs = 10;
    cfg.learning_rate = 0.6;
  }
  return cfg;
}

void check_compatible(const ToyModel& model, const Corpus& corpus,
                      const StageConfig& cfg) {
  if (cfg.stage < 1 || cfg.stage > 3) throw Error("stage must be 1, 2 or 3");
  auto check_linear = [&](const Linear& l, const char* name) {
    if (l.weight.rows() != corpus.dim || l.weight.cols() != corpus.vocab ||
        l.bias.size() != corpus.vocab) {
      throw Error(std::string(name) + " is " +
                  std::to_string(l.weight.rows()) + "x" +
                  std::to_string(l.weight.cols()) + " but the corpus needs " +
                  std::to_string(corpus.dim) + "x" +
                  std::to_string(corpus.vocab));
    }
    if (!l.weight.all_finite()) {
      throw Error(std::string(name) + " has non-finite weights");
    }
  };
  check_linear(model.encoder1, "encoder1");
  check_linear(model.encoder2, "encoder2");
  if (model.fusion_projection) {
    const Matrix& p = *model.fusion_projection;
    if (p.rows() != 3 * corpus.dim || p.cols() != corpus.dim) {
      throw Error("fusion projection shape does not match the corpus");
    }
  }
  for (const auto& u : corpus.utterances) {
    if (u.frames.cols() != corpus.dim) {
      throw Error("utterance frame width does not match the corpus header");
    }
  }
}

}  // namespace kfds::toy
