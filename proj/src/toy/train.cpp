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

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include <spdlog/spdlog.h>

#include "kfds/pipeline.hpp"
#include "kfds/simd.hpp"

namespace kfds::toy {
namespace {

using downsample::FusionMode;
using downsample::KeyFrameSet;

struct LinearGrad {
  Matrix weight;
  std::vector<double> bias;

  LinearGrad(std::size_t d, std::size_t v) : weight(d, v), bias(v, 0.0) {}
};

struct Gradients {
  LinearGrad encoder1;
  LinearGrad encoder2;
  std::optional<Matrix> projection;
  double loss = 0.0;

  Gradients(std::size_t d, std::size_t v) : encoder1(d, v), encoder2(d, v) {}
};

// d/dz of a function of log_softmax(z) given d/d log_softmax(z).
Matrix through_log_softmax(const Matrix& g, const Matrix& probs) {
  Matrix dz = g;
  for (std::size_t t = 0; t < g.rows(); ++t) {
    const auto gr = g.row(t);
    const double total = std::accumulate(gr.begin(), gr.end(), 0.0);
    auto dr = dz.row(t);
    for (std::size_t c = 0; c < dr.size(); ++c) dr[c] -= probs(t, c) * total;
  }
  return dz;
}

// d/dz of a function of softmax(z) given d/d softmax(z).
Matrix through_softmax(const Matrix& g, const Matrix& probs) {
  const auto& k = simd::active();
  Matrix dz(g.rows(), g.cols());
  for (std::size_t t = 0; t < g.rows(); ++t) {
    const double inner = k.dot(g.row(t).data(), probs.row(t).data(), g.cols());
    for (std::size_t c = 0; c < g.cols(); ++c) {
      dz(t, c) = probs(t, c) * (g(t, c) - inner);
    }
  }
  return dz;
}

void accumulate_linear(const Matrix& x, const Matrix& dz, double scale,
                       LinearGrad& grad) {
  const auto& k = simd::active();
  for (std::size_t t = 0; t < x.rows(); ++t) {
    const double* dr = dz.row(t).data();
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double xv = x(t, c) * scale;
      if (xv != 0.0) k.axpy(xv, dr, grad.weight.row(c).data(), dz.cols());
    }
    k.axpy(scale, dr, grad.bias.data(), dz.cols());
  }
}

// dz * W^T
Matrix input_grad(const Linear& l, const Matrix& dz) {
  const auto& k = simd::active();
  Matrix dx(dz.rows(), l.weight.rows());
  for (std::size_t t = 0; t < dz.rows(); ++t) {
    for (std::size_t c = 0; c < l.weight.rows(); ++c) {
      dx(t, c) = k.dot(l.weight.row(c).data(), dz.row(t).data(), dz.cols());
    }
  }
  return dx;
}

Matrix exp_of(const Matrix& log_probs) {
  Matrix p = log_probs;
  for (double& v : p.data()) v = std::exp(v);
  return p;
}

const Matrix& projection_or_center(const ToyModel& model, Matrix& scratch) {
  if (model.fusion_projection) return *model.fusion_projection;
  scratch = downsample::center_projection(model.dim());
  return scratch;
}

// Frames handed to encoder2 for a given stage.
downsample::DownsampleResult encoder2_input(const ToyModel& model,
                                            const Matrix& frames,
                                            const KeyFrameSet& keys,
                                            const StageConfig& cfg) {
  if (cfg.stage == 2) {
    const auto idx = downsample::expand_context(keys, 1, 1, frames.rows());
    return downsample::keep_frames(frames, idx);
  }
  switch (cfg.fusion.mode) {
    case FusionMode::kNone:
      return downsample::keep_frames(frames, keys.indices);
    case FusionMode::kAttention:
      return downsample::fuse_attention(frames, keys, cfg.fusion.left,
                                        cfg.fusion.right);
    case FusionMode::kConcatenate: {
      Matrix scratch;
      return downsample::fuse_concatenate(frames, keys,
                                          projection_or_center(model, scratch));
    }
  }
  throw Error("unreachable fusion mode");
}

Gradients utterance_gradients(const ToyModel& model,
                              const SyntheticUtterance& utt,
                              const StageConfig& cfg) {
  const std::size_t d = model.dim();
  const std::size_t V = model.vocab();
  Gradients g(d, V);
  const Matrix& x = utt.frames;

  const Matrix lp1 = log_softmax_rows(model.encoder1.forward(x));
  const Matrix p1 = exp_of(lp1);
  const LossResult inter = ctc::loss(lp1, utt.target);

  if (cfg.stage == 1) {
    g.loss = inter.value;
    accumulate_linear(x, through_log_softmax(inter.grad, p1), 1.0, g.encoder1);
    return g;
  }

  const auto& w = cfg.weights;
  accumulate_linear(x, through_log_softmax(inter.grad, p1), w.alpha0,
                    g.encoder1);
  double second = 0.0;

  const KeyFrameSet keys = downsample::select_key_frames(p1);
  const bool has_second_loss = cfg.stage == 2 || cfg.lsl != LslKind::kNone;
  if (!keys.empty() && has_second_loss) {
    const auto down = encoder2_input(model, x, keys, cfg);
    const Matrix lp2 = log_softmax_rows(model.encoder2.forward(down.frames));
    const Matrix p2 = exp_of(lp2);
    std::optional<Matrix> dz2;
    if (cfg.stage == 2) {
      const std::size_t need =
          utt.target.size() + repeat_count(utt.target.tokens);
      if (down.frames.rows() >= need) {
        const LossResult r = ctc::loss(lp2, utt.target);
        second = r.value;
        dz2 = through_log_softmax(r.grad, p2);
      }
    } else if (cfg.lsl == LslKind::kAxe) {
      const LossResult r = loss::axe(lp2, utt.target);
      second = r.value;
      dz2 = through_log_softmax(r.grad, p2);
    } else {
      const LossResult r = loss::til(p2, utt.target);
      second = r.value;
      dz2 = through_softmax(r.grad, p2);
    }
    if (dz2) {
      accumulate_linear(down.frames, *dz2, w.alpha1, g.encoder2);
      if (cfg.stage == 3 && cfg.fusion.mode == FusionMode::kConcatenate) {
        Matrix dframes = input_grad(model.encoder2, *dz2);
        for (double& v : dframes.data()) v *= w.alpha1;
        Matrix scratch;
        auto cg = downsample::fuse_concatenate_backward(
            x, keys, projection_or_center(model, scratch), dframes);
        g.projection = std::move(cg.projection);
      }
    }
  }
  // No decoder in the toy model, so the cross-entropy term is zero.
  g.loss = loss::joint_objective(inter.value, second, 0.0, w);
  return g;
}

[[maybe_unused]] bool grads_finite(const Gradients& g) {
  auto fin = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(),
                       [](double x) { return std::isfinite(x); });
  };
  return g.encoder1.weight.all_finite() && fin(g.encoder1.bias) &&
         g.encoder2.weight.all_finite() && fin(g.encoder2.bias) &&
         (!g.projection || g.projection->all_finite());
}

void apply(Linear& l, const LinearGrad& g, double step) {
  const auto& k = simd::active();
  k.axpy(-step, g.weight.data().data(), l.weight.data().data(),
         l.weight.size());
  k.axpy(-step, g.bias.data(), l.bias.data(), l.bias.size());
}

void add_into(LinearGrad& acc, const LinearGrad& g) {
  const auto& k = simd::active();
  k.axpy(1.0, g.weight.data().data(), acc.weight.data().data(),
         acc.weight.size());
  k.axpy(1.0, g.bias.data(), acc.bias.data(), acc.bias.size());
}

// Computes per-utterance gradients for `batch` on up to `workers` threads.
struct UtteranceFailure {
  std::size_t utterance;
  std::string message;
};

// Results land in input order so reduction order never depends on scheduling.
std::vector<Gradients> batch_gradients(const ToyModel& model,
                                       const Corpus& corpus,
                                       std::span<const std::size_t> batch,
                                       const StageConfig& cfg) {
  std::vector<std::optional<Gradients>> slots(batch.size());
  std::vector<std::exception_ptr> failures(batch.size());
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < batch.size(); i += stride) {
      try {
        slots[i] = utterance_gradients(model, corpus.utterances[batch[i]], cfg);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers =
      std::max<std::size_t>(1, std::min(cfg.workers, batch.size()));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    for (auto& th : pool) th.join();
  }
  std::vector<Gradients> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (failures[i]) {
      try {
        std::rethrow_exception(failures[i]);
      } catch (const std::exception& e) {
        throw UtteranceFailure{batch[i], e.what()};
      }
    }
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

}  // namespace

Decoded decode(const ToyModel& model, const Matrix& frames,
               const StageConfig& cfg) {
  Decoded out;
  const Matrix p1 = softmax_rows(model.encoder1.forward(frames));
  if (cfg.stage == 1) {
    out.hypothesis = ctc::collapse(ctc::greedy_decode(p1));
    out.kept_frames = frames.rows();
    return out;
  }
  const KeyFrameSet keys = downsample::select_key_frames(p1);
  if (keys.empty()) return out;
  const auto down = encoder2_input(model, frames, keys, cfg);
  out.kept_frames = down.frames.rows();
  const auto labels =
      ctc::greedy_decode(softmax_rows(model.encoder2.forward(down.frames)));
  // Key-frame-only outputs carry one token slot per frame, so adjacent equal
  // labels are genuine repeats and are not merged.
  out.hypothesis = cfg.stage == 2 ? ctc::collapse(labels)
                                  : ctc::strip_blanks(labels);
  return out;
}

EvalReport evaluate(const ToyModel& model, const Corpus& corpus,
                    const StageConfig& cfg,
                    std::span<const std::size_t> indices) {
  std::vector<std::size_t> all;
  if (indices.empty()) {
    all.resize(corpus.utterances.size());
    std::iota(all.begin(), all.end(), 0);
    indices = all;
  }
  std::vector<LabelSequence> hyps;
  std::vector<LabelSequence> refs;
  double drop_total = 0.0;
  for (std::size_t i : indices) {
    const auto& utt = corpus.utterances.at(i);
    Decoded dec = decode(model, utt.frames, cfg);
    drop_total += downsample::drop_ratio(utt.frames.rows(), dec.kept_frames);
    hyps.push_back(std::move(dec.hypothesis));
    refs.push_back(utt.target);
  }
  EvalReport report = score_hypotheses(hyps, refs);
  if (!indices.empty()) {
    report.mean_drop_ratio = drop_total / static_cast<double>(indices.size());
  }
  return report;
}

TrainResult train_stage(ToyModel model, const Corpus& corpus,
                        const StageConfig& cfg) {
  check_compatible(model, corpus, cfg);
  if (cfg.batch_size == 0) throw Error("batch size must be at least 1");
  if (!(cfg.learning_rate > 0.0)) throw Error("learning rate must be > 0");
  if (cfg.stage == 3 && cfg.fusion.mode == FusionMode::kConcatenate &&
      !model.fusion_projection) {
    model.fusion_projection = downsample::center_projection(model.dim());
  }

  std::vector<std::size_t> train = training_indices(corpus);
  const std::vector<std::size_t> held = held_out_indices(corpus);
  std::mt19937_64 rng(cfg.seed);

  TrainResult result;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < train.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(train.size(), start + cfg.batch_size);
      const std::span<const std::size_t> batch(train.data() + start,
                                               stop - start);
      std::vector<Gradients> grads;
      try {
        grads = batch_gradients(model, corpus, batch, cfg);
      } catch (const UtteranceFailure& f) {
        const std::string where = "at epoch " + std::to_string(epoch + 1) +
                                  ", utterance " + std::to_string(f.utterance);
        if (f.message.find("non-finite") != std::string::npos) {
          throw Error("non-finite loss " + where + " (" + f.message + ")");
        }
        throw Error(f.message + " " + where);
      }

      Gradients total(model.dim(), model.vocab());
      for (std::size_t i = 0; i < grads.size(); ++i) {
        const Gradients& g = grads[i];
        if (!std::isfinite(g.loss)) {
          throw Error("non-finite loss at epoch " + std::to_string(epoch + 1) +
                      ", utterance " + std::to_string(batch[i]));
        }
        assert(grads_finite(g));
        epoch_loss += g.loss;
        add_into(total.encoder1, g.encoder1);
        add_into(total.encoder2, g.encoder2);
        if (g.projection) {
          if (!total.projection) total.projection = Matrix(g.projection->rows(),
                                                           g.projection->cols());
          simd::active().axpy(1.0, g.projection->data().data(),
                              total.projection->data().data(),
                              total.projection->size());
        }
      }
      const double step = cfg.learning_rate / static_cast<double>(grads.size());
      apply(model.encoder1, total.encoder1, step);
      if (cfg.stage > 1) apply(model.encoder2, total.encoder2, step);
      if (total.projection && model.fusion_projection) {
        simd::active().axpy(-step, total.projection->data().data(),
                            model.fusion_projection->data().data(),
                            model.fusion_projection->size());
      }
    }
    const double mean_loss =
        train.empty() ? 0.0 : epoch_loss / static_cast<double>(train.size());
    const EvalReport eval = evaluate(model, corpus, cfg, held);
    result.history.push_back(
        {epoch + 1, mean_loss, eval.token_error_rate, eval.mean_drop_ratio});
    spdlog::info("stage {} epoch {}/{} loss {:.6f} ter {:.4f} drop {:.4f}",
                 cfg.stage, epoch + 1, cfg.epochs, mean_loss,
                 eval.token_error_rate, eval.mean_drop_ratio);
  }

  result.report = evaluate(model, corpus, cfg, held);
  for (const auto& h : result.history) result.report.loss_curve.push_back(h.loss);
  result.model = std::move(model);
  return result;
}

}  // namespace kfds::toy
