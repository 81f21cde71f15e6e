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
#include <cmath>
#include <numeric>
#include <sstream>

#include "kfds/downsample.hpp"
#include "kfds/losses.hpp"
#include "kfds/verify.hpp"

namespace kfds::verify {
namespace {

std::string describe(const Matrix& m) {
  std::ostringstream s;
  s.precision(17);
  s << "[";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    s << (r ? ", [" : "[");
    for (std::size_t c = 0; c < m.cols(); ++c) s << (c ? ", " : "") << m(r, c);
    s << "]";
  }
  s << "]";
  return s.str();
}

std::string describe(const LabelSequence& y) {
  std::ostringstream s;
  s << "[";
  for (std::size_t i = 0; i < y.size(); ++i) s << (i ? ", " : "") << y.tokens[i];
  s << "]";
  return s.str();
}

std::size_t draw(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Records one case; `err` above `tol` or a thrown exception counts as failure.
template <typename Fn>
void run_case(SuiteResult& r, std::uint64_t case_seed, double tol, Fn&& fn) {
  ++r.cases;
  std::string detail;
  double err = 0.0;
  try {
    err = fn(detail);
  } catch (const std::exception& e) {
    r.failures.push_back("seed=" + std::to_string(case_seed) +
                         " threw: " + e.what() + " " + detail);
    r.max_error = std::numeric_limits<double>::infinity();
    return;
  }
  r.max_error = std::max(r.max_error, err);
  if (err <= tol) {
    ++r.passed;
  } else {
    std::ostringstream s;
    s.precision(3);
    s << "seed=" << case_seed << " error=" << std::scientific << err << " "
      << detail;
    r.failures.push_back(s.str());
  }
}

downsample::KeyFrameSet random_keys(std::mt19937_64& rng, std::size_t T) {
  downsample::KeyFrameSet keys;
  for (std::size_t t = 0; t < T; ++t) {
    if (std::bernoulli_distribution(0.5)(rng)) {
      keys.indices.push_back(t);
      keys.labels.push_back(1);
    }
  }
  if (keys.empty()) {
    keys.indices.push_back(draw(rng, 0, T - 1));
    keys.labels.push_back(1);
  }
  return keys;
}

double weighted_sum(const Matrix& a, const Matrix& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * w.data()[i];
  return s;
}

SuiteResult gradient_case_set(const std::string& name, std::uint64_t seed,
                              std::size_t n, auto&& body) {
  SuiteResult r;
  r.name = name;
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t s = seed + k;
    run_case(r, s, 1e-4, [&](std::string& detail) {
      std::mt19937_64 rng(s);
      return body(rng, detail);
    });
  }
  return r;
}

}  // namespace

SuiteResult axe_oracle_suite(std::uint64_t seed, std::size_t n) {
  SuiteResult r;
  r.name = "axe-oracle";
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t s = seed + k;
    run_case(r, s, 1e-9, [&](std::string& detail) {
      std::mt19937_64 rng(s);
      const std::size_t L = draw(rng, 1, 4);
      const std::size_t T = draw(rng, 1, 6);
      const std::size_t V = draw(rng, 2, 5);
      const Matrix lp = random_log_probs(rng, T, V);
      const LabelSequence y = random_target(rng, L, V);
      detail = "target=" + describe(y) + " log_probs=" + describe(lp);
      const LossResult dp = loss::axe(lp, y);
      const double oracle = axe_by_enumeration(lp, y).best;
      double err = std::abs(dp.value - oracle);
      // The returned path must be a valid alignment that costs the value.
      const double path_cost = loss::alignment_cost(lp, y, *dp.alignment);
      err = std::max(err, std::abs(path_cost - dp.value));
      if (loss::make_path(dp.alignment->target_to_pred, T) != *dp.alignment) {
        err = std::numeric_limits<double>::infinity();
      }
      return err;
    });
  }
  return r;
}

SuiteResult axe_vs_ce_suite(std::uint64_t seed, std::size_t n) {
  SuiteResult r;
  r.name = "axe-le-ce";
  std::size_t strict = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t s = seed + k;
    run_case(r, s, 0.0, [&](std::string& detail) {
      std::mt19937_64 rng(s);
      const std::size_t L = draw(rng, 1, 6);
      const std::size_t V = draw(rng, 2, 6);
      const LabelSequence y = random_target(rng, L, V);
      Matrix logits = random_matrix(rng, L, V);
      // Half the cases put a confident prediction of each target one frame
      // late, the positional error the alignment is meant to forgive.
      if (k % 2 == 1) {
        for (std::size_t i = 0; i < L; ++i) {
          logits((i + 1) % L, y.tokens[i]) += 6.0;
        }
      }
      const Matrix lp = log_softmax_rows(logits);
      detail = "target=" + describe(y) + " log_probs=" + describe(lp);
      const double a = loss::axe(lp, y).value;
      const double ce = loss::positional_ce(lp, y).value;
      if (a < ce) ++strict;
      return std::max(0.0, a - ce);
    });
  }
  run_case(r, seed, 0.0, [&](std::string& detail) {
    detail = "no instance had AXE strictly below positional CE";
    return strict > 0 ? 0.0 : std::numeric_limits<double>::infinity();
  });
  return r;
}

SuiteResult ctc_oracle_suite(std::uint64_t seed, std::size_t n) {
  SuiteResult r;
  r.name = "ctc-oracle";
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t s = seed + k;
    run_case(r, s, 1e-9, [&](std::string& detail) {
      std::mt19937_64 rng(s);
      const std::size_t T = draw(rng, 1, 6);
      const std::size_t V = draw(rng, 2, 4);
      LabelSequence y;
      do {
        y = random_target(rng, draw(rng, 1, std::min<std::size_t>(3, T)), V);
      } while (y.size() + repeat_count(y.tokens) > T);
      const Matrix lp = random_log_probs(rng, T, V);
      detail = "target=" + describe(y) + " log_probs=" + describe(lp);
      return std::abs(ctc::loss(lp, y).value - ctc_by_enumeration(lp, y));
    });
  }
  return r;
}

SuiteResult til_properties_suite(std::uint64_t seed, std::size_t n) {
  SuiteResult r;
  r.name = "til-properties";
  // Hand example: Y = [a, a], uniform over {blank, a}: 2 ln 2.
  run_case(r, seed, 1e-12, [&](std::string& detail) {
    detail = "hand example";
    const Matrix p(2, 2, 0.5);
    return std::abs(loss::til(p, {{1, 1}}).value - 2.0 * std::log(2.0));
  });
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t s = seed + 1 + k;
    run_case(r, s, 0.0, [&](std::string& detail) {
      std::mt19937_64 rng(s);
      const std::size_t L = draw(rng, 1, 6);
      const std::size_t V = draw(rng, 2, 6);
      const LabelSequence y = random_target(rng, L, V);
      detail = "target=" + describe(y);

      // Exact one-hots of the target, rows shuffled: value is exactly zero.
      std::vector<std::size_t> order(L);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      Matrix onehot(L, V, 0.0);
      for (std::size_t i = 0; i < L; ++i) onehot(i, y.tokens[order[i]]) = 1.0;
      double err = std::abs(loss::til(onehot, y).value);

      // Row and target permutations leave the value bit-identical.
      const std::size_t T = draw(rng, 1, 6);
      const Matrix p = softmax_rows(random_matrix(rng, T, V));
      const double base = loss::til(p, y).value;
      std::vector<std::size_t> rows(T);
      std::iota(rows.begin(), rows.end(), 0);
      std::reverse(rows.begin(), rows.end());
      LabelSequence y_perm = y;
      std::reverse(y_perm.tokens.begin(), y_perm.tokens.end());
      const double permuted = loss::til(p.gather_rows(rows), y_perm).value;
      return std::max(err, std::abs(permuted - base));
    });
  }
  return r;
}

std::vector<SuiteResult> gradient_suites(std::uint64_t seed, std::size_t n) {
  std::vector<SuiteResult> out;
  const GradCheckOptions opts{1e-5, 1e-4};

  out.push_back(gradient_case_set(
      "grad-til", seed, n, [&](std::mt19937_64& rng, std::string& detail) {
        const std::size_t T = draw(rng, 1, 6);
        const std::size_t V = draw(rng, 2, 5);
        const LabelSequence y = random_target(rng, draw(rng, 1, 4), V);
        const Matrix p = softmax_rows(random_matrix(rng, T, V));
        detail = "target=" + describe(y) + " probs=" + describe(p);
        auto f = [&](const Matrix& x) { return loss::til(x, y).value; };
        return finite_diff_check(f, loss::til(p, y).grad, p, opts)
            .max_relative_error;
      }));

  out.push_back(gradient_case_set(
      "grad-positional-ce", seed + 1000, n,
      [&](std::mt19937_64& rng, std::string& detail) {
        const std::size_t L = draw(rng, 1, 6);
        const std::size_t V = draw(rng, 2, 5);
        const LabelSequence y = random_target(rng, L, V);
        const Matrix lp = random_log_probs(rng, L, V);
        detail = "target=" + describe(y);
        auto f = [&](const Matrix& x) { return loss::positional_ce(x, y).value; };
        return finite_diff_check(f, loss::positional_ce(lp, y).grad, lp, opts)
            .max_relative_error;
      }));

  out.push_back(gradient_case_set(
      "grad-ctc", seed + 2000, n,
      [&](std::mt19937_64& rng, std::string& detail) {
        const std::size_t T = draw(rng, 1, 6);
        const std::size_t V = draw(rng, 2, 4);
        LabelSequence y;
        do {
          y = random_target(rng, draw(rng, 1, std::min<std::size_t>(3, T)), V);
        } while (y.size() + repeat_count(y.tokens) > T);
        const Matrix lp = random_log_probs(rng, T, V);
        detail = "target=" + describe(y) + " log_probs=" + describe(lp);
        auto f = [&](const Matrix& x) { return ctc::loss(x, y).value; };
        return finite_diff_check(f, ctc::loss(lp, y).grad, lp, opts)
            .max_relative_error;
      }));

  out.push_back(gradient_case_set(
      "grad-fuse-attention", seed + 3000, n,
      [&](std::mt19937_64& rng, std::string& detail) {
        const std::size_t T = draw(rng, 1, 6);
        const std::size_t d = draw(rng, 1, 4);
        const std::size_t left = draw(rng, 0, 2);
        const std::size_t right = draw(rng, 0, 2);
        const Matrix x = random_matrix(rng, T, d);
        const auto keys = random_keys(rng, T);
        const Matrix w = random_matrix(rng, keys.size(), d);
        detail = "frames=" + describe(x);
        auto f = [&](const Matrix& h) {
          return weighted_sum(
              downsample::fuse_attention(h, keys, left, right).frames, w);
        };
        const Matrix g =
            downsample::fuse_attention_backward(x, keys, left, right, w);
        return finite_diff_check(f, g, x, opts).max_relative_error;
      }));

  out.push_back(gradient_case_set(
      "grad-fuse-concatenate", seed + 4000, n,
      [&](std::mt19937_64& rng, std::string& detail) {
        const std::size_t T = draw(rng, 1, 6);
        const std::size_t d = draw(rng, 1, 4);
        const Matrix x = random_matrix(rng, T, d);
        const Matrix proj = random_matrix(rng, 3 * d, d);
        const auto keys = random_keys(rng, T);
        const Matrix w = random_matrix(rng, keys.size(), d);
        detail = "frames=" + describe(x);
        const auto g = downsample::fuse_concatenate_backward(x, keys, proj, w);
        auto by_frames = [&](const Matrix& h) {
          return weighted_sum(downsample::fuse_concatenate(h, keys, proj).frames,
                              w);
        };
        auto by_proj = [&](const Matrix& p) {
          return weighted_sum(downsample::fuse_concatenate(x, keys, p).frames,
                              w);
        };
        return std::max(
            finite_diff_check(by_frames, g.frames, x, opts).max_relative_error,
            finite_diff_check(by_proj, g.projection, proj, opts)
                .max_relative_error);
      }));

  out.push_back(gradient_case_set(
      "grad-axe-fixed-path", seed + 5000, n,
      [&](std::mt19937_64& rng, std::string& detail) {
        const std::size_t T = draw(rng, 1, 6);
        const std::size_t V = draw(rng, 2, 5);
        const LabelSequence y = random_target(rng, draw(rng, 1, 4), V);
        const Matrix lp = random_log_probs(rng, T, V);
        detail = "target=" + describe(y) + " log_probs=" + describe(lp);
        const LossResult r = loss::axe(lp, y);
        const AlignmentPath path = *r.alignment;
        auto fixed = [&](const Matrix& x) {
          return loss::alignment_cost(x, y, path);
        };
        double err = finite_diff_check(fixed, r.grad, lp, opts)
                         .max_relative_error;
        // Where the optimum is isolated by more than any probe can move a
        // path cost, the minimum itself must have the same derivative.
        const AlignmentOracle o = axe_by_enumeration(lp, y);
        const double margin = o.second_best - o.best;
        if (margin > 1e-3) {
          auto full = [&](const Matrix& x) { return loss::axe(x, y).value; };
          err = std::max(
              err, finite_diff_check(full, r.grad, lp, opts).max_relative_error);
        }
        return err;
      }));

  return out;
}

}  // namespace kfds::verify
