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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Usage: kfds_acceptance PATH_TO_KFDS_CLI [WORK_DIR]

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "kfds/io.hpp"
#include "kfds/pipeline.hpp"
#include "kfds/verify.hpp"

namespace {

namespace fs = std::filesystem;
using namespace kfds;
using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
  std::printf("%s criterion %d: %s | %s\n", ok ? "PASS" : "FAIL", id,
              what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fixed(double v, int prec = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(prec);
  s << v;
  return s.str();
}

std::string sci(double v) {
  std::ostringstream s;
  s.setf(std::ios::scientific);
  s.precision(2);
  s << v;
  return s.str();
}

std::string first_failure(const verify::SuiteResult& r) {
  return r.failures.empty() ? "" : "; first failure: " + r.failures.front();
}

void suite_criterion(int id, const std::string& what,
                     const verify::SuiteResult& r, double seconds,
                     double time_limit) {
  const bool ok = r.ok() && seconds < time_limit;
  report(id, ok, what,
         std::to_string(r.passed) + "/" + std::to_string(r.cases) +
             " max_error " + sci(r.max_error) + ", " + fixed(seconds, 2) +
             " s" + first_failure(r));
}

struct SeedRuns {
  std::uint64_t seed = 0;
  double stage_seconds = 0.0;  // stages 1-3 of the axe + attention run
  toy::EvalReport axe_attention;
  toy::EvalReport axe_no_fusion;
  toy::EvalReport til_attention;
  toy::EvalReport none_attention;
};

toy::EvalReport stage3(const toy::ToyModel& init, const toy::Corpus& corpus,
                       std::uint64_t seed, toy::LslKind lsl,
                       downsample::FusionMode mode) {
  toy::StageConfig cfg = toy::default_stage_config(3);
  cfg.seed = seed;
  cfg.lsl = lsl;
  cfg.fusion.mode = mode;
  return toy::train_stage(init, corpus, cfg).report;
}

SeedRuns run_seed(std::uint64_t seed) {
  SeedRuns out;
  out.seed = seed;
  toy::CorpusConfig cc;
  cc.seed = seed;
  const toy::Corpus corpus = toy::generate_corpus(cc);

  const auto t0 = Clock::now();
  toy::StageConfig c1 = toy::default_stage_config(1);
  c1.seed = seed;
  toy::ToyModel m =
      toy::train_stage(toy::init_model(cc.dim, cc.vocab, seed), corpus, c1).model;
  toy::StageConfig c2 = toy::default_stage_config(2);
  c2.seed = seed;
  m = toy::train_stage(std::move(m), corpus, c2).model;
  out.axe_attention = stage3(m, corpus, seed, toy::LslKind::kAxe,
                             downsample::FusionMode::kAttention);
  out.stage_seconds = seconds_since(t0);

  out.axe_no_fusion =
      stage3(m, corpus, seed, toy::LslKind::kAxe, downsample::FusionMode::kNone);
  out.til_attention = stage3(m, corpus, seed, toy::LslKind::kTil,
                             downsample::FusionMode::kAttention);
  out.none_attention = stage3(m, corpus, seed, toy::LslKind::kNone,
                              downsample::FusionMode::kAttention);
  std::printf(
      "  seed %llu: axe+attention ter %s drop %s | axe+none ter %s | "
      "til+attention ter %s | none+attention ter %s | %s s\n",
      static_cast<unsigned long long>(seed),
      fixed(out.axe_attention.token_error_rate).c_str(),
      fixed(out.axe_attention.mean_drop_ratio).c_str(),
      fixed(out.axe_no_fusion.token_error_rate).c_str(),
      fixed(out.til_attention.token_error_rate).c_str(),
      fixed(out.none_attention.token_error_rate).c_str(),
      fixed(out.stage_seconds, 1).c_str());
  std::fflush(stdout);
  return out;
}

double median3(std::array<double, 3> v) {
  std::sort(v.begin(), v.end());
  return v[1];
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Invocation {
  int status = -1;
  std::string stdout_text;
};

Invocation run(const std::string& cli, const std::string& args,
               const fs::path& capture) {
  const std::string cmd = "KFDS_LOG=error \"" + cli + "\" " + args + " > \"" +
                          capture.string() + "\"";
  Invocation r;
  r.status = std::system(cmd.c_str());
  r.stdout_text = slurp(capture);
  return r;
}

// Runs each command twice into separate directories and compares stdout and
// every file written.
void determinism_criterion(const std::string& cli, const fs::path& work) {
  const fs::path a = work / "a", b = work / "b";
  for (const auto& d : {a, b}) {
    fs::remove_all(d);
    fs::create_directories(d);
  }
  {
    std::ofstream cfg(work / "corpus.json");
    cfg << R"({"n_utts": 80, "len_max": 8})";
    std::ofstream s1(work / "stage1.json");
    s1 << R"({"epochs": 3})";
    std::ofstream s3(work / "stage3.json");
    s3 << R"({"epochs": 2, "lsl": "axe", "fusion": "concatenate"})";
  }
  const std::string w = "\"" + work.string() + "/";
  struct Step {
    std::string name;
    std::string args;  // {D} is replaced by the run directory
    std::vector<std::string> files;
  };
  const std::vector<Step> steps = {
      {"gen-data",
       "gen-data --config " + w + "corpus.json\" --seed 5 --out \"{D}/c.jsonl\"",
       {"c.jsonl"}},
      {"train stage 1",
       "train \"{D}/c.jsonl\" --config " + w +
           "stage1.json\" --stage 1 --seed 5 --workers 2 --out \"{D}/m1.json\"",
       {"m1.json", "m1.metrics.csv"}},
      {"train stage 2",
       "train \"{D}/c.jsonl\" --stage 2 --seed 5 --init \"{D}/m1.json\" "
       "--out \"{D}/m2.json\" --workers 3",
       {"m2.json", "m2.metrics.csv"}},
      {"train stage 3",
       "train \"{D}/c.jsonl\" --config " + w +
           "stage3.json\" --stage 3 --seed 5 --init \"{D}/m2.json\" "
           "--out \"{D}/m3.json\"",
       {"m3.json", "m3.metrics.csv"}},
      {"eval", "eval \"{D}/m3.json\" \"{D}/c.jsonl\"", {}},
      {"eval --all", "eval \"{D}/m1.json\" \"{D}/c.jsonl\" --all", {}},
      {"verify til-properties", "verify til-properties", {}},
      {"verify ctc-oracle", "verify ctc-oracle", {}},
  };

  bool ok = true;
  std::string detail;
  std::size_t compared = 0;
  for (const Step& s : steps) {
    std::array<Invocation, 2> runs;
    for (int k = 0; k < 2; ++k) {
      const fs::path dir = k == 0 ? a : b;
      std::string args = s.args;
      for (std::size_t pos; (pos = args.find("{D}")) != std::string::npos;) {
        args.replace(pos, 3, dir.string());
      }
      runs[k] = run(cli, args, dir / (std::to_string(compared) + ".stdout"));
    }
    bool same = runs[0].status == 0 && runs[1].status == 0 &&
                runs[0].stdout_text == runs[1].stdout_text;
    for (const auto& f : s.files) {
      const std::string fa = slurp(a / f), fb = slurp(b / f);
      same = same && !fa.empty() && fa == fb;
    }
    ++compared;
    if (!same) {
      ok = false;
      detail += (detail.empty() ? "" : ", ") + s.name + " differs or failed";
    }
  }
  if (ok) detail = std::to_string(steps.size()) + " commands byte-identical";
  report(9, ok, "CLI determinism", detail);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s PATH_TO_KFDS_CLI [WORK_DIR]\n", argv[0]);
    return 2;
  }
  const std::string cli = argv[1];
  const fs::path work = argc > 2 ? fs::path(argv[2])
                                 : fs::temp_directory_path() / "kfds_acceptance";
  fs::create_directories(work);
  spdlog::set_level(spdlog::level::warn);

  auto t = Clock::now();
  const auto axe = verify::axe_oracle_suite();
  suite_criterion(1, "AXE DP equals enumeration within 1e-9 (< 10 s)", axe,
                  seconds_since(t), 10.0);

  t = Clock::now();
  const auto ce = verify::axe_vs_ce_suite();
  suite_criterion(2, "AXE <= positional CE, strict on misordered predictions",
                  ce, seconds_since(t), 1e9);

  t = Clock::now();
  const auto ctc = verify::ctc_oracle_suite();
  suite_criterion(3, "CTC equals V^T enumeration within 1e-9", ctc,
                  seconds_since(t), 1e9);

  {
    const auto grads = verify::gradient_suites();
    bool ok = true;
    std::string detail;
    for (const auto& g : grads) {
      const bool this_ok = g.ok() && g.max_error <= 1e-4;
      ok = ok && this_ok;
      detail += (detail.empty() ? "" : ", ") + g.name + " " +
                std::to_string(g.passed) + "/" + std::to_string(g.cases) +
                " max " + sci(g.max_error) +
                (this_ok ? "" : first_failure(g));
    }
    report(4, ok && grads.size() == 6,
           "finite-difference gradients within 1e-4 (h = 1e-5)", detail);
  }

  {
    const auto til = verify::til_properties_suite();
    suite_criterion(5, "TIL zero law, permutation bit-identity, 2 ln 2", til,
                    0.0, 1.0);
  }

  std::printf("  training default corpora for seeds 1-3 ...\n");
  std::fflush(stdout);
  std::vector<SeedRuns> seeds;
  for (std::uint64_t s = 1; s <= 3; ++s) seeds.push_back(run_seed(s));

  {
    const SeedRuns& r = seeds.front();
    const bool ok = r.axe_attention.token_error_rate <= 0.15 &&
                    r.axe_attention.mean_drop_ratio >= 0.80 &&
                    r.stage_seconds < 300.0;
    report(6, ok, "three-stage AXE run: ter <= 0.15, drop >= 0.80, < 5 min",
           "seed 1 ter " + fixed(r.axe_attention.token_error_rate) + " drop " +
               fixed(r.axe_attention.mean_drop_ratio) + " in " +
               fixed(r.stage_seconds, 1) + " s");
  }

  {
    bool ok = true;
    std::string detail;
    for (const auto& r : seeds) {
      const double none = r.none_attention.token_error_rate;
      const double ax = r.axe_attention.token_error_rate;
      ok = ok && none >= 5.0 * ax && none > 0.0;
      detail += (detail.empty() ? "" : ", ") + std::string("seed ") +
                std::to_string(r.seed) + " none " + fixed(none) + " vs axe " +
                fixed(ax);
    }
    report(7, ok, "no length-similar loss: ter >= 5x AXE on every seed", detail);
  }

  {
    std::printf("  fusion trend (held-out ter, stage 3 with AXE)\n");
    std::printf("    seed  none     attention\n");
    std::array<double, 3> none{}, att{};
    for (std::size_t i = 0; i < 3; ++i) {
      none[i] = seeds[i].axe_no_fusion.token_error_rate;
      att[i] = seeds[i].axe_attention.token_error_rate;
      std::printf("    %llu     %s   %s\n",
                  static_cast<unsigned long long>(seeds[i].seed),
                  fixed(none[i]).c_str(), fixed(att[i]).c_str());
    }
    const double mn = median3(none), ma = median3(att);
    std::printf("    median %s   %s\n", fixed(mn).c_str(), fixed(ma).c_str());
    report(8, ma <= mn, "attention fusion median ter <= no fusion",
           "medians attention " + fixed(ma) + " vs none " + fixed(mn));
  }

  determinism_criterion(cli, work);

  {
    int majority = 0;
    for (const auto& r : seeds) {
      const double none = r.none_attention.token_error_rate;
      if (none > r.axe_attention.token_error_rate &&
          none > r.til_attention.token_error_rate) {
        ++majority;
      }
    }
    std::printf("%s property: no-LSL run worse than both TIL and AXE on %d/3 "
                "seeds (majority needed)\n",
                majority >= 2 ? "PASS" : "FAIL", majority);
    if (majority < 2) ++failures;
  }

  std::printf("%s: %d failing\n", failures == 0 ? "ALL PASS" : "FAILED",
              failures);
  return failures == 0 ? 0 : 1;
}
