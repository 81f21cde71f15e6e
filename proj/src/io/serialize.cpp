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

#include "kfds/io.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace kfds::io {
namespace {

using json = nlohmann::json;
using ordered = nlohmann::ordered_json;

ordered matrix_rows(const Matrix& m) {
  ordered rows = ordered::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(ordered(std::vector<double>(row.begin(), row.end())));
  }
  return rows;
}

Matrix rows_matrix(const json& j, std::size_t expect_cols, const char* what) {
  if (!j.is_array()) throw Error(std::string(what) + " must be an array");
  std::vector<double> data;
  data.reserve(j.size() * expect_cols);
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != expect_cols) {
      throw Error(std::string(what) + " row width differs from " +
                  std::to_string(expect_cols));
    }
    for (const auto& v : row) data.push_back(v.get<double>());
  }
  return Matrix(j.size(), expect_cols, std::move(data));
}

ordered linear_json(const toy::Linear& l) {
  ordered j;
  j["weight"] = matrix_rows(l.weight);
  j["bias"] = l.bias;
  return j;
}

toy::Linear linear_from(const json& j, std::size_t d, std::size_t v,
                        const char* what) {
  toy::Linear l;
  l.weight = rows_matrix(j.at("weight"), v, what);
  if (l.weight.rows() != d) {
    throw Error(std::string(what) + " weight has the wrong row count");
  }
  l.bias = j.at("bias").get<std::vector<double>>();
  if (l.bias.size() != v) throw Error(std::string(what) + " bias width");
  return l;
}

void reject_unknown(const json& j, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw Error("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw Error("unknown config key '" + key + "'");
  }
}

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("malformed ") + what + ": " + e.what());
  }
}

ordered stage_json(const toy::StageConfig& c) {
  ordered j;
  j["stage"] = c.stage;
  j["epochs"] = c.epochs;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["lsl"] = std::string(toy::lsl_name(c.lsl));
  j["fusion"] = std::string(downsample::fusion_name(c.fusion.mode));
  j["fusion_left"] = c.fusion.left;
  j["fusion_right"] = c.fusion.right;
  j["alpha0"] = c.weights.alpha0;
  j["alpha1"] = c.weights.alpha1;
  j["alpha2"] = c.weights.alpha2;
  j["seed"] = c.seed;
  return j;
}

toy::StageConfig apply_stage_json(const json& j, toy::StageConfig c) {
  reject_unknown(j, {"stage", "epochs", "learning_rate", "batch_size", "lsl",
                     "fusion", "fusion_left", "fusion_right", "alpha0",
                     "alpha1", "alpha2", "seed", "workers"});
  try {
    if (j.contains("stage")) c.stage = j["stage"].get<int>();
    if (j.contains("epochs")) c.epochs = j["epochs"].get<std::size_t>();
    if (j.contains("learning_rate")) {
      c.learning_rate = j["learning_rate"].get<double>();
    }
    if (j.contains("batch_size")) {
      c.batch_size = j["batch_size"].get<std::size_t>();
    }
    if (j.contains("lsl")) c.lsl = toy::parse_lsl(j["lsl"].get<std::string>());
    if (j.contains("fusion")) {
      c.fusion.mode = downsample::parse_fusion(j["fusion"].get<std::string>());
    }
    if (j.contains("fusion_left")) {
      c.fusion.left = j["fusion_left"].get<std::size_t>();
    }
    if (j.contains("fusion_right")) {
      c.fusion.right = j["fusion_right"].get<std::size_t>();
    }
    if (j.contains("alpha0")) c.weights.alpha0 = j["alpha0"].get<double>();
    if (j.contains("alpha1")) c.weights.alpha1 = j["alpha1"].get<double>();
    if (j.contains("alpha2")) c.weights.alpha2 = j["alpha2"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("workers")) c.workers = j["workers"].get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(std::string("bad config value: ") + e.what());
  }
  if (c.weights.alpha0 < 0 || c.weights.alpha1 < 0 || c.weights.alpha2 < 0) {
    throw Error("joint weights must be non-negative");
  }
  return c;
}

}  // namespace

void write_corpus(std::ostream& out, const toy::Corpus& corpus) {
  ordered header;
  header["schema"] = kCorpusSchema;
  header["d"] = corpus.dim;
  header["vocab"] = corpus.vocab;
  header["seed"] = corpus.seed;
  out << header.dump() << '\n';
  for (const auto& u : corpus.utterances) {
    ordered line;
    line["frames"] = matrix_rows(u.frames);
    line["target"] = u.target.tokens;
    ordered spans = ordered::array();
    for (const auto& [b, e] : u.boundaries) spans.push_back({b, e});
    line["boundaries"] = std::move(spans);
    out << line.dump() << '\n';
  }
}

void write_corpus(const std::filesystem::path& path, const toy::Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_corpus(out, corpus);
  if (!out) throw Error("write failed for " + path.string());
}

toy::Corpus read_corpus(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("corpus file is empty");
  const json header = parse(line, "corpus header");
  if (header.value("schema", "") != kCorpusSchema) {
    throw Error("corpus header does not declare schema kfds-corpus-v1");
  }
  toy::Corpus corpus;
  try {
    corpus.dim = header.at("d").get<std::size_t>();
    corpus.vocab = header.at("vocab").get<std::size_t>();
    corpus.seed = header.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw Error(std::string("corpus header: ") + e.what());
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const json j = parse(line, "corpus line");
    try {
      toy::SyntheticUtterance u;
      u.frames = rows_matrix(j.at("frames"), corpus.dim, "frames");
      u.target.tokens = j.at("target").get<std::vector<Token>>();
      validate_target(u.target, corpus.vocab);
      for (const auto& span : j.at("boundaries")) {
        u.boundaries.emplace_back(span.at(0).get<std::size_t>(),
                                  span.at(1).get<std::size_t>());
      }
      corpus.utterances.push_back(std::move(u));
    } catch (const std::exception& e) {
      throw Error("corpus line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return corpus;
}

toy::Corpus read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_corpus(in);
}

std::string model_to_json(const ModelFile& file) {
  const auto& m = file.model;
  ordered j;
  j["schema"] = kModelSchema;
  j["d"] = m.dim();
  j["vocab"] = m.vocab();
  j["encoder1"] = linear_json(m.encoder1);
  j["encoder2"] = linear_json(m.encoder2);
  j["fusion_projection"] =
      m.fusion_projection ? matrix_rows(*m.fusion_projection) : ordered();
  j["config"] = stage_json(file.config);
  j["loss_curve"] = file.loss_curve;
  return j.dump() + "\n";
}

ModelFile model_from_json(const std::string& text) {
  const json j = parse(text, "model file");
  try {
    if (j.at("schema").get<std::string>() != kModelSchema) {
      throw Error("model file does not declare schema kfds-model-v1");
    }
    const auto d = j.at("d").get<std::size_t>();
    const auto v = j.at("vocab").get<std::size_t>();
    ModelFile file;
    file.model.encoder1 = linear_from(j.at("encoder1"), d, v, "encoder1");
    file.model.encoder2 = linear_from(j.at("encoder2"), d, v, "encoder2");
    if (!j.at("fusion_projection").is_null()) {
      file.model.fusion_projection =
          rows_matrix(j["fusion_projection"], d, "fusion_projection");
      if (file.model.fusion_projection->rows() != 3 * d) {
        throw Error("fusion_projection must have 3d rows");
      }
    }
    file.config = apply_stage_json(j.at("config"), {});
    file.loss_curve = j.at("loss_curve").get<std::vector<double>>();
    return file;
  } catch (const json::exception& e) {
    throw Error(std::string("model file: ") + e.what());
  }
}

void write_model(const std::filesystem::path& path, const ModelFile& file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << model_to_json(file);
  if (!out) throw Error("write failed for " + path.string());
}

ModelFile read_model(const std::filesystem::path& path) {
  return model_from_json(read_text(path));
}

std::string report_to_json(const toy::EvalReport& report, int stage) {
  ordered j;
  j["stage"] = stage;
  j["utterances"] = report.utterances;
  j["reference_tokens"] = report.reference_tokens;
  j["errors"] = report.errors;
  j["token_error_rate"] = report.token_error_rate;
  j["mean_drop_ratio"] = report.mean_drop_ratio;
  j["loss_curve"] = report.loss_curve;
  return j.dump() + "\n";
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<toy::EpochMetrics>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "epoch,loss,ter,drop_ratio\n";
  out << std::setprecision(17);
  for (const auto& h : history) {
    out << h.epoch << ',' << h.loss << ',' << h.token_error_rate << ','
        << h.drop_ratio << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
}

toy::CorpusConfig corpus_config_from_json(const std::string& text) {
  const json j = parse(text, "config");
  reject_unknown(j, {"vocab", "d", "n_utts", "len_min", "len_max", "rep_min",
                     "rep_max", "silence_max", "noise_sigma", "seed"});
  toy::CorpusConfig c;
  try {
    if (j.contains("vocab")) c.vocab = j["vocab"].get<std::size_t>();
    if (j.contains("d")) c.dim = j["d"].get<std::size_t>();
    if (j.contains("n_utts")) c.n_utts = j["n_utts"].get<std::size_t>();
    if (j.contains("len_min")) c.len_min = j["len_min"].get<std::size_t>();
    if (j.contains("len_max")) c.len_max = j["len_max"].get<std::size_t>();
    if (j.contains("rep_min")) c.rep_min = j["rep_min"].get<std::size_t>();
    if (j.contains("rep_max")) c.rep_max = j["rep_max"].get<std::size_t>();
    if (j.contains("silence_max")) {
      c.silence_max = j["silence_max"].get<std::size_t>();
    }
    if (j.contains("noise_sigma")) {
      c.noise_sigma = j["noise_sigma"].get<double>();
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw Error(std::string("bad config value: ") + e.what());
  }
  return c;
}

toy::StageConfig stage_config_from_json(const std::string& text,
                                        toy::StageConfig base) {
  return apply_stage_json(parse(text, "config"), base);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace kfds::io
