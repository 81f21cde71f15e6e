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

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "kfds/pipeline.hpp"

namespace kfds::io {

inline constexpr const char* kCorpusSchema = "kfds-corpus-v1";
inline constexpr const char* kModelSchema = "kfds-model-v1";

// JSONL: a header line, then one utterance per line.
void write_corpus(std::ostream& out, const toy::Corpus& corpus);
void write_corpus(const std::filesystem::path& path, const toy::Corpus& corpus);
toy::Corpus read_corpus(std::istream& in);
toy::Corpus read_corpus(const std::filesystem::path& path);

// A trained model plus the settings it was trained with.
struct ModelFile {
  toy::ToyModel model;
  toy::StageConfig config;
  std::vector<double> loss_curve;
};

std::string model_to_json(const ModelFile& file);
ModelFile model_from_json(const std::string& text);
void write_model(const std::filesystem::path& path, const ModelFile& file);
ModelFile read_model(const std::filesystem::path& path);

std::string report_to_json(const toy::EvalReport& report, int stage);

// Header: epoch,loss,ter,drop_ratio
void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<toy::EpochMetrics>& history);

// Flat JSON objects; any key not listed for the command is an error.
toy::CorpusConfig corpus_config_from_json(const std::string& text);
toy::StageConfig stage_config_from_json(const std::string& text,
                                        toy::StageConfig base);

std::string read_text(const std::filesystem::path& path);

}  // namespace kfds::io
