// Copyright 2026 The lipread Authors.
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

#ifndef LIPREAD_CONFIG_H_
#define LIPREAD_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lipread/gmmhmm.h"
#include "lipread/lstm.h"
#include "lipread/pcanet.h"

namespace lipread {

// Pipeline stages in dependency order; each stage's config hash covers its
// own section and every upstream one.
enum class Stage { kFilters, kFeatures, kLstm, kPosteriors, kTandem, kHmm, kDecode };

struct PipelineConfig {
  // [pcanet]
  pcanet::Config pcanet;
  bool normalize_frames = false;

  // [lstm]
  int hidden = 64;
  lstm::TrainConfig lstm;  // max_iterations defaults to 10000
  double scaling = 0.0;    // 0: 1 / (pooled pixels per block), resolved from frame size

  // [tandem]
  double floor = 1e-8;
  int delta_window = 2;
  std::vector<int> views = {0};

  // [hmm]
  int states_per_word = 4;
  int max_mixtures = 15;
  std::vector<int> schedule = {1, 2, 4, 8, 15};
  double variance_floor_ratio = 1e-4;
  int em_iters = 20;  // Viterbi re-estimation passes before splitting, at most
  int passes_per_split = 4;
  std::uint64_t hmm_seed = 1;
  std::string grammar_mode = "phrase_list";
  double word_penalty = 0.0;

  // [paths]; relative entries resolve against the config file's directory.
  std::string train_manifest;
  std::string test_manifest;
  std::string viseme_map;
  std::string grammar;

  PipelineConfig();

  // key = value lines under [section] headers; '#' starts a comment.
  // Unknown sections or keys are rejected.
  static PipelineConfig Parse(const std::string& text, const std::string& origin = "config");
  static PipelineConfig Load(const std::filesystem::path& path);

  // Canonical rendering; Parse(ToText()) reproduces the config.
  std::string ToText() const;
  // Hex FNV-1a of the canonical text of every section up to `stage`.
  std::string Hash(Stage stage) const;

  void Validate() const;
  gmmhmm::TrainOptions HmmOptions() const;
  // Explicit scaling, or 1 / (pooled pixels per histogram block) when auto.
  double ResolvedScaling(int frame_height, int frame_width) const;
};

std::string Fnv1aHex(const std::string& text);

}  // namespace lipread

#endif  // LIPREAD_CONFIG_H_
