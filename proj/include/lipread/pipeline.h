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

#ifndef LIPREAD_PIPELINE_H_
#define LIPREAD_PIPELINE_H_

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lipread/config.h"
#include "lipread/scoring.h"

// Stage runners behind the command-line tool. Every stage reads its inputs
// from and writes its outputs under one output directory:
//
//   v<V>/filters/    stage1.fbank, stage2.fbank
//   v<V>/features/   <id>.feat
//   v<V>/lstm/       model.lstm, loss.csv
//   v<V>/posteriors/ <id>.feat
//   tandem/<key>/    <id>.feat + <id>.hdr, key = "0" or "0+30"
//   hmm/             models.hmm, train.csv
//   decode/          <split>.hyp
//   score/           results.csv, report.txt, frames.csv
//
// Each stage directory holds a STAMP file naming the config hash it was
// produced under; consumers refuse mismatched stamps unless forced.
namespace lipread::pipeline {

struct Context {
  PipelineConfig config;
  std::filesystem::path out;
  bool force = false;
  std::ostream* log = nullptr;  // progress lines; null for silence
};

// "0", "0+30", ... in canonical view order.
std::string ViewKey(std::span<const int> views);

void LearnFilters(const Context& ctx, int view);
void Extract(const Context& ctx, int view);
void TrainLstm(const Context& ctx, int view);
void Posteriors(const Context& ctx, int view);
void Tandem(const Context& ctx, int view);
// Concatenates the per-view posteriors of every configured view.
void Fuse(const Context& ctx);
void TrainHmm(const Context& ctx);
void Decode(const Context& ctx, const std::string& split = "test");

struct FrameScore {
  int view = 0;
  std::size_t frames = 0;
  double phoneme_accuracy = 0.0;  // percent
  double viseme_accuracy = 0.0;   // percent; negative when no viseme map
};

struct ScoreResult {
  scoring::Report report;
  std::vector<FrameScore> frames;
};
ScoreResult Score(const Context& ctx);

// Every stage in order for the configured views.
ScoreResult RunAll(const Context& ctx);

// Writes <out>/resolved.cfg.
void WriteResolvedConfig(const Context& ctx);

// Exclusive claim on an output directory for the lifetime of the object.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& out_dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path path_;
};

}  // namespace lipread::pipeline

#endif  // LIPREAD_PIPELINE_H_
