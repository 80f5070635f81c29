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

#ifndef LIPREAD_SCORING_H_
#define LIPREAD_SCORING_H_

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lipread::scoring {

// Word-level alignment tallies. hits == reference - deletions - substitutions.
struct AlignmentCounts {
  int hits = 0;
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;
  int reference = 0;

  AlignmentCounts& operator+=(const AlignmentCounts& o);
  bool operator==(const AlignmentCounts&) const = default;
};

// Surjective map from frame-label classes onto viseme classes.
class VisemeMap {
 public:
  VisemeMap() = default;
  // table[p] is the viseme of phoneme class p. Throws when a viseme index is
  // out of [0, n_visemes) or some viseme has no phoneme.
  VisemeMap(std::vector<int> table, int n_visemes);

  int n_phonemes() const { return static_cast<int>(table_.size()); }
  int n_visemes() const { return n_visemes_; }
  // Throws a range error for an unmapped class.
  int operator()(int phoneme) const;
  const std::vector<int>& table() const { return table_; }

 private:
  std::vector<int> table_;
  int n_visemes_ = 0;
};

// Minimum unit-cost edit alignment. Among equal-cost alignments the traceback
// prefers match/substitution, then deletion, then insertion.
AlignmentCounts AlignWords(std::span<const std::string> reference,
                           std::span<const std::string> hypothesis);

// (H - I) / N * 100. May be negative.
double Accuracy(const AlignmentCounts& counts);
// H / N * 100.
double Correctness(const AlignmentCounts& counts);

using TranscriptPair =
    std::pair<std::vector<std::string>, std::vector<std::string>>;

double SentenceCorrectness(std::span<const TranscriptPair> pairs);

// Percentage of frames whose predicted class equals the label, optionally
// after mapping both through a viseme map.
double FrameAccuracy(std::span<const int> labels, std::span<const int> predictions,
                     const VisemeMap* map = nullptr);

struct SpeakerResult {
  std::string speaker;
  std::string view;  // view or view combination, e.g. "0" or "0+30"
  double sentence_correctness = 0.0;
  double word_correctness = 0.0;
  double word_accuracy = 0.0;
};

// Scores every (reference, hypothesis) pair of one speaker.
SpeakerResult ScoreSpeaker(const std::string& speaker, const std::string& view,
                           std::span<const TranscriptPair> pairs);

struct SummaryRow {
  std::string view;
  double mean[3] = {0, 0, 0};  // SC, WC, WA
  double sd[3] = {0, 0, 0};    // sample SD across speakers, 0 for one speaker
  int speakers = 0;
};

struct Report {
  std::vector<SpeakerResult> speakers;
  std::vector<SummaryRow> summary;  // one per distinct view, first-seen order

  // speaker,view,SC,WC,WA rows followed by mean and sd rows.
  std::string ToCsv() const;
  std::string ToText() const;
};

Report MakeReport(std::vector<SpeakerResult> results);

// Sample standard deviation (divisor n - 1); 0 when fewer than two values.
double SampleStdDev(std::span<const double> values);

}  // namespace lipread::scoring

#endif  // LIPREAD_SCORING_H_
