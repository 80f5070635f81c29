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

#include "lipread/scoring.h"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "lipread/error.h"

namespace lipread::scoring {

AlignmentCounts& AlignmentCounts::operator+=(const AlignmentCounts& o) {
  hits += o.hits;
  substitutions += o.substitutions;
  deletions += o.deletions;
  insertions += o.insertions;
  reference += o.reference;
  return *this;
}

VisemeMap::VisemeMap(std::vector<int> table, int n_visemes)
    : table_(std::move(table)), n_visemes_(n_visemes) {
  std::vector<bool> used(static_cast<std::size_t>(std::max(n_visemes, 0)), false);
  for (std::size_t p = 0; p < table_.size(); ++p) {
    const int v = table_[p];
    if (v < 0 || v >= n_visemes) {
      Fail(ErrorKind::kRange, "viseme index " + std::to_string(v) + " for class " +
                                  std::to_string(p) + " outside [0," +
                                  std::to_string(n_visemes) + ")");
    }
    used[static_cast<std::size_t>(v)] = true;
  }
  for (int v = 0; v < n_visemes; ++v) {
    if (!used[static_cast<std::size_t>(v)]) {
      Fail(ErrorKind::kFormat, "viseme " + std::to_string(v) + " has no class mapped to it");
    }
  }
}

int VisemeMap::operator()(int phoneme) const {
  if (phoneme < 0 || phoneme >= n_phonemes()) {
    Fail(ErrorKind::kRange, "class " + std::to_string(phoneme) + " not in viseme map");
  }
  return table_[static_cast<std::size_t>(phoneme)];
}

AlignmentCounts AlignWords(std::span<const std::string> reference,
                           std::span<const std::string> hypothesis) {
  const std::size_t n = reference.size();
  const std::size_t m = hypothesis.size();
  // cost[i][j]: edit distance between reference[0,i) and hypothesis[0,j).
  std::vector<int> cost((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> int& { return cost[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const int diag = at(i - 1, j - 1) + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }

  AlignmentCounts counts;
  counts.reference = static_cast<int>(n);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = reference[i - 1] == hypothesis[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        (same ? counts.hits : counts.substitutions)++;
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      counts.deletions++;
      --i;
    } else {
      counts.insertions++;
      --j;
    }
  }
  return counts;
}

double Accuracy(const AlignmentCounts& counts) {
  if (counts.reference <= 0) Fail(ErrorKind::kArgument, "accuracy undefined for N=0");
  return 100.0 * (counts.hits - counts.insertions) / counts.reference;
}

double Correctness(const AlignmentCounts& counts) {
  if (counts.reference <= 0) Fail(ErrorKind::kArgument, "correctness undefined for N=0");
  return 100.0 * counts.hits / counts.reference;
}

double SentenceCorrectness(std::span<const TranscriptPair> pairs) {
  if (pairs.empty()) Fail(ErrorKind::kArgument, "sentence correctness of an empty list");
  std::size_t exact = 0;
  for (const auto& [ref, hyp] : pairs) exact += (ref == hyp) ? 1 : 0;
  return 100.0 * static_cast<double>(exact) / static_cast<double>(pairs.size());
}

double FrameAccuracy(std::span<const int> labels, std::span<const int> predictions,
                     const VisemeMap* map) {
  if (labels.size() != predictions.size()) {
    Fail(ErrorKind::kDimension, "frame accuracy: " + std::to_string(labels.size()) +
                                    " labels vs " + std::to_string(predictions.size()) +
                                    " predictions");
  }
  if (labels.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (map != nullptr) {
      correct += ((*map)(labels[t]) == (*map)(predictions[t])) ? 1 : 0;
    } else {
      correct += (labels[t] == predictions[t]) ? 1 : 0;
    }
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(labels.size());
}

SpeakerResult ScoreSpeaker(const std::string& speaker, const std::string& view,
                           std::span<const TranscriptPair> pairs) {
  AlignmentCounts total;
  for (const auto& [ref, hyp] : pairs) total += AlignWords(ref, hyp);
  SpeakerResult r;
  r.speaker = speaker;
  r.view = view;
  r.sentence_correctness = SentenceCorrectness(pairs);
  r.word_correctness = Correctness(total);
  r.word_accuracy = Accuracy(total);
  return r;
}

double SampleStdDev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

Report MakeReport(std::vector<SpeakerResult> results) {
  Report report;
  report.speakers = std::move(results);
  std::vector<std::string> views;
  for (const auto& r : report.speakers) {
    if (std::find(views.begin(), views.end(), r.view) == views.end()) views.push_back(r.view);
  }
  for (const auto& view : views) {
    SummaryRow row;
    row.view = view;
    std::vector<double> cols[3];
    for (const auto& r : report.speakers) {
      if (r.view != view) continue;
      cols[0].push_back(r.sentence_correctness);
      cols[1].push_back(r.word_correctness);
      cols[2].push_back(r.word_accuracy);
    }
    row.speakers = static_cast<int>(cols[0].size());
    for (int k = 0; k < 3; ++k) {
      row.mean[k] = std::accumulate(cols[k].begin(), cols[k].end(), 0.0) /
                    static_cast<double>(cols[k].size());
      row.sd[k] = SampleStdDev(cols[k]);
    }
    report.summary.push_back(row);
  }
  return report;
}

namespace {

std::string Fixed(double v, int digits = 1) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string Report::ToCsv() const {
  std::ostringstream out;
  out << "speaker,view,SC,WC,WA\n";
  for (const auto& r : speakers) {
    out << r.speaker << ',' << r.view << ',' << Fixed(r.sentence_correctness, 2) << ','
        << Fixed(r.word_correctness, 2) << ',' << Fixed(r.word_accuracy, 2) << '\n';
  }
  for (const auto& s : summary) {
    out << "mean," << s.view << ',' << Fixed(s.mean[0], 2) << ',' << Fixed(s.mean[1], 2)
        << ',' << Fixed(s.mean[2], 2) << '\n';
    out << "sd," << s.view << ',' << Fixed(s.sd[0], 2) << ',' << Fixed(s.sd[1], 2) << ','
        << Fixed(s.sd[2], 2) << '\n';
  }
  return out.str();
}

std::string Report::ToText() const {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %-10s %8s %8s %8s\n", "speaker", "view", "SC", "WC",
                "WA");
  out << line;
  for (const auto& r : speakers) {
    std::snprintf(line, sizeof(line), "%-10s %-10s %8.1f %8.1f %8.1f\n", r.speaker.c_str(),
                  r.view.c_str(), r.sentence_correctness, r.word_correctness, r.word_accuracy);
    out << line;
  }
  for (const auto& s : summary) {
    std::snprintf(line, sizeof(line), "%-10s %-10s %8s %8s %8s\n", "mean±sd", s.view.c_str(),
                  (Fixed(s.mean[0]) + "±" + Fixed(s.sd[0])).c_str(),
                  (Fixed(s.mean[1]) + "±" + Fixed(s.sd[1])).c_str(),
                  (Fixed(s.mean[2]) + "±" + Fixed(s.sd[2])).c_str());
    out << line;
  }
  return out.str();
}

}  // namespace lipread::scoring
