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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdint>
#include <string>

#include "lipread/config.h"
#include "lipread/error.h"
#include "test_util.h"

namespace {

using lipread::PipelineConfig;
using lipread::Stage;

int ErrorKindOf(auto&& fn) {
  try {
    fn();
  } catch (const lipread::Error& e) {
    return static_cast<int>(e.kind());
  }
  return -1;
}

constexpr int kFormat = static_cast<int>(lipread::ErrorKind::kFormat);
constexpr int kArgument = static_cast<int>(lipread::ErrorKind::kArgument);

// 64-bit FNV-1a, written out from its definition.
std::string Fnv(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 15];
  return out;
}

}  // namespace

TEST_CASE("defaults pin the model sizes") {
  const PipelineConfig c;
  CHECK(c.pcanet.patch_side == 7);
  CHECK(c.pcanet.filters == 8);
  CHECK(c.pcanet.block_rows == 4);
  CHECK(c.pcanet.block_cols == 4);
  CHECK(c.pcanet.feature_dim() == 32768);
  CHECK(c.hidden == 64);
  CHECK(c.lstm.max_iterations == 10000);
  CHECK(c.states_per_word == 4);
  CHECK(c.max_mixtures == 15);
  CHECK(c.schedule == std::vector<int>{1, 2, 4, 8, 15});
  CHECK(c.variance_floor_ratio == 1e-4);
  CHECK(c.views == std::vector<int>{0});
  CHECK(c.grammar_mode == "phrase_list");
  c.Validate();
}

TEST_CASE("parsing sets every section") {
  const auto c = PipelineConfig::Parse(R"(# comment line
[pcanet]
frame_cap = 150
blocks = 2,3
[lstm]
hidden = 16   # trailing comment
lr = 0.05
iterations = 300
scaling = 0.25
[tandem]
views = 0,30
delta_window = 3
[hmm]
max_mixtures = 4
word_penalty = -1.5
grammar_mode = word_loop
[paths]
train_manifest = corpus/train.tsv
)");
  CHECK(c.pcanet.frame_cap == 150);
  CHECK(c.pcanet.block_rows == 2);
  CHECK(c.pcanet.block_cols == 3);
  CHECK(c.hidden == 16);
  CHECK(c.lstm.learning_rate == 0.05);
  CHECK(c.lstm.max_iterations == 300);
  CHECK(c.scaling == 0.25);
  CHECK(c.views == std::vector<int>{0, 30});
  CHECK(c.delta_window == 3);
  CHECK(c.max_mixtures == 4);
  CHECK(c.schedule == std::vector<int>{1, 2, 4});
  CHECK(c.word_penalty == -1.5);
  CHECK(c.grammar_mode == "word_loop");
  CHECK(c.train_manifest == "corpus/train.tsv");
  CHECK(c.HmmOptions().max_mixtures == 4);
}

TEST_CASE("unknown keys and sections are rejected") {
  CHECK(ErrorKindOf([] { PipelineConfig::Parse("[lstm]\nhiden = 3\n"); }) == kFormat);
  CHECK(ErrorKindOf([] { PipelineConfig::Parse("[decoder]\n"); }) == kFormat);
  CHECK(ErrorKindOf([] { PipelineConfig::Parse("hidden = 3\n"); }) == kFormat);
  CHECK(ErrorKindOf([] { PipelineConfig::Parse("[lstm]\nhidden\n"); }) == kFormat);
  CHECK(ErrorKindOf([] { PipelineConfig::Parse("[lstm]\nhidden = 3x\n"); }) == kFormat);
  CHECK(ErrorKindOf([] { PipelineConfig::Parse("[lstm]\nlr = fast\n"); }) == kFormat);
}

TEST_CASE("the error names the offending line") {
  try {
    PipelineConfig::Parse("[lstm]\n\nbogus = 1\n", "my.cfg");
    FAIL("expected an error");
  } catch (const lipread::Error& e) {
    CHECK(std::string(e.what()).find("my.cfg:3") != std::string::npos);
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
}

TEST_CASE("invalid values are argument errors") {
  CHECK(ErrorKindOf([] { PipelineConfig::Parse("[hmm]\nschedule = 1,3,15\n"); }) == kArgument);
  CHECK(ErrorKindOf([] { PipelineConfig::Parse("[hmm]\ngrammar_mode = bigram\n"); }) == kArgument);
  CHECK(ErrorKindOf([] { PipelineConfig::Parse("[tandem]\nviews = 0,17\n"); }) == kArgument);
  CHECK(ErrorKindOf([] { PipelineConfig::Parse("[tandem]\nfloor = 0\n"); }) == kArgument);
  CHECK(ErrorKindOf([] { PipelineConfig::Parse("[lstm]\nhidden = 0\n"); }) == kArgument);
}

TEST_CASE("canonical text round-trips") {
  const auto c = PipelineConfig::Parse(
      "[lstm]\nlr = 0.8\nmomentum = 0.95\nscaling = 0.0129870129870\n[tandem]\nviews = 0,30,60\n"
      "[hmm]\nmax_mixtures = 8\n[paths]\ngrammar = g.txt\n");
  const std::string text = c.ToText();
  CHECK(text.find("lr = 0.8\n") != std::string::npos);
  const auto back = PipelineConfig::Parse(text);
  CHECK(back.ToText() == text);
  CHECK(back.scaling == c.scaling);
  CHECK(back.lstm.learning_rate == c.lstm.learning_rate);
  for (auto s : {Stage::kFilters, Stage::kLstm, Stage::kTandem, Stage::kHmm}) CHECK(back.Hash(s) == c.Hash(s));
  CHECK(PipelineConfig::Parse(PipelineConfig().ToText()).ToText() == PipelineConfig().ToText());
}

TEST_CASE("hash is FNV-1a of the canonical text") {
  CHECK(lipread::Fnv1aHex("") == "cbf29ce484222325");
  CHECK(lipread::Fnv1aHex("a") == Fnv("a"));
  CHECK(lipread::Fnv1aHex("[lstm]\nhidden = 64\n") == Fnv("[lstm]\nhidden = 64\n"));
}

TEST_CASE("a change invalidates its own stage and everything downstream") {
  const PipelineConfig base;
  const Stage stages[] = {Stage::kFilters, Stage::kFeatures, Stage::kLstm, Stage::kPosteriors,
                          Stage::kTandem, Stage::kHmm, Stage::kDecode};
  struct Edit {
    std::string text;
    Stage first;  // earliest stage whose hash must change
  };
  const Edit edits[] = {
      {"[pcanet]\nframe_cap = 100\n", Stage::kFilters},
      {"[lstm]\nhidden = 32\n", Stage::kLstm},
      {"[tandem]\ndelta_window = 3\n", Stage::kTandem},
      {"[hmm]\nmax_mixtures = 8\n", Stage::kHmm},
      {"[paths]\ntrain_manifest = other.tsv\n", Stage::kFilters},
  };
  for (const auto& e : edits) {
    const auto changed = PipelineConfig::Parse(e.text);
    for (Stage s : stages) {
      INFO(e.text << " stage " << static_cast<int>(s));
      if (s < e.first) {
        CHECK(changed.Hash(s) == base.Hash(s));
      } else {
        CHECK(changed.Hash(s) != base.Hash(s));
      }
    }
  }
}

TEST_CASE("relative paths resolve against the config file") {
  lipread::testing::TempDir dir("cfg");
  const auto path = dir.path() / "sub" / "run.cfg";
  lipread::testing::WriteAll(path, "[paths]\ntrain_manifest = data/train.tsv\ntest_manifest = /abs/test.tsv\n");
  const auto c = PipelineConfig::Load(path);
  CHECK(c.train_manifest == (dir.path() / "sub" / "data" / "train.tsv").lexically_normal().string());
  CHECK(c.test_manifest == "/abs/test.tsv");
}

TEST_CASE("auto scaling gives unit mass per histogram block") {
  const PipelineConfig c;
  // 60x90 frames pool to 30x45; 4x4 blocks hold 7x11 pooled pixels.
  CHECK(c.ResolvedScaling(60, 90) == doctest::Approx(1.0 / 77.0));
  auto explicit_scale = PipelineConfig::Parse("[lstm]\nscaling = 0.5\n");
  CHECK(explicit_scale.ResolvedScaling(60, 90) == 0.5);
}
