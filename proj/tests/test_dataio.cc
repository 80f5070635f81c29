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

#include <bit>
#include <cstring>

#include "lipread/dataio.h"
#include "lipread/error.h"
#include "lipread/random.h"
#include "test_util.h"

namespace {

using lipread::ErrorKind;
using lipread::testing::ReadAll;
using lipread::testing::TempDir;
using lipread::testing::WriteAll;

std::string Pgm(int w, int h, const std::string& payload, const std::string& magic = "P5",
                int maxval = 255) {
  return magic + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n" +
         std::to_string(maxval) + "\n" + payload;
}

template <typename F>
ErrorKind KindOf(F&& f) {
  try {
    f();
  } catch (const lipread::Error& e) {
    return e.kind();
  }
  FAIL("expected a lipread::Error");
  return ErrorKind::kIo;
}

template <typename F>
std::string MessageOf(F&& f) {
  try {
    f();
  } catch (const lipread::Error& e) {
    return e.what();
  }
  FAIL("expected a lipread::Error");
  return "";
}

void WriteFrames(const std::filesystem::path& dir, int count, int first = 1) {
  const std::string payload(6, '\x40');
  for (int i = first; i < first + count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%06d.pgm", i);
    WriteAll(dir / name, Pgm(3, 2, payload));
  }
}

}  // namespace

TEST_CASE("load_image scales bytes to [0,1]") {
  TempDir dir("img");
  WriteAll(dir / "a.pgm", Pgm(2, 2, std::string("\x00\xff\x80\x40", 4)));
  const auto img = lipread::LoadImage(dir / "a.pgm");
  CHECK(img.width == 2);
  CHECK(img.height == 2);
  CHECK(img.pixels == std::vector<double>{0.0, 1.0, 128.0 / 255.0, 64.0 / 255.0});
}

TEST_CASE("load_image keeps 60x90 dimensions") {
  TempDir dir("img");
  WriteAll(dir / "f.pgm", Pgm(90, 60, std::string(90 * 60, '\x11')));
  const auto img = lipread::LoadImage(dir / "f.pgm");
  CHECK(img.width == 90);
  CHECK(img.height == 60);
  CHECK(img.pixels.size() == 5400u);
}

TEST_CASE("load_image rejects malformed files with byte offsets") {
  TempDir dir("img");
  WriteAll(dir / "ascii.pgm", Pgm(2, 2, "0 255 128 64\n", "P2"));
  CHECK(KindOf([&] { lipread::LoadImage(dir / "ascii.pgm"); }) == ErrorKind::kFormat);

  WriteAll(dir / "short.pgm", Pgm(2, 2, std::string("\x01\x02\x03", 3)));
  const std::string msg = MessageOf([&] { lipread::LoadImage(dir / "short.pgm"); });
  CHECK(msg.find("byte offset") != std::string::npos);

  WriteAll(dir / "deep.pgm", Pgm(2, 2, std::string(8, '\0'), "P5", 65535));
  CHECK(KindOf([&] { lipread::LoadImage(dir / "deep.pgm"); }) == ErrorKind::kFormat);
}

TEST_CASE("save_image round-trips byte intensities") {
  TempDir dir("img");
  lipread::GrayImage img(4, 3);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<double>(i * 20) / 255.0;
  lipread::SaveImage(dir / "x.pgm", img);
  CHECK(lipread::LoadImage(dir / "x.pgm") == img);
}

TEST_CASE("load_manifest parses utterances and resolves frames") {
  TempDir dir("manifest");
  WriteFrames(dir / "data/u1", 45);
  WriteAll(dir / "m.tsv", "u1\ts06\t0\tdata/u1\texcuse me\n");
  const auto utts = lipread::LoadManifest(dir / "m.tsv");
  REQUIRE(utts.size() == 1);
  CHECK(utts[0].id == "u1");
  CHECK(utts[0].speaker == "s06");
  CHECK(utts[0].view == 0);
  CHECK(utts[0].num_frames() == 45);
  CHECK(utts[0].frame_paths.front().filename() == "frame_000001.pgm");
  CHECK(utts[0].frame_paths.back().filename() == "frame_000045.pgm");
  CHECK(utts[0].transcript == std::vector<std::string>{"excuse", "me"});
  CHECK_FALSE(utts[0].frame_labels.has_value());
}

TEST_CASE("load_manifest errors") {
  TempDir dir("manifest");
  WriteFrames(dir / "data/u1", 45);

  SUBCASE("unknown view") {
    WriteAll(dir / "m.tsv", "u1\ts06\t15\tdata/u1\texcuse me\n");
    const std::string msg = MessageOf([&] { lipread::LoadManifest(dir / "m.tsv"); });
    CHECK(msg.find("unknown view") != std::string::npos);
  }
  SUBCASE("label length mismatch") {
    std::string labels;
    for (int i = 0; i < 44; ++i) labels += "3\n";
    WriteAll(dir / "u1.lab", labels);
    WriteAll(dir / "m.tsv", "u1\ts06\t0\tdata/u1\texcuse me\tu1.lab\n");
    const std::string msg = MessageOf([&] { lipread::LoadManifest(dir / "m.tsv"); });
    CHECK(msg.find("44 labels for 45 frames") != std::string::npos);
  }
  SUBCASE("empty transcript") {
    WriteAll(dir / "m.tsv", "u1\ts06\t0\tdata/u1\t\n");
    CHECK(KindOf([&] { lipread::LoadManifest(dir / "m.tsv"); }) == ErrorKind::kFormat);
  }
  SUBCASE("missing directory") {
    WriteAll(dir / "m.tsv", "u2\ts06\t0\tdata/u2\texcuse me\n");
    CHECK(KindOf([&] { lipread::LoadManifest(dir / "m.tsv"); }) == ErrorKind::kIo);
  }
  SUBCASE("non-contiguous frames") {
    WriteFrames(dir / "data/u3", 2, 1);
    WriteFrames(dir / "data/u3", 1, 5);
    WriteAll(dir / "m.tsv", "u3\ts06\t0\tdata/u3\texcuse me\n");
    const std::string msg = MessageOf([&] { lipread::LoadManifest(dir / "m.tsv"); });
    CHECK(msg.find("non-contiguous") != std::string::npos);
  }
}

TEST_CASE("manifest serialization is idempotent") {
  TempDir dir("manifest");
  WriteFrames(dir / "data/u1", 3);
  WriteFrames(dir / "data/u2", 2);
  WriteAll(dir / "u2.lab", "1\n2\n");
  const std::string text =
      "u1\ts01\t30\tdata/u1\thow are you\n"
      "u2\ts02\t90\tdata/u2\thello\tu2.lab\n";
  WriteAll(dir / "m.tsv", text);
  const auto utts = lipread::LoadManifest(dir / "m.tsv");
  lipread::WriteManifest(dir / "again.tsv", utts);
  CHECK(ReadAll(dir / "again.tsv") == text);
  CHECK(utts[1].frame_labels == std::vector<int>{1, 2});
}

TEST_CASE("load_labels") {
  TempDir dir("labels");
  WriteAll(dir / "a.lab", "0\n3\n3\n27\n");
  CHECK(lipread::LoadLabels(dir / "a.lab", 28) == std::vector<int>{0, 3, 3, 27});
  WriteAll(dir / "b.lab", "28\n");
  CHECK(KindOf([&] { lipread::LoadLabels(dir / "b.lab", 28); }) == ErrorKind::kRange);
  WriteAll(dir / "c.lab", "");
  CHECK(lipread::LoadLabels(dir / "c.lab", 28).empty());
  WriteAll(dir / "d.lab", "1\nx\n");
  CHECK(KindOf([&] { lipread::LoadLabels(dir / "d.lab", 28); }) == ErrorKind::kFormat);
}

TEST_CASE("feature files: header arithmetic and bit-exact round trip") {
  TempDir dir("feat");
  lipread::Matrix m(3, 2);
  m(0, 0) = 1.5;
  m(0, 1) = -0.25;
  lipread::WriteFeatures(dir / "a.feat", m);
  const std::string bytes = ReadAll(dir / "a.feat");
  CHECK(bytes.size() == 8u + 8u + 24u);
  CHECK(bytes.substr(0, 8) == "LIPFEAT1");
  CHECK(bytes[8] == 3);
  CHECK(bytes[12] == 2);
  const auto back = lipread::ReadFeatures(dir / "a.feat");
  CHECK(back == m);
  CHECK(std::bit_cast<std::uint64_t>(back(0, 1)) == std::bit_cast<std::uint64_t>(-0.25));
}

TEST_CASE("feature files: random payloads survive bit-exactly") {
  lipread::Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t rows = 1 + rng.Below(6), cols = 1 + rng.Below(9);
    lipread::Matrix m(rows, cols);
    for (double& v : m.values()) {
      // Any finite float: random bits with a non-maximal exponent.
      std::uint32_t bits = static_cast<std::uint32_t>(rng.Next());
      if (((bits >> 23) & 0xff) == 0xff) bits &= ~(1u << 23);
      v = static_cast<double>(std::bit_cast<float>(bits));
    }
    const auto bytes = lipread::EncodeFeatures(m);
    const auto back = lipread::DecodeFeatures(bytes, "memory");
    for (std::size_t i = 0; i < m.values().size(); ++i) {
      CHECK(std::bit_cast<std::uint64_t>(back.values()[i]) ==
            std::bit_cast<std::uint64_t>(m.values()[i]));
    }
  }
}

TEST_CASE("feature files: corrupt files are rejected") {
  lipread::Matrix m(2, 84);
  auto bytes = lipread::EncodeFeatures(m);
  SUBCASE("payload one float short per frame") {
    bytes.resize(bytes.size() - 2 * 4);
    CHECK(KindOf([&] { lipread::DecodeFeatures(bytes, "x"); }) == ErrorKind::kFormat);
  }
  SUBCASE("magic mismatch") {
    bytes[7] = '2';
    CHECK(KindOf([&] { lipread::DecodeFeatures(bytes, "x"); }) == ErrorKind::kFormat);
  }
}

TEST_CASE("viseme map files") {
  TempDir dir("vis");
  std::vector<int> table(28);
  for (int p = 0; p < 28; ++p) table[p] = p * 12 / 28;
  lipread::WriteVisemeMap(dir / "v.map", lipread::scoring::VisemeMap(table, 12));
  const auto map = lipread::LoadVisemeMap(dir / "v.map");
  CHECK(map.table() == table);
  WriteAll(dir / "bad.map", "0\t0\n");
  CHECK(KindOf([&] { lipread::LoadVisemeMap(dir / "bad.map"); }) == ErrorKind::kFormat);
}

TEST_CASE("synth_corpus counts and layout") {
  TempDir dir("synth");
  lipread::SynthOptions o;
  o.seed = 7;
  o.n_speakers = 4;
  o.n_phrases = 10;
  o.reps = 3;
  const auto corpus = lipread::SynthesizeCorpus(o, dir.path());
  CHECK(corpus.train_utterances + corpus.test_utterances == 120);
  const auto train = lipread::LoadManifest(corpus.train_manifest);
  const auto test = lipread::LoadManifest(corpus.test_manifest);
  CHECK(train.size() + test.size() == 120u);
  for (const auto& u : train) {
    REQUIRE(u.frame_labels.has_value());
    CHECK(u.frame_labels->size() == u.num_frames());
    const auto first = lipread::LoadImage(u.frame_paths.front());
    CHECK(first.width == lipread::kFrameWidth);
    CHECK(first.height == lipread::kFrameHeight);
  }
  // Speakers are disjoint across the splits.
  for (const auto& a : train) {
    for (const auto& b : test) CHECK(a.speaker != b.speaker);
  }
  CHECK(lipread::LoadVisemeMap(corpus.viseme_map).n_visemes() == lipread::kNumVisemes);
  CHECK(lipread::LoadPhrases(corpus.grammar).size() == 10u);
}

TEST_CASE("synth_corpus is deterministic") {
  TempDir a("synth"), b("synth");
  lipread::SynthOptions o;
  o.n_speakers = 2;
  o.n_phrases = 3;
  o.reps = 2;
  lipread::SynthesizeCorpus(o, a.path());
  lipread::SynthesizeCorpus(o, b.path());
  CHECK(lipread::testing::TreeSha256(a.path()) == lipread::testing::TreeSha256(b.path()));
  TempDir c("synth");
  o.seed = 8;
  lipread::SynthesizeCorpus(o, c.path());
  CHECK(lipread::testing::TreeSha256(a.path()) != lipread::testing::TreeSha256(c.path()));
}

TEST_CASE("synth_corpus without noise renders a class identically") {
  lipread::MouthGeometry g;
  const auto x = lipread::RenderMouth(5, g, 0);
  const auto y = lipread::RenderMouth(5, g, 0);
  CHECK(x == y);
  CHECK_FALSE(x == lipread::RenderMouth(6, g, 0));

  TempDir dir("synth");
  lipread::SynthOptions o;
  o.n_speakers = 1;
  o.n_phrases = 2;
  o.reps = 2;
  o.noise_level = 0.0;
  const auto corpus = lipread::SynthesizeCorpus(o, dir.path());
  const auto utts = lipread::LoadManifest(corpus.train_manifest);
  // Repetitions of a phrase share frames wherever their labels agree.
  std::map<int, lipread::GrayImage> seen;
  for (const auto& u : utts) {
    const auto frames = lipread::LoadFrames(u);
    for (std::size_t t = 0; t < frames.size(); ++t) {
      const int c = (*u.frame_labels)[t];
      auto it = seen.find(c);
      if (it == seen.end()) {
        seen.emplace(c, frames[t]);
      } else {
        CHECK(it->second == frames[t]);
      }
    }
  }
  CHECK(seen.size() >= 2u);
}

TEST_CASE("synth_corpus argument checks") {
  TempDir dir("synth");
  lipread::SynthOptions o;
  o.n_phrases = 11;
  CHECK(KindOf([&] { lipread::SynthesizeCorpus(o, dir.path()); }) == ErrorKind::kArgument);
  o.n_phrases = 3;
  o.reps = 0;
  CHECK(KindOf([&] { lipread::SynthesizeCorpus(o, dir.path()); }) == ErrorKind::kArgument);
}

TEST_CASE("normalize_frame yields zero mean and unit variance") {
  lipread::GrayImage img(5, 4);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = (i % 7) / 7.0;
  lipread::NormalizeFrame(img);
  double mean = 0, var = 0;
  for (double v : img.pixels) mean += v;
  mean /= img.pixels.size();
  for (double v : img.pixels) var += (v - mean) * (v - mean);
  var /= img.pixels.size();
  CHECK(mean == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
}
