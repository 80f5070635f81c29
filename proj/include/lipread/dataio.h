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

#ifndef LIPREAD_DATAIO_H_
#define LIPREAD_DATAIO_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lipread/matrix.h"
#include "lipread/scoring.h"

namespace lipread {

inline constexpr int kNumClasses = 28;
inline constexpr int kNumVisemes = 12;
inline constexpr int kFrameHeight = 60;
inline constexpr int kFrameWidth = 90;

// Camera angles recorded in the corpus, in degrees.
inline constexpr int kViews[] = {0, 30, 45, 60, 90};
bool IsKnownView(int degrees);

// Grayscale image, row-major, intensities in [0, 1].
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * width + c]; }
  double at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * width + c]; }

  bool operator==(const GrayImage&) const = default;
};

struct Utterance {
  std::string id;
  std::string speaker;
  int view = 0;
  std::string frames_dir;  // as written in the manifest
  std::vector<std::filesystem::path> frame_paths;
  std::vector<std::string> transcript;
  std::string label_file;  // as written in the manifest; empty when absent
  std::optional<std::vector<int>> frame_labels;

  std::size_t num_frames() const { return frame_paths.size(); }
};

// Binary PGM (P5, maxval 255). Pixels are scaled by 1/255.
GrayImage LoadImage(const std::filesystem::path& path);
// Writes P5; pixels are clamped to [0, 1] and rounded to 8 bits.
void SaveImage(const std::filesystem::path& path, const GrayImage& image);
void SavePgmBytes(const std::filesystem::path& path, int width, int height,
                  const std::vector<std::uint8_t>& bytes);

// Zero-mean, unit-variance rescaling of one frame. Constant frames become 0.
void NormalizeFrame(GrayImage& image);

// Loads every frame of an utterance; all frames must share dimensions.
std::vector<GrayImage> LoadFrames(const Utterance& utt, bool normalize = false);

// Relative frame directories and label files resolve against the manifest's
// directory.
std::vector<Utterance> LoadManifest(const std::filesystem::path& path,
                                    int n_classes = kNumClasses);
std::string FormatManifestLine(const Utterance& utt);
void WriteManifest(const std::filesystem::path& path, const std::vector<Utterance>& utts);

std::vector<int> LoadLabels(const std::filesystem::path& path, int n_classes);
void WriteLabels(const std::filesystem::path& path, const std::vector<int>& labels);

// LIPFEAT1 container: magic, u32 frame count, u32 dim, then little-endian
// float32 payload in frame-major order.
void WriteFeatures(const std::filesystem::path& path, const Matrix& frames);
Matrix ReadFeatures(const std::filesystem::path& path);
std::vector<std::uint8_t> EncodeFeatures(const Matrix& frames);
Matrix DecodeFeatures(const std::vector<std::uint8_t>& bytes, const std::string& origin);

// Lines `phoneme_class<TAB>viseme_class`; every class in [0, n_classes) once.
scoring::VisemeMap LoadVisemeMap(const std::filesystem::path& path,
                                 int n_classes = kNumClasses,
                                 int n_visemes = kNumVisemes);
void WriteVisemeMap(const std::filesystem::path& path, const scoring::VisemeMap& map);

// One phrase per line, words separated by spaces.
std::vector<std::vector<std::string>> LoadPhrases(const std::filesystem::path& path);

std::vector<std::string> SplitWords(const std::string& text);
std::string JoinWords(const std::vector<std::string>& words);

std::string ReadTextFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, const std::string& text);

struct SynthOptions {
  std::uint64_t seed = 7;
  int n_speakers = 4;
  int n_phrases = 10;
  int reps = 3;
  double noise_level = 0.1;
  std::vector<int> views = {0};
};

struct SynthCorpus {
  std::filesystem::path train_manifest;
  std::filesystem::path test_manifest;
  std::filesystem::path viseme_map;
  std::filesystem::path lexicon;
  std::filesystem::path grammar;
  int train_utterances = 0;  // per view
  int test_utterances = 0;   // per view
};

// Phrase list of the synthetic task, in phrase-index order.
const std::vector<std::string>& SynthPhrases();
// Word -> frame-label class sequence used by the synthetic renderer.
std::vector<int> SynthWordClasses(const std::string& word);
// Renders one noiseless mouth frame of the given class for a speaker/view
// geometry; exposed for tests.
struct MouthGeometry {
  double brightness = 0.0;
  double center_row = 30.0;
  double center_col = 45.0;
  double scale = 1.0;
};
GrayImage RenderMouth(int label_class, const MouthGeometry& geometry, int view);

// Writes a deterministic corpus under out_dir. The last max(1, n/4) speakers
// (when n >= 2) form the test split.
SynthCorpus SynthesizeCorpus(const SynthOptions& options, const std::filesystem::path& out_dir);

}  // namespace lipread

#endif  // LIPREAD_DATAIO_H_
