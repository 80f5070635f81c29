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

#include "lipread/dataio.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <regex>
#include <sstream>

#include "lipread/error.h"
#include "lipread/random.h"

namespace fs = std::filesystem;

namespace lipread {
namespace {

constexpr char kFeatureMagic[8] = {'L', 'I', 'P', 'F', 'E', 'A', 'T', '1'};

void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t GetU32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::vector<std::uint8_t> ReadBytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void WriteBytes(const fs::path& path, const std::uint8_t* data, std::size_t size) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) Fail(ErrorKind::kIo, "write failed for " + path.string());
}

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

fs::path Resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

// Frames named frame_%06d.pgm, contiguous indices, sorted.
std::vector<fs::path> ScanFrames(const fs::path& dir) {
  if (!fs::is_directory(dir)) Fail(ErrorKind::kIo, "missing frame directory " + dir.string());
  static const std::regex kFramePattern(R"(frame_(\d{6})\.pgm)");
  std::vector<std::pair<int, fs::path>> frames;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, kFramePattern)) {
      frames.emplace_back(std::stoi(m[1].str()), entry.path());
    }
  }
  if (frames.empty()) Fail(ErrorKind::kFormat, "no frames in " + dir.string());
  std::sort(frames.begin(), frames.end());
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].first != frames[i - 1].first + 1) {
      Fail(ErrorKind::kFormat, "non-contiguous frame indices in " + dir.string() + ": " +
                                   std::to_string(frames[i - 1].first) + " then " +
                                   std::to_string(frames[i].first));
    }
  }
  std::vector<fs::path> paths;
  paths.reserve(frames.size());
  for (auto& f : frames) paths.push_back(std::move(f.second));
  return paths;
}

}  // namespace

bool IsKnownView(int degrees) {
  return std::find(std::begin(kViews), std::end(kViews), degrees) != std::end(kViews);
}

GrayImage LoadImage(const fs::path& path) {
  const std::vector<std::uint8_t> bytes = ReadBytes(path);
  std::size_t pos = 0;
  auto fail = [&](const std::string& what) {
    Fail(ErrorKind::kFormat,
         path.string() + ": " + what + " at byte offset " + std::to_string(pos));
  };
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) fail("expected integer");
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1000000) fail("header value too large");
      ++pos;
    }
    return v;
  };

  if (bytes.size() < 2 || bytes[0] != 'P') fail("missing PGM magic");
  if (bytes[1] != '5') {
    pos = 1;
    fail("unsupported PGM variant P" + std::string(1, static_cast<char>(bytes[1])));
  }
  pos = 2;
  const long width = read_int();
  const long height = read_int();
  const std::size_t maxval_pos = pos;
  const long maxval = read_int();
  if (width <= 0 || height <= 0) fail("non-positive dimensions");
  if (maxval != 255) {
    pos = maxval_pos;
    fail("unsupported maxval " + std::to_string(maxval));
  }
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) fail("expected whitespace after header");
  ++pos;
  const std::size_t need = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - pos < need) {
    pos = bytes.size();
    fail("truncated payload, expected " + std::to_string(need) + " pixel bytes");
  }
  GrayImage image(static_cast<int>(width), static_cast<int>(height));
  for (std::size_t i = 0; i < need; ++i) image.pixels[i] = bytes[pos + i] / 255.0;
  return image;
}

void SavePgmBytes(const fs::path& path, int width, int height,
                  const std::vector<std::uint8_t>& bytes) {
  const std::string header =
      "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), bytes.begin(), bytes.end());
  WriteBytes(path, out.data(), out.size());
}

void SaveImage(const fs::path& path, const GrayImage& image) {
  std::vector<std::uint8_t> bytes(image.pixels.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const double v = std::clamp(image.pixels[i], 0.0, 1.0);
    bytes[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  SavePgmBytes(path, image.width, image.height, bytes);
}

void NormalizeFrame(GrayImage& image) {
  if (image.pixels.empty()) return;
  double mean = 0.0;
  for (double v : image.pixels) mean += v;
  mean /= static_cast<double>(image.pixels.size());
  double var = 0.0;
  for (double v : image.pixels) var += (v - mean) * (v - mean);
  var /= static_cast<double>(image.pixels.size());
  const double inv = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
  for (double& v : image.pixels) v = (v - mean) * inv;
}

std::vector<GrayImage> LoadFrames(const Utterance& utt, bool normalize) {
  std::vector<GrayImage> frames;
  frames.reserve(utt.frame_paths.size());
  for (const auto& p : utt.frame_paths) {
    frames.push_back(LoadImage(p));
    if (frames.back().width != frames.front().width ||
        frames.back().height != frames.front().height) {
      Fail(ErrorKind::kDimension, "utterance " + utt.id + ": frame " + p.string() +
                                      " differs in size from the first frame");
    }
    if (normalize) NormalizeFrame(frames.back());
  }
  return frames;
}

std::vector<std::string> SplitWords(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

std::string JoinWords(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

std::vector<Utterance> LoadManifest(const fs::path& path, int n_classes) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open manifest " + path.string());
  const fs::path base = path.parent_path();
  std::vector<Utterance> utts;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    const auto fields = SplitTabs(line);
    if (fields.size() != 5 && fields.size() != 6) {
      Fail(ErrorKind::kFormat, where + "expected 5 or 6 tab-separated fields, got " +
                                   std::to_string(fields.size()));
    }
    Utterance u;
    u.id = fields[0];
    u.speaker = fields[1];
    try {
      std::size_t used = 0;
      u.view = std::stoi(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::logic_error&) {
      Fail(ErrorKind::kFormat, where + "unknown view '" + fields[2] + "'");
    }
    if (!IsKnownView(u.view)) Fail(ErrorKind::kFormat, where + "unknown view " + fields[2]);
    u.frames_dir = fields[3];
    u.transcript = SplitWords(fields[4]);
    if (u.transcript.empty()) Fail(ErrorKind::kFormat, where + "empty transcript");
    u.frame_paths = ScanFrames(Resolve(base, u.frames_dir));
    if (fields.size() == 6 && !fields[5].empty()) {
      u.label_file = fields[5];
      u.frame_labels = LoadLabels(Resolve(base, u.label_file), n_classes);
      if (u.frame_labels->size() != u.frame_paths.size()) {
        Fail(ErrorKind::kFormat, where + "label file has " +
                                     std::to_string(u.frame_labels->size()) +
                                     " labels for " + std::to_string(u.frame_paths.size()) +
                                     " frames");
      }
    }
    utts.push_back(std::move(u));
  }
  return utts;
}

std::string FormatManifestLine(const Utterance& utt) {
  std::string line = utt.id + '\t' + utt.speaker + '\t' + std::to_string(utt.view) + '\t' +
                     utt.frames_dir + '\t' + JoinWords(utt.transcript);
  if (!utt.label_file.empty()) line += '\t' + utt.label_file;
  return line;
}

void WriteManifest(const fs::path& path, const std::vector<Utterance>& utts) {
  std::string text;
  for (const auto& u : utts) text += FormatManifestLine(u) + '\n';
  WriteTextFile(path, text);
}

std::vector<int> LoadLabels(const fs::path& path, int n_classes) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open label file " + path.string());
  std::vector<int> labels;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    int v = 0;
    try {
      std::size_t used = 0;
      v = std::stoi(line, &used);
      if (used != line.size()) throw std::invalid_argument("trailing");
    } catch (const std::logic_error&) {
      Fail(ErrorKind::kFormat, where + "not an integer: '" + line + "'");
    }
    if (v < 0 || v >= n_classes) {
      Fail(ErrorKind::kRange, where + "class " + std::to_string(v) + " outside [0," +
                                  std::to_string(n_classes) + ")");
    }
    labels.push_back(v);
  }
  return labels;
}

void WriteLabels(const fs::path& path, const std::vector<int>& labels) {
  std::string text;
  for (int v : labels) text += std::to_string(v) + '\n';
  WriteTextFile(path, text);
}

std::vector<std::uint8_t> EncodeFeatures(const Matrix& frames) {
  std::vector<std::uint8_t> out(kFeatureMagic, kFeatureMagic + 8);
  PutU32(out, static_cast<std::uint32_t>(frames.rows()));
  PutU32(out, static_cast<std::uint32_t>(frames.cols()));
  out.reserve(out.size() + 4 * frames.values().size());
  for (double v : frames.values()) {
    PutU32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

Matrix DecodeFeatures(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kFeatureMagic, 8) != 0) {
    Fail(ErrorKind::kFormat, origin + ": not a LIPFEAT1 feature file");
  }
  const std::uint32_t frames = GetU32(bytes.data() + 8);
  const std::uint32_t dim = GetU32(bytes.data() + 12);
  const std::uint64_t need = 16 + 4ULL * frames * dim;
  if (bytes.size() != need) {
    Fail(ErrorKind::kFormat, origin + ": header declares " + std::to_string(frames) + "x" +
                                 std::to_string(dim) + " floats (" + std::to_string(need) +
                                 " bytes) but file has " + std::to_string(bytes.size()) +
                                 " bytes");
  }
  Matrix m(frames, dim);
  const std::uint8_t* p = bytes.data() + 16;
  for (double& v : m.values()) {
    v = std::bit_cast<float>(GetU32(p));
    p += 4;
  }
  return m;
}

void WriteFeatures(const fs::path& path, const Matrix& frames) {
  const auto bytes = EncodeFeatures(frames);
  WriteBytes(path, bytes.data(), bytes.size());
}

Matrix ReadFeatures(const fs::path& path) { return DecodeFeatures(ReadBytes(path), path.string()); }

scoring::VisemeMap LoadVisemeMap(const fs::path& path, int n_classes, int n_visemes) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open viseme map " + path.string());
  std::vector<int> table(static_cast<std::size_t>(n_classes), -1);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    const auto fields = SplitTabs(line);
    int p = -1, v = -1;
    try {
      if (fields.size() != 2) throw std::invalid_argument("fields");
      p = std::stoi(fields[0]);
      v = std::stoi(fields[1]);
    } catch (const std::logic_error&) {
      Fail(ErrorKind::kFormat, where + "expected 'class<TAB>viseme'");
    }
    if (p < 0 || p >= n_classes) {
      Fail(ErrorKind::kRange, where + "class " + std::to_string(p) + " out of range");
    }
    if (table[static_cast<std::size_t>(p)] != -1) {
      Fail(ErrorKind::kFormat, where + "class " + std::to_string(p) + " mapped twice");
    }
    table[static_cast<std::size_t>(p)] = v;
  }
  for (int p = 0; p < n_classes; ++p) {
    if (table[static_cast<std::size_t>(p)] == -1) {
      Fail(ErrorKind::kFormat, path.string() + ": class " + std::to_string(p) + " unmapped");
    }
  }
  return scoring::VisemeMap(std::move(table), n_visemes);
}

void WriteVisemeMap(const fs::path& path, const scoring::VisemeMap& map) {
  std::string text;
  for (int p = 0; p < map.n_phonemes(); ++p) {
    text += std::to_string(p) + '\t' + std::to_string(map(p)) + '\n';
  }
  WriteTextFile(path, text);
}

std::vector<std::vector<std::string>> LoadPhrases(const fs::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open phrase list " + path.string());
  std::vector<std::vector<std::string>> phrases;
  std::string line;
  while (std::getline(in, line)) {
    auto words = SplitWords(line);
    if (!words.empty()) phrases.push_back(std::move(words));
  }
  if (phrases.empty()) Fail(ErrorKind::kFormat, path.string() + ": no phrases");
  return phrases;
}

std::string ReadTextFile(const fs::path& path) {
  const auto bytes = ReadBytes(path);
  return std::string(bytes.begin(), bytes.end());
}

void WriteTextFile(const fs::path& path, const std::string& text) {
  WriteBytes(path, reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
}

// ---------------------------------------------------------------------------
// Synthetic corpus.

const std::vector<std::string>& SynthPhrases() {
  static const std::vector<std::string> kPhrases = {
      "excuse me",        "goodbye", "hello",      "how are you",      "nice to meet you",
      "see you",          "i am sorry", "thank you", "have a good time", "you are welcome",
  };
  return kPhrases;
}

namespace {

const std::vector<std::string>& SynthLexiconOrder() {
  static const std::vector<std::string> kWords = [] {
    std::vector<std::string> words;
    for (const auto& phrase : SynthPhrases()) {
      for (const auto& w : SplitWords(phrase)) {
        if (std::find(words.begin(), words.end(), w) == words.end()) words.push_back(w);
      }
    }
    return words;
  }();
  return kWords;
}

}  // namespace

std::vector<int> SynthWordClasses(const std::string& word) {
  const auto& words = SynthLexiconOrder();
  auto it = std::find(words.begin(), words.end(), word);
  if (it == words.end()) Fail(ErrorKind::kArgument, "word '" + word + "' not in synthetic lexicon");
  const int index = static_cast<int>(it - words.begin());
  const int length = word.size() <= 2 ? 2 : 3;
  std::vector<int> classes;
  for (int j = 0; j < length; ++j) classes.push_back((index * 5 + j * 11 + 3) % kNumClasses);
  return classes;
}

GrayImage RenderMouth(int label_class, const MouthGeometry& g, int view) {
  const double angle = view * std::numbers::pi / 180.0;
  const double squash = 0.55 + 0.45 * std::cos(angle);
  const double center_col = g.center_col + 12.0 * std::sin(angle);
  const int width_step = label_class / 7;
  const int aperture_step = label_class % 7;
  const double half_width = 16.0 + 4.0 * width_step;
  const double half_open = 1.0 + 2.2 * aperture_step;
  const double lip = 4.0;

  GrayImage img(kFrameWidth, kFrameHeight);
  for (int r = 0; r < kFrameHeight; ++r) {
    for (int c = 0; c < kFrameWidth; ++c) {
      const double dx = (c - center_col) / (squash * g.scale);
      const double dy = (r - g.center_row) / g.scale;
      const double inner = (dx / half_width) * (dx / half_width) +
                           (dy / half_open) * (dy / half_open);
      const double outer = (dx / (half_width + lip)) * (dx / (half_width + lip)) +
                           (dy / (half_open + lip)) * (dy / (half_open + lip));
      double v;
      if (inner <= 1.0) {
        v = (aperture_step >= 3 && dy < -half_open + 3.0) ? 0.85 : 0.12;
      } else if (outer <= 1.0) {
        v = dy < 0 ? 0.72 : 0.78;
      } else {
        v = 0.5;
      }
      v += 0.15 * std::sin(angle) * (c - kFrameWidth / 2.0) / (kFrameWidth / 2.0);
      img.at(r, c) = v + g.brightness;
    }
  }
  return img;
}

SynthCorpus SynthesizeCorpus(const SynthOptions& o, const fs::path& out_dir) {
  if (o.n_phrases < 1 || o.n_phrases > static_cast<int>(SynthPhrases().size())) {
    Fail(ErrorKind::kArgument, "n_phrases must be in [1,10], got " + std::to_string(o.n_phrases));
  }
  if (o.reps < 1) Fail(ErrorKind::kArgument, "reps must be >= 1");
  if (o.n_speakers < 1) Fail(ErrorKind::kArgument, "n_speakers must be >= 1");
  if (o.noise_level < 0.0) Fail(ErrorKind::kArgument, "noise_level must be >= 0");
  if (o.views.empty()) Fail(ErrorKind::kArgument, "at least one view required");
  for (int v : o.views) {
    if (!IsKnownView(v)) Fail(ErrorKind::kArgument, "unknown view " + std::to_string(v));
  }

  const int n_test = o.n_speakers >= 2 ? std::max(1, o.n_speakers / 4) : 0;
  const int first_test = o.n_speakers - n_test;

  std::vector<std::string> lexicon;
  std::vector<std::vector<std::string>> phrases;
  for (int p = 0; p < o.n_phrases; ++p) {
    phrases.push_back(SplitWords(SynthPhrases()[static_cast<std::size_t>(p)]));
    for (const auto& w : phrases.back()) {
      if (std::find(lexicon.begin(), lexicon.end(), w) == lexicon.end()) lexicon.push_back(w);
    }
  }

  std::vector<Utterance> train, test;
  int utt_index = 0;
  for (int s = 0; s < o.n_speakers; ++s) {
    char speaker[16];
    std::snprintf(speaker, sizeof(speaker), "s%02d", s + 1);
    Rng speaker_rng(MixSeed(o.seed, static_cast<std::uint64_t>(s)));
    MouthGeometry geometry;
    geometry.brightness = speaker_rng.Uniform(-0.08, 0.08);
    geometry.center_row = 30.0 + speaker_rng.Uniform(-2.0, 2.0);
    geometry.center_col = 45.0 + speaker_rng.Uniform(-3.0, 3.0);
    geometry.scale = speaker_rng.Uniform(0.92, 1.08);

    for (int p = 0; p < o.n_phrases; ++p) {
      for (int rep = 0; rep < o.reps; ++rep, ++utt_index) {
        char id[64];
        std::snprintf(id, sizeof(id), "%s_p%02d_r%d", speaker, p + 1, rep + 1);
        Rng duration_rng(MixSeed(o.seed, 1000 + static_cast<std::uint64_t>(utt_index)));
        std::vector<int> labels;
        for (const auto& word : phrases[static_cast<std::size_t>(p)]) {
          for (int cls : SynthWordClasses(word)) {
            const int frames = 2 + static_cast<int>(duration_rng.Below(2));
            labels.insert(labels.end(), static_cast<std::size_t>(frames), cls);
          }
        }
        const std::string label_file = "labels/" + std::string(id) + ".lab";
        WriteLabels(out_dir / label_file, labels);

        for (int view : o.views) {
          Rng noise_rng(MixSeed(MixSeed(o.seed, 5000 + static_cast<std::uint64_t>(utt_index)),
                                static_cast<std::uint64_t>(view)));
          const std::string frames_dir = "frames/v" + std::to_string(view) + "/" + id;
          std::vector<std::uint8_t> bytes(static_cast<std::size_t>(kFrameWidth) * kFrameHeight);
          for (std::size_t t = 0; t < labels.size(); ++t) {
            const GrayImage clean = RenderMouth(labels[t], geometry, view);
            for (std::size_t i = 0; i < bytes.size(); ++i) {
              double v = clean.pixels[i];
              if (o.noise_level > 0.0) v += noise_rng.Uniform(-o.noise_level, o.noise_level);
              bytes[i] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
            }
            char name[32];
            std::snprintf(name, sizeof(name), "frame_%06zu.pgm", t + 1);
            SavePgmBytes(out_dir / frames_dir / name, kFrameWidth, kFrameHeight, bytes);
          }
          Utterance u;
          u.id = id;
          u.speaker = speaker;
          u.view = view;
          u.frames_dir = frames_dir;
          u.transcript = phrases[static_cast<std::size_t>(p)];
          u.label_file = label_file;
          (s < first_test ? train : test).push_back(std::move(u));
        }
      }
    }
  }

  SynthCorpus corpus;
  corpus.train_manifest = out_dir / "train.tsv";
  corpus.test_manifest = out_dir / "test.tsv";
  corpus.viseme_map = out_dir / "visemes.map";
  corpus.lexicon = out_dir / "lexicon.txt";
  corpus.grammar = out_dir / "grammar.txt";
  // Group manifest lines by view so per-view stages read contiguous blocks.
  auto by_view = [&](std::vector<Utterance>& utts) {
    std::stable_sort(utts.begin(), utts.end(), [&](const Utterance& a, const Utterance& b) {
      auto ia = std::find(o.views.begin(), o.views.end(), a.view);
      auto ib = std::find(o.views.begin(), o.views.end(), b.view);
      return ia < ib;
    });
  };
  by_view(train);
  by_view(test);
  WriteManifest(corpus.train_manifest, train);
  WriteManifest(corpus.test_manifest, test);
  const int per_view = static_cast<int>(o.views.size());
  corpus.train_utterances = static_cast<int>(train.size()) / per_view;
  corpus.test_utterances = static_cast<int>(test.size()) / per_view;

  std::vector<int> table(kNumClasses);
  for (int p = 0; p < kNumClasses; ++p) table[static_cast<std::size_t>(p)] = p * kNumVisemes / kNumClasses;
  WriteVisemeMap(corpus.viseme_map, scoring::VisemeMap(table, kNumVisemes));

  std::string lex_text;
  for (const auto& w : lexicon) {
    lex_text += w + '\t';
    const auto classes = SynthWordClasses(w);
    for (std::size_t j = 0; j < classes.size(); ++j) {
      lex_text += (j ? " " : "") + std::to_string(classes[j]);
    }
    lex_text += '\n';
  }
  WriteTextFile(corpus.lexicon, lex_text);

  std::string grammar_text;
  for (const auto& phrase : phrases) grammar_text += JoinWords(phrase) + '\n';
  WriteTextFile(corpus.grammar, grammar_text);
  return corpus;
}

}  // namespace lipread
