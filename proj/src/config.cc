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

#include "lipread/config.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>

#include "lipread/dataio.h"
#include "lipread/error.h"

namespace lipread {
namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Shortest text that round-trips to the same double.
std::string Num(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string IntList(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::vector<int> ParseIntList(const std::string& value, const std::string& where) {
  std::vector<int> out;
  std::istringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      out.push_back(std::stoi(Trim(item)));
    } catch (const std::logic_error&) {
      Fail(ErrorKind::kFormat, where + "bad integer list '" + value + "'");
    }
  }
  if (out.empty()) Fail(ErrorKind::kFormat, where + "empty list");
  return out;
}

}  // namespace

std::string Fnv1aHex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PipelineConfig::PipelineConfig() { lstm.max_iterations = 10000; }

PipelineConfig PipelineConfig::Parse(const std::string& text, const std::string& origin) {
  PipelineConfig c;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  bool schedule_given = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') Fail(ErrorKind::kFormat, where + "malformed section header");
      section = line.substr(1, line.size() - 2);
      if (section != "pcanet" && section != "lstm" && section != "tandem" && section != "hmm" &&
          section != "paths") {
        Fail(ErrorKind::kFormat, where + "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) Fail(ErrorKind::kFormat, where + "expected key = value");
    if (section.empty()) Fail(ErrorKind::kFormat, where + "key outside any section");
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    auto as_int = [&] {
      try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing");
        return v;
      } catch (const std::logic_error&) {
        Fail(ErrorKind::kFormat, where + key + ": expected an integer, got '" + value + "'");
      }
    };
    auto as_double = [&] {
      try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing");
        return v;
      } catch (const std::logic_error&) {
        Fail(ErrorKind::kFormat, where + key + ": expected a number, got '" + value + "'");
      }
    };
    const std::string id = section + "." + key;
    if (id == "pcanet.patch_side") c.pcanet.patch_side = static_cast<int>(as_int());
    else if (id == "pcanet.filters") c.pcanet.filters = static_cast<int>(as_int());
    else if (id == "pcanet.pool_window") c.pcanet.pool_window = static_cast<int>(as_int());
    else if (id == "pcanet.pool_stride") c.pcanet.pool_stride = static_cast<int>(as_int());
    else if (id == "pcanet.blocks") {
      const auto v = ParseIntList(value, where);
      if (v.size() != 2) Fail(ErrorKind::kFormat, where + "blocks expects rows,cols");
      c.pcanet.block_rows = v[0];
      c.pcanet.block_cols = v[1];
    } else if (id == "pcanet.frame_cap") c.pcanet.frame_cap = static_cast<int>(as_int());
    else if (id == "pcanet.normalize") c.normalize_frames = as_int() != 0;
    else if (id == "lstm.hidden") c.hidden = static_cast<int>(as_int());
    else if (id == "lstm.lr") c.lstm.learning_rate = as_double();
    else if (id == "lstm.weight_decay") c.lstm.weight_decay = as_double();
    else if (id == "lstm.momentum") c.lstm.momentum = as_double();
    else if (id == "lstm.iterations") c.lstm.max_iterations = static_cast<int>(as_int());
    else if (id == "lstm.bptt") c.lstm.bptt_horizon = static_cast<int>(as_int());
    else if (id == "lstm.seed") c.lstm.seed = static_cast<std::uint64_t>(as_int());
    else if (id == "lstm.scaling") c.scaling = value == "auto" ? 0.0 : as_double();
    else if (id == "tandem.floor") c.floor = as_double();
    else if (id == "tandem.delta_window") c.delta_window = static_cast<int>(as_int());
    else if (id == "tandem.views") c.views = ParseIntList(value, where);
    else if (id == "hmm.states_per_word") c.states_per_word = static_cast<int>(as_int());
    else if (id == "hmm.max_mixtures") c.max_mixtures = static_cast<int>(as_int());
    else if (id == "hmm.schedule") {
      c.schedule = ParseIntList(value, where);
      schedule_given = true;
    }
    else if (id == "hmm.variance_floor_ratio") c.variance_floor_ratio = as_double();
    else if (id == "hmm.em_iters") c.em_iters = static_cast<int>(as_int());
    else if (id == "hmm.passes_per_split") c.passes_per_split = static_cast<int>(as_int());
    else if (id == "hmm.seed") c.hmm_seed = static_cast<std::uint64_t>(as_int());
    else if (id == "hmm.grammar_mode") c.grammar_mode = value;
    else if (id == "hmm.word_penalty") c.word_penalty = as_double();
    else if (id == "paths.train_manifest") c.train_manifest = value;
    else if (id == "paths.test_manifest") c.test_manifest = value;
    else if (id == "paths.viseme_map") c.viseme_map = value;
    else if (id == "paths.grammar") c.grammar = value;
    else Fail(ErrorKind::kFormat, where + "unknown key '" + key + "' in [" + section + "]");
  }
  // The schedule follows max_mixtures unless spelled out.
  if (!schedule_given && c.max_mixtures >= 1) c.schedule = gmmhmm::MixtureSchedule(c.max_mixtures);
  c.Validate();
  return c;
}

PipelineConfig PipelineConfig::Load(const std::filesystem::path& path) {
  PipelineConfig c = Parse(ReadTextFile(path), path.string());
  const auto base = path.parent_path();
  for (std::string* p : {&c.train_manifest, &c.test_manifest, &c.viseme_map, &c.grammar}) {
    if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
  }
  return c;
}

namespace {

std::string SectionText(const PipelineConfig& c, int section) {
  std::string s;
  switch (section) {
    case 0:
      s = "[pcanet]\npatch_side = " + std::to_string(c.pcanet.patch_side) +
          "\nfilters = " + std::to_string(c.pcanet.filters) +
          "\npool_window = " + std::to_string(c.pcanet.pool_window) +
          "\npool_stride = " + std::to_string(c.pcanet.pool_stride) +
          "\nblocks = " + std::to_string(c.pcanet.block_rows) + "," +
          std::to_string(c.pcanet.block_cols) +
          "\nframe_cap = " + std::to_string(c.pcanet.frame_cap) +
          "\nnormalize = " + std::to_string(c.normalize_frames ? 1 : 0) + "\n";
      break;
    case 1:
      s = "[lstm]\nhidden = " + std::to_string(c.hidden) + "\nlr = " + Num(c.lstm.learning_rate) +
          "\nweight_decay = " + Num(c.lstm.weight_decay) + "\nmomentum = " + Num(c.lstm.momentum) +
          "\niterations = " + std::to_string(c.lstm.max_iterations) +
          "\nbptt = " + std::to_string(c.lstm.bptt_horizon) +
          "\nseed = " + std::to_string(c.lstm.seed) +
          "\nscaling = " + (c.scaling == 0.0 ? std::string("auto") : Num(c.scaling)) + "\n";
      break;
    case 2:
      s = "[tandem]\nfloor = " + Num(c.floor) + "\ndelta_window = " + std::to_string(c.delta_window) +
          "\nviews = " + IntList(c.views) + "\n";
      break;
    case 3:
      s = "[hmm]\nstates_per_word = " + std::to_string(c.states_per_word) +
          "\nmax_mixtures = " + std::to_string(c.max_mixtures) +
          "\nschedule = " + IntList(c.schedule) +
          "\nvariance_floor_ratio = " + Num(c.variance_floor_ratio) +
          "\nem_iters = " + std::to_string(c.em_iters) +
          "\npasses_per_split = " + std::to_string(c.passes_per_split) +
          "\nseed = " + std::to_string(c.hmm_seed) + "\ngrammar_mode = " + c.grammar_mode +
          "\nword_penalty = " + Num(c.word_penalty) + "\n";
      break;
    default:
      s = "[paths]\ntrain_manifest = " + c.train_manifest + "\ntest_manifest = " + c.test_manifest +
          "\nviseme_map = " + c.viseme_map + "\ngrammar = " + c.grammar + "\n";
  }
  return s;
}

}  // namespace

std::string PipelineConfig::ToText() const {
  std::string out;
  for (int s = 0; s < 5; ++s) out += (s ? "\n" : "") + SectionText(*this, s);
  return out;
}

std::string PipelineConfig::Hash(Stage stage) const {
  // Data paths feed every stage; sections join in pipeline order.
  std::string text = SectionText(*this, 4) + SectionText(*this, 0);
  if (stage >= Stage::kLstm) text += SectionText(*this, 1);
  if (stage >= Stage::kTandem) text += SectionText(*this, 2);
  if (stage >= Stage::kHmm) text += SectionText(*this, 3);
  return Fnv1aHex(text);
}

void PipelineConfig::Validate() const {
  pcanet.Validate();
  lstm.Validate();
  if (hidden < 1) Fail(ErrorKind::kArgument, "lstm.hidden must be >= 1");
  if (scaling < 0.0) Fail(ErrorKind::kArgument, "lstm.scaling must be positive or auto");
  if (!(floor > 0.0)) Fail(ErrorKind::kArgument, "tandem.floor must be > 0");
  if (delta_window < 1) Fail(ErrorKind::kArgument, "tandem.delta_window must be >= 1");
  if (views.empty()) Fail(ErrorKind::kArgument, "tandem.views must list at least one view");
  for (int v : views) {
    if (!IsKnownView(v)) Fail(ErrorKind::kArgument, "tandem.views: unknown view " + std::to_string(v));
  }
  if (states_per_word < 1) Fail(ErrorKind::kArgument, "hmm.states_per_word must be >= 1");
  if (schedule != gmmhmm::MixtureSchedule(max_mixtures)) {
    Fail(ErrorKind::kArgument, "hmm.schedule must double from 1 up to max_mixtures (" +
                                   IntList(gmmhmm::MixtureSchedule(max_mixtures)) + ")");
  }
  if (!(variance_floor_ratio > 0.0)) Fail(ErrorKind::kArgument, "hmm.variance_floor_ratio must be > 0");
  if (em_iters < 1 || passes_per_split < 1) Fail(ErrorKind::kArgument, "hmm pass counts must be >= 1");
  if (grammar_mode != "phrase_list" && grammar_mode != "word_loop") {
    Fail(ErrorKind::kArgument, "hmm.grammar_mode must be phrase_list or word_loop");
  }
}

gmmhmm::TrainOptions PipelineConfig::HmmOptions() const {
  gmmhmm::TrainOptions o;
  o.states_per_word = states_per_word;
  o.max_mixtures = max_mixtures;
  o.max_realign = em_iters;
  o.passes_per_split = passes_per_split;
  o.var_floor_ratio = variance_floor_ratio;
  o.seed = hmm_seed;
  return o;
}

double PipelineConfig::ResolvedScaling(int frame_height, int frame_width) const {
  if (scaling > 0.0) return scaling;
  // Pooled pixels in one nominal block: a histogram block then carries unit
  // mass per filter-map pair.
  const int block_h = pcanet.pooled_side(frame_height) / pcanet.block_rows;
  const int block_w = pcanet.pooled_side(frame_width) / pcanet.block_cols;
  return 1.0 / (static_cast<double>(std::max(block_h, 1)) * std::max(block_w, 1));
}

}  // namespace lipread
