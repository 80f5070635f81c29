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

#include "lipread/pipeline.h"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <map>
#include <set>
#include <sstream>

#include "lipread/dataio.h"
#include "lipread/error.h"
#include "lipread/gmmhmm.h"
#include "lipread/lstm.h"
#include "lipread/parallel.h"
#include "lipread/pcanet.h"
#include "lipread/tandem.h"

namespace lipread::pipeline {
namespace fs = std::filesystem;

namespace {

constexpr const char* kStampName = "STAMP";

void Log(const Context& ctx, const std::string& line) {
  if (ctx.log != nullptr) *ctx.log << line << '\n' << std::flush;
}

std::string ViewName(int view) { return std::to_string(view); }
fs::path ViewDir(const Context& ctx, int view) { return ctx.out / ("v" + ViewName(view)); }
fs::path FiltersDir(const Context& ctx, int view) { return ViewDir(ctx, view) / "filters"; }
fs::path FeaturesDir(const Context& ctx, int view) { return ViewDir(ctx, view) / "features"; }
fs::path LstmDir(const Context& ctx, int view) { return ViewDir(ctx, view) / "lstm"; }
fs::path PosteriorsDir(const Context& ctx, int view) { return ViewDir(ctx, view) / "posteriors"; }
fs::path TandemDir(const Context& ctx, const std::string& key) { return ctx.out / "tandem" / key; }

void WriteStamp(const fs::path& dir, const std::string& stage, const std::string& hash) {
  WriteTextFile(dir / kStampName, "stage=" + stage + "\nconfig=" + hash + "\n");
}

// Verifies that `dir` was produced by `stage` under `hash`.
void CheckStamp(const Context& ctx, const fs::path& dir, const std::string& what,
                const std::string& stage, const std::string& hash) {
  const fs::path stamp = dir / kStampName;
  if (!fs::exists(stamp)) {
    Fail(ErrorKind::kMissingArtifact, "missing " + what + " (" + dir.string() + "); run " + stage);
  }
  std::string recorded;
  std::istringstream in(ReadTextFile(stamp));
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("config=", 0) == 0) recorded = line.substr(7);
  }
  if (recorded != hash && !ctx.force) {
    Fail(ErrorKind::kConfigMismatch, what + " in " + dir.string() + " was produced under config " +
                                         recorded + " but the current config is " + hash +
                                         "; re-run " + stage + " or pass --force");
  }
}

void CheckHash(const Context& ctx, const std::string& recorded, const std::string& expected,
               const std::string& what, const std::string& stage) {
  if (recorded != expected && !ctx.force) {
    Fail(ErrorKind::kConfigMismatch, what + " was produced under config " + recorded +
                                         " but the current config is " + expected + "; re-run " +
                                         stage + " or pass --force");
  }
}

std::vector<Utterance> LoadSplit(const Context& ctx, const std::string& split) {
  const std::string& path =
      split == "train" ? ctx.config.train_manifest : ctx.config.test_manifest;
  if (split != "train" && split != "test") {
    Fail(ErrorKind::kArgument, "unknown split '" + split + "' (expected train or test)");
  }
  if (path.empty()) Fail(ErrorKind::kArgument, "paths." + split + "_manifest is not set");
  return LoadManifest(path);
}

std::vector<Utterance> ForView(const std::vector<Utterance>& utts, int view) {
  std::vector<Utterance> out;
  for (const auto& u : utts) {
    if (u.view == view) out.push_back(u);
  }
  return out;
}

// Training and (when configured) test utterances recorded under `view`.
std::vector<Utterance> AllForView(const Context& ctx, int view) {
  std::vector<Utterance> out = ForView(LoadSplit(ctx, "train"), view);
  if (!ctx.config.test_manifest.empty()) {
    for (auto& u : ForView(LoadSplit(ctx, "test"), view)) out.push_back(std::move(u));
  }
  std::set<std::string> seen;
  for (const auto& u : out) {
    if (!seen.insert(u.id).second) {
      Fail(ErrorKind::kFormat, "utterance id " + u.id + " appears twice for view " + ViewName(view));
    }
  }
  return out;
}

std::vector<int> ConfiguredViews(const Context& ctx) {
  return tandem::CanonicalViewOrder(ctx.config.views);
}

std::string TandemStageFor(const std::vector<int>& views) {
  return views.size() == 1 ? "tandem" : "fuse";
}

Matrix ReadArtifact(const fs::path& path, const std::string& what, const std::string& stage) {
  if (!fs::exists(path)) {
    Fail(ErrorKind::kMissingArtifact,
         "missing " + what + " " + path.string() + "; run " + stage);
  }
  return ReadFeatures(path);
}

}  // namespace

std::string ViewKey(std::span<const int> views) {
  std::string key;
  for (int v : tandem::CanonicalViewOrder(views)) key += (key.empty() ? "" : "+") + ViewName(v);
  return key;
}

void WriteResolvedConfig(const Context& ctx) {
  WriteTextFile(ctx.out / "resolved.cfg", ctx.config.ToText());
}

void LearnFilters(const Context& ctx, int view) {
  const auto& cfg = ctx.config;
  const auto utts = ForView(LoadSplit(ctx, "train"), view);
  if (utts.empty()) Fail(ErrorKind::kArgument, "no training utterances for view " + ViewName(view));
  std::vector<const fs::path*> paths;
  for (const auto& u : utts) {
    for (const auto& p : u.frame_paths) paths.push_back(&p);
  }
  const auto picks = pcanet::SubsampleIndices(paths.size(), cfg.pcanet.frame_cap);
  std::vector<GrayImage> frames(picks.size());
  ParallelFor(picks.size(), [&](std::size_t i) {
    frames[i] = LoadImage(*paths[picks[i]]);
    if (cfg.normalize_frames) NormalizeFrame(frames[i]);
  });
  Log(ctx, "learn-filters v" + ViewName(view) + ": " + std::to_string(frames.size()) + " of " +
               std::to_string(paths.size()) + " training frames");
  const auto stage1 = pcanet::LearnStage1(frames, cfg.pcanet);
  const auto stage2 = pcanet::LearnStage2(frames, stage1, cfg.pcanet);
  const fs::path dir = FiltersDir(ctx, view);
  const std::string hash = cfg.Hash(Stage::kFilters);
  pcanet::SaveFilterBank(dir / "stage1.fbank", stage1, hash);
  pcanet::SaveFilterBank(dir / "stage2.fbank", stage2, hash);
  WriteStamp(dir, "learn-filters", hash);
}

void Extract(const Context& ctx, int view) {
  const auto& cfg = ctx.config;
  const fs::path fdir = FiltersDir(ctx, view);
  const std::string hash = cfg.Hash(Stage::kFeatures);
  CheckStamp(ctx, fdir, "filter bank", "learn-filters", hash);
  std::string recorded;
  const auto stage1 = pcanet::LoadFilterBank(fdir / "stage1.fbank", &recorded);
  CheckHash(ctx, recorded, hash, "stage-1 filter bank", "learn-filters");
  const auto stage2 = pcanet::LoadFilterBank(fdir / "stage2.fbank", &recorded);
  CheckHash(ctx, recorded, hash, "stage-2 filter bank", "learn-filters");

  const auto utts = AllForView(ctx, view);
  const fs::path dir = FeaturesDir(ctx, view);
  const std::size_t dim = cfg.pcanet.feature_dim();
  std::size_t total = 0;
  for (const auto& u : utts) {
    Matrix features(u.num_frames(), dim);
    ParallelFor(u.num_frames(), [&](std::size_t t) {
      GrayImage frame = LoadImage(u.frame_paths[t]);
      if (cfg.normalize_frames) NormalizeFrame(frame);
      const auto f = pcanet::ExtractFeature(frame, stage1, stage2, cfg.pcanet);
      std::copy(f.begin(), f.end(), features.row(t).begin());
    });
    WriteFeatures(dir / (u.id + ".feat"), features);
    total += u.num_frames();
  }
  WriteStamp(dir, "extract", hash);
  Log(ctx, "extract v" + ViewName(view) + ": " + std::to_string(utts.size()) + " utterances, " +
               std::to_string(total) + " frames, dim " + std::to_string(dim));
}

namespace {

lstm::SparseSequence LoadSparseFeatures(const Context& ctx, int view, const Utterance& u,
                                        double scale) {
  const Matrix dense =
      ReadArtifact(FeaturesDir(ctx, view) / (u.id + ".feat"), "features", "extract");
  if (dense.rows() != u.num_frames()) {
    Fail(ErrorKind::kDimension, "features for " + u.id + " have " + std::to_string(dense.rows()) +
                                    " frames but the manifest lists " +
                                    std::to_string(u.num_frames()) + "; re-run extract");
  }
  return lstm::SparseSequence::FromDense(dense, scale);
}

double FrameScaling(const Context& ctx, const std::vector<Utterance>& utts) {
  for (const auto& u : utts) {
    if (u.num_frames() > 0) {
      const GrayImage first = LoadImage(u.frame_paths.front());
      return ctx.config.ResolvedScaling(first.height, first.width);
    }
  }
  Fail(ErrorKind::kArgument, "no frames to derive the input scaling from");
}

}  // namespace

void TrainLstm(const Context& ctx, int view) {
  const auto& cfg = ctx.config;
  CheckStamp(ctx, FeaturesDir(ctx, view), "features", "extract", cfg.Hash(Stage::kFeatures));
  const auto utts = ForView(LoadSplit(ctx, "train"), view);
  if (utts.empty()) Fail(ErrorKind::kArgument, "no training utterances for view " + ViewName(view));
  const double scaling = FrameScaling(ctx, utts);
  std::vector<lstm::Example> data(utts.size());
  for (std::size_t i = 0; i < utts.size(); ++i) {
    if (!utts[i].frame_labels) {
      Fail(ErrorKind::kArgument, "utterance " + utts[i].id + " has no frame labels");
    }
    data[i].features = LoadSparseFeatures(ctx, view, utts[i], scaling);
    data[i].labels = *utts[i].frame_labels;
  }
  Log(ctx, "train-lstm v" + ViewName(view) + ": " + std::to_string(data.size()) +
               " utterances, " + std::to_string(cfg.lstm.max_iterations) + " iterations");
  const auto result = lstm::Train(data, cfg.hidden, kNumClasses, cfg.lstm);

  const fs::path dir = LstmDir(ctx, view);
  const std::string hash = cfg.Hash(Stage::kLstm);
  lstm::SaveModel(dir / "model.lstm", result.params, cfg.lstm.seed, scaling, hash);
  std::string trace = "iteration,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < result.loss_trace.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g\n", i + 1, result.loss_trace[i]);
    trace += buf;
  }
  WriteTextFile(dir / "loss.csv", trace);
  WriteStamp(dir, "train-lstm", hash);
  char acc[64];
  std::snprintf(acc, sizeof(acc), "%.2f", 100.0 * lstm::FrameAccuracy(result.params, data));
  Log(ctx, "train-lstm v" + ViewName(view) + ": training frame accuracy " + acc + "%");
}

void Posteriors(const Context& ctx, int view) {
  const auto& cfg = ctx.config;
  const std::string hash = cfg.Hash(Stage::kPosteriors);
  CheckStamp(ctx, FeaturesDir(ctx, view), "features", "extract", cfg.Hash(Stage::kFeatures));
  CheckStamp(ctx, LstmDir(ctx, view), "LSTM model", "train-lstm", hash);
  double scaling = 0.0;
  std::string recorded;
  const auto params = lstm::LoadModel(LstmDir(ctx, view) / "model.lstm", &scaling, &recorded);
  CheckHash(ctx, recorded, hash, "LSTM model", "train-lstm");

  const auto utts = AllForView(ctx, view);
  std::vector<Matrix> posts(utts.size());
  ParallelFor(utts.size(), [&](std::size_t i) {
    posts[i] = lstm::Forward(params, LoadSparseFeatures(ctx, view, utts[i], scaling));
  });
  const fs::path dir = PosteriorsDir(ctx, view);
  for (std::size_t i = 0; i < utts.size(); ++i) WriteFeatures(dir / (utts[i].id + ".feat"), posts[i]);
  WriteStamp(dir, "posteriors", hash);
  Log(ctx, "posteriors v" + ViewName(view) + ": " + std::to_string(utts.size()) + " utterances");
}

namespace {

// Writes tandem features for every id from the posteriors of `views`.
void WriteTandem(const Context& ctx, const std::vector<int>& views, const std::string& stage) {
  const auto& cfg = ctx.config;
  std::vector<std::vector<Utterance>> per_view;
  for (int v : views) {
    CheckStamp(ctx, PosteriorsDir(ctx, v), "posteriors for view " + ViewName(v), "posteriors",
               cfg.Hash(Stage::kPosteriors));
    per_view.push_back(AllForView(ctx, v));
  }
  // Ids must agree across views.
  std::vector<std::set<std::string>> ids(views.size());
  for (std::size_t k = 0; k < views.size(); ++k) {
    for (const auto& u : per_view[k]) ids[k].insert(u.id);
  }
  for (std::size_t k = 0; k < views.size(); ++k) {
    for (std::size_t j = 0; j < views.size(); ++j) {
      for (const auto& id : ids[k]) {
        if (!ids[j].count(id)) {
          Fail(ErrorKind::kMissingArtifact, "utterance " + id + " is present in view " +
                                         ViewName(views[k]) + " but missing in view " +
                                         ViewName(views[j]));
        }
      }
    }
  }
  std::vector<std::string> names;
  for (int v : views) names.push_back(ViewName(v));

  const std::string key = ViewKey(views);
  const fs::path dir = TandemDir(ctx, key);
  const std::string hash = cfg.Hash(Stage::kTandem);
  tandem::SidecarHeader header;
  header.classes = kNumClasses;
  header.views = static_cast<int>(views.size());
  header.window = cfg.delta_window;
  header.floor = cfg.floor;
  header.view_order = views;
  header.config_hash = hash;
  const std::string header_text = header.ToText();
  for (const auto& u : per_view.front()) {
    std::vector<Matrix> posts;
    for (int v : views) {
      posts.push_back(ReadArtifact(PosteriorsDir(ctx, v) / (u.id + ".feat"), "posteriors",
                                   "posteriors"));
    }
    Matrix fused;
    try {
      fused = tandem::ConcatViews(posts, names, cfg.floor, cfg.delta_window);
    } catch (const Error& e) {
      Fail(e.kind(), "utterance " + u.id + ": " + e.what());
    }
    WriteFeatures(dir / (u.id + ".feat"), fused);
    WriteTextFile(dir / (u.id + ".hdr"), header_text);
  }
  // Both commands produce the same artifact; a one-view fuse equals tandem.
  WriteStamp(dir, "tandem", hash);
  Log(ctx, stage + " " + key + ": " + std::to_string(per_view.front().size()) + " utterances");
}

Matrix LoadTandem(const Context& ctx, const std::string& key, const std::string& stage,
                  const std::string& id) {
  const fs::path dir = TandemDir(ctx, key);
  const fs::path hdr = dir / (id + ".hdr");
  if (!fs::exists(hdr)) {
    Fail(ErrorKind::kMissingArtifact, "missing tandem features " + hdr.string() + "; run " + stage);
  }
  const auto header = tandem::SidecarHeader::Parse(ReadTextFile(hdr), hdr.string());
  CheckHash(ctx, header.config_hash, ctx.config.Hash(Stage::kTandem),
            "tandem features " + hdr.string(), stage);
  return ReadArtifact(dir / (id + ".feat"), "tandem features", stage);
}

gmmhmm::Grammar LoadGrammar(const Context& ctx, const gmmhmm::ModelSet& models) {
  const auto& cfg = ctx.config;
  if (cfg.grammar_mode == "word_loop") {
    std::vector<std::string> lexicon;
    for (const auto& w : models.words) lexicon.push_back(w.word);
    return gmmhmm::Grammar::WordLoop(lexicon, cfg.word_penalty);
  }
  std::vector<std::vector<std::string>> phrases;
  if (!cfg.grammar.empty()) {
    phrases = LoadPhrases(cfg.grammar);
  } else {
    // Without a grammar file the phrase list is the set of training transcripts.
    std::set<std::vector<std::string>> seen;
    for (const auto& u : LoadSplit(ctx, "train")) {
      if (seen.insert(u.transcript).second) phrases.push_back(u.transcript);
    }
  }
  return gmmhmm::Grammar::PhraseList(phrases);
}

// The utterance list for a split, taken from the first configured view.
std::vector<Utterance> SplitUtterances(const Context& ctx, const std::string& split) {
  const auto views = ConfiguredViews(ctx);
  auto utts = ForView(LoadSplit(ctx, split), views.front());
  if (utts.empty()) {
    Fail(ErrorKind::kArgument, "no " + split + " utterances for view " + ViewName(views.front()));
  }
  return utts;
}

gmmhmm::ModelSet LoadModelSet(const Context& ctx) {
  const fs::path path = ctx.out / "hmm" / "models.hmm";
  if (!fs::exists(path)) Fail(ErrorKind::kMissingArtifact, "missing model set; run train-hmm");
  std::string recorded;
  auto models = gmmhmm::LoadModels(path, &recorded);
  CheckHash(ctx, recorded, ctx.config.Hash(Stage::kHmm), "model set " + path.string(),
            "train-hmm");
  return models;
}

}  // namespace

void Tandem(const Context& ctx, int view) { WriteTandem(ctx, {view}, "tandem"); }

void Fuse(const Context& ctx) { WriteTandem(ctx, ConfiguredViews(ctx), "fuse"); }

void TrainHmm(const Context& ctx) {
  const auto& cfg = ctx.config;
  const auto views = ConfiguredViews(ctx);
  const std::string key = ViewKey(views);
  const std::string stage = TandemStageFor(views);
  CheckStamp(ctx, TandemDir(ctx, key), "tandem features for views " + key, stage,
             cfg.Hash(Stage::kTandem));
  const auto utts = SplitUtterances(ctx, "train");
  std::vector<Matrix> obs(utts.size());
  std::vector<gmmhmm::TrainingUtterance> data(utts.size());
  for (std::size_t i = 0; i < utts.size(); ++i) {
    obs[i] = LoadTandem(ctx, key, stage, utts[i].id);
    data[i].observations = &obs[i];
    data[i].words = utts[i].transcript;
  }
  Log(ctx, "train-hmm " + key + ": " + std::to_string(utts.size()) + " utterances, dim " +
               std::to_string(obs.front().cols()));
  gmmhmm::TrainReport report;
  const auto models = gmmhmm::EmbeddedTrain(data, cfg.HmmOptions(), &report);
  const fs::path dir = ctx.out / "hmm";
  const std::string hash = cfg.Hash(Stage::kHmm);
  gmmhmm::SaveModels(dir / "models.hmm", models, hash);
  WriteTextFile(dir / "train.csv", report.ToCsv());
  for (const auto& w : report.warnings) Log(ctx, "train-hmm warning: " + w);
  WriteStamp(dir, "train-hmm", hash);
  Log(ctx, "train-hmm: " + std::to_string(models.words.size()) + " words, " +
               std::to_string(report.passes.size()) + " passes");
}

void Decode(const Context& ctx, const std::string& split) {
  const auto models = LoadModelSet(ctx);
  const auto views = ConfiguredViews(ctx);
  const std::string key = ViewKey(views);
  const std::string stage = TandemStageFor(views);
  const auto grammar = LoadGrammar(ctx, models);
  const auto utts = SplitUtterances(ctx, split);
  std::vector<std::string> lines(utts.size());
  ParallelFor(utts.size(), [&](std::size_t i) {
    const Matrix obs = LoadTandem(ctx, key, stage, utts[i].id);
    const auto result = gmmhmm::ViterbiDecode(models, grammar, obs);
    lines[i] = utts[i].id + "\t" + JoinWords(result.words) + "\n";
  });
  std::string text;
  for (const auto& l : lines) text += l;
  const fs::path dir = ctx.out / "decode";
  WriteTextFile(dir / (split + ".hyp"), text);
  WriteStamp(dir, "decode", ctx.config.Hash(Stage::kDecode));
  Log(ctx, "decode " + split + ": " + std::to_string(utts.size()) + " utterances");
}

ScoreResult Score(const Context& ctx) {
  const auto& cfg = ctx.config;
  const fs::path hyp_path = ctx.out / "decode" / "test.hyp";
  if (!fs::exists(hyp_path)) Fail(ErrorKind::kMissingArtifact, "missing hypotheses; run decode");
  CheckStamp(ctx, ctx.out / "decode", "hypotheses", "decode", cfg.Hash(Stage::kDecode));
  std::map<std::string, std::vector<std::string>> hyps;
  {
    std::istringstream in(ReadTextFile(hyp_path));
    for (std::string line; std::getline(in, line);) {
      const auto tab = line.find('\t');
      if (tab == std::string::npos) {
        Fail(ErrorKind::kFormat, hyp_path.string() + ": expected id<TAB>words, got '" + line + "'");
      }
      hyps[line.substr(0, tab)] = SplitWords(line.substr(tab + 1));
    }
  }
  const auto views = ConfiguredViews(ctx);
  const std::string key = ViewKey(views);
  const auto utts = SplitUtterances(ctx, "test");
  std::vector<std::string> speakers;
  std::map<std::string, std::vector<scoring::TranscriptPair>> by_speaker;
  for (const auto& u : utts) {
    const auto it = hyps.find(u.id);
    if (it == hyps.end()) {
      Fail(ErrorKind::kMissingArtifact, "no hypothesis for " + u.id + "; run decode");
    }
    if (!by_speaker.count(u.speaker)) speakers.push_back(u.speaker);
    by_speaker[u.speaker].emplace_back(u.transcript, it->second);
  }
  std::vector<scoring::SpeakerResult> rows;
  for (const auto& s : speakers) rows.push_back(scoring::ScoreSpeaker(s, key, by_speaker[s]));

  ScoreResult result;
  result.report = scoring::MakeReport(std::move(rows));

  // Per-frame phoneme and viseme accuracy of each view's LSTM on labelled test frames.
  std::optional<scoring::VisemeMap> visemes;
  if (!cfg.viseme_map.empty()) visemes = LoadVisemeMap(cfg.viseme_map);
  std::string frames_csv = "view,frames,phoneme_accuracy,viseme_accuracy\n";
  for (int v : views) {
    CheckStamp(ctx, PosteriorsDir(ctx, v), "posteriors for view " + ViewName(v), "posteriors",
               cfg.Hash(Stage::kPosteriors));
    std::vector<int> labels, preds;
    for (const auto& u : ForView(LoadSplit(ctx, "test"), v)) {
      if (!u.frame_labels) continue;
      const Matrix post =
          ReadArtifact(PosteriorsDir(ctx, v) / (u.id + ".feat"), "posteriors", "posteriors");
      const auto p = lstm::Predict(post);
      labels.insert(labels.end(), u.frame_labels->begin(), u.frame_labels->end());
      preds.insert(preds.end(), p.begin(), p.end());
    }
    if (labels.empty()) continue;
    FrameScore fs_row;
    fs_row.view = v;
    fs_row.frames = labels.size();
    fs_row.phoneme_accuracy = scoring::FrameAccuracy(labels, preds);
    fs_row.viseme_accuracy = visemes ? scoring::FrameAccuracy(labels, preds, &*visemes) : -1.0;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%d,%zu,%.2f,%.2f\n", v, fs_row.frames,
                  fs_row.phoneme_accuracy, fs_row.viseme_accuracy);
    frames_csv += buf;
    result.frames.push_back(fs_row);
  }

  const fs::path dir = ctx.out / "score";
  WriteTextFile(dir / "results.csv", result.report.ToCsv());
  std::string text = result.report.ToText();
  for (const auto& f : result.frames) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "frame accuracy view %d: phoneme %.2f%%, viseme %.2f%% (%zu frames)\n",
                  f.view, f.phoneme_accuracy, f.viseme_accuracy, f.frames);
    text += buf;
  }
  WriteTextFile(dir / "report.txt", text);
  WriteTextFile(dir / "frames.csv", frames_csv);
  Log(ctx, "score: " + std::to_string(utts.size()) + " utterances, " +
               std::to_string(speakers.size()) + " speakers");
  return result;
}

ScoreResult RunAll(const Context& ctx) {
  const auto views = ConfiguredViews(ctx);
  for (int v : views) {
    LearnFilters(ctx, v);
    Extract(ctx, v);
    TrainLstm(ctx, v);
    Posteriors(ctx, v);
  }
  if (views.size() == 1) {
    Tandem(ctx, views.front());
  } else {
    Fuse(ctx);
  }
  TrainHmm(ctx);
  Decode(ctx, "test");
  return Score(ctx);
}

OutputLock::OutputLock(const fs::path& out_dir) : path_(out_dir / ".lock") {
  fs::create_directories(out_dir);
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST) {
      Fail(ErrorKind::kIo, "output directory " + out_dir.string() +
                               " is locked by another run (remove " + path_.string() +
                               " if that run is gone)");
    }
    Fail(ErrorKind::kIo, "cannot create " + path_.string() + ": " + std::strerror(errno));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

}  // namespace lipread::pipeline
