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

// lipread: command-line front end for the lipreading pipeline.
//
//   lipread synth --out corpus --speakers 8
//   lipread --config corpus/pipeline.cfg --out run learn-filters
//   lipread --config corpus/pipeline.cfg --out run extract
//   ...
//
// Exit status is 0 on success. Failures print one line
// "error: <category>: <message>" to stderr and exit 2 for usage errors,
// 1 otherwise.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lipread/config.h"
#include "lipread/dataio.h"
#include "lipread/error.h"
#include "lipread/parallel.h"
#include "lipread/pipeline.h"

namespace {

namespace fs = std::filesystem;
using lipread::ErrorKind;
using lipread::Fail;

std::string OneLine(std::string text) {
  for (char& c : text) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return text;
}

int Report(const std::string& category, const std::string& message, int code) {
  std::cerr << "error: " << category << ": " << OneLine(message) << '\n';
  return code;
}

// A starting config for a synthesized corpus; paths are relative to it.
std::string SynthConfig(const std::vector<int>& views) {
  lipread::PipelineConfig config;
  config.views = views;
  config.train_manifest = "train.tsv";
  config.test_manifest = "test.tsv";
  config.viseme_map = "visemes.map";
  config.grammar = "grammar.txt";
  return config.ToText();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visual speech recognition: PCANet features, LSTM posteriors, tandem GMM-HMM"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string config_path;
  std::string out_dir;
  bool force = false;
  int threads = 0;
  app.add_option("--config", config_path, "pipeline config file");
  app.add_option("--out", out_dir, "output directory")->required();
  app.add_flag("--force", force, "consume artifacts produced under a different config hash");
  app.add_option("--threads", threads, "worker threads (default: LIPREAD_THREADS or all cores)")
      ->check(CLI::PositiveNumber);

  lipread::SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "render a synthetic corpus");
  synth_cmd->add_option("--seed", synth.seed, "corpus seed");
  synth_cmd->add_option("--speakers", synth.n_speakers, "speaker count");
  synth_cmd->add_option("--phrases", synth.n_phrases, "phrase count (at most 10)");
  synth_cmd->add_option("--reps", synth.reps, "repetitions per phrase");
  synth_cmd->add_option("--noise", synth.noise_level, "pixel noise amplitude, fraction of 255");
  synth_cmd->add_option("--views", synth.views, "views to render, degrees")->delimiter(',');

  std::optional<int> view;
  std::string split = "test";
  struct StageCommand {
    CLI::App* cmd;
    bool per_view;
  };
  std::vector<StageCommand> stages;
  auto add_stage = [&](const std::string& name, const std::string& help, bool per_view) {
    auto* cmd = app.add_subcommand(name, help);
    if (per_view) cmd->add_option("--view", view, "single view to process (default: all configured)");
    stages.push_back({cmd, per_view});
    return cmd;
  };
  add_stage("learn-filters", "learn the two PCA filter banks", true);
  add_stage("extract", "extract per-frame block-histogram features", true);
  add_stage("train-lstm", "train the frame-level phoneme LSTM", true);
  add_stage("posteriors", "compute per-frame phoneme posteriors", true);
  add_stage("tandem", "build single-view tandem features", true);
  add_stage("fuse", "concatenate the configured views into tandem features", false);
  add_stage("train-hmm", "train word GMM-HMMs on tandem features", false);
  add_stage("decode", "decode utterances to transcripts", false)
      ->add_option("--split", split, "train or test");
  add_stage("score", "score test hypotheses", false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return Report("argument", e.what(), 2);
  }

  try {
    if (threads > 0) lipread::SetNumThreads(threads);

    if (synth_cmd->parsed()) {
      const auto corpus = lipread::SynthesizeCorpus(synth, out_dir);
      auto views = synth.views;
      lipread::WriteTextFile(fs::path(out_dir) / "pipeline.cfg", SynthConfig(views));
      std::cout << "synth: " << synth.n_speakers << " speakers, " << synth.n_phrases
                << " phrases x " << synth.reps << " reps, " << views.size() << " view(s); "
                << corpus.train_utterances << " train / " << corpus.test_utterances
                << " test utterances per view\n"
                << "  train manifest " << corpus.train_manifest.string() << '\n'
                << "  test manifest  " << corpus.test_manifest.string() << '\n'
                << "  config         " << (fs::path(out_dir) / "pipeline.cfg").string() << '\n';
      return 0;
    }

    if (config_path.empty()) Fail(ErrorKind::kArgument, "--config is required for pipeline stages");
    lipread::pipeline::Context ctx;
    ctx.config = lipread::PipelineConfig::Load(config_path);
    ctx.out = out_dir;
    ctx.force = force;
    ctx.log = &std::cout;
    lipread::pipeline::OutputLock lock(ctx.out);
    lipread::pipeline::WriteResolvedConfig(ctx);

    std::vector<int> views = ctx.config.views;
    if (view) {
      if (!lipread::IsKnownView(*view)) {
        Fail(ErrorKind::kArgument, "unknown view " + std::to_string(*view));
      }
      views = {*view};
    }
    const std::string name = app.get_subcommands().front()->get_name();
    namespace pl = lipread::pipeline;
    for (int v : views) {
      if (name == "learn-filters") pl::LearnFilters(ctx, v);
      if (name == "extract") pl::Extract(ctx, v);
      if (name == "train-lstm") pl::TrainLstm(ctx, v);
      if (name == "posteriors") pl::Posteriors(ctx, v);
      if (name == "tandem") pl::Tandem(ctx, v);
    }
    if (name == "fuse") pl::Fuse(ctx);
    if (name == "train-hmm") pl::TrainHmm(ctx);
    if (name == "decode") pl::Decode(ctx, split);
    if (name == "score") std::cout << pl::Score(ctx).report.ToText();
    return 0;
  } catch (const lipread::Error& e) {
    return Report(e.category(), e.what(), e.kind() == ErrorKind::kArgument ? 2 : 1);
  } catch (const std::filesystem::filesystem_error& e) {
    return Report("io", e.what(), 1);
  } catch (const std::exception& e) {
    return Report("internal", e.what(), 1);
  }
}
