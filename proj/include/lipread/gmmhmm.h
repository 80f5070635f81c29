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

#ifndef LIPREAD_GMMHMM_H_
#define LIPREAD_GMMHMM_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lipread/matrix.h"

namespace lipread::gmmhmm {

// Diagonal-covariance Gaussian mixture.
class GaussianMixture {
 public:
  GaussianMixture() = default;
  GaussianMixture(std::vector<double> weights, Matrix means, Matrix variances);

  int components() const { return static_cast<int>(weights_.size()); }
  int dim() const { return static_cast<int>(means_.cols()); }
  const std::vector<double>& weights() const { return weights_; }
  const Matrix& means() const { return means_; }
  const Matrix& variances() const { return variances_; }

  // log sum_k w_k N(x; mu_k, diag var_k).
  double LogPdf(std::span<const double> x) const;
  // log w_k + log N(x; mu_k, diag var_k) for every component.
  void ComponentLogPdf(std::span<const double> x, std::span<double> out) const;

  // Total log-likelihood of the rows of `data`.
  double LogLikelihood(const Matrix& data) const;

  bool operator==(const GaussianMixture& o) const {
    return weights_ == o.weights_ && means_ == o.means_ && variances_ == o.variances_;
  }

 private:
  void Refresh();

  std::vector<double> weights_;
  Matrix means_;      // K x M
  Matrix variances_;  // K x M
  std::vector<double> log_consts_;  // log w_k - 0.5 sum_d log(2 pi var_kd)
  Matrix inv_var_;
};

// Per-dimension variance of the rows of `data` (divisor N).
std::vector<double> DimensionVariance(const Matrix& data);
std::vector<double> VarianceFloor(const Matrix& data, double ratio);

// Maximum-likelihood single Gaussian with floored variances.
GaussianMixture SingleGaussian(const Matrix& data, std::span<const double> var_floor);

// Seeded k-means++ means, global variance, uniform weights.
GaussianMixture KMeansPlusPlusInit(const Matrix& data, int K, std::uint64_t seed,
                                   std::span<const double> var_floor);

// One EM iteration in the log domain. Returns the data log-likelihood under
// the parameters before the update. Components with no responsibility are
// re-seeded at the worst-explained point.
double EmStep(GaussianMixture& gmm, const Matrix& data, std::span<const double> var_floor);

struct EmOptions {
  int iterations = 20;
  std::uint64_t seed = 1;
  double floor_ratio = 1e-4;
};

// k-means++ initialization followed by `iterations` EM steps. `trace`
// receives the log-likelihood before every step and after the last one.
GaussianMixture FitGmm(const Matrix& data, int K, const EmOptions& options,
                       std::vector<double>* trace = nullptr);

// Splits components (heaviest first) into mu +- 0.2 sigma pairs with halved
// weights until there are min(2K, target) components.
GaussianMixture SplitMixtures(const GaussianMixture& gmm, int target);

// 1, 2, 4, ... doubling, capped at `max_components` (1 -> 2 -> 4 -> 8 -> 15).
std::vector<int> MixtureSchedule(int max_components);

// Whole-word left-to-right HMM: emitting states with self and next
// transitions only.
struct WordHmm {
  std::string word;
  std::vector<GaussianMixture> states;
  std::vector<double> log_self;  // per state
  std::vector<double> log_next;  // per state; the last entry is the exit

  int n_states() const { return static_cast<int>(states.size()); }
  // (n+2) x (n+2) log matrix over {enter, s1..sn, exit}.
  Matrix TransitionMatrix() const;
};

struct ModelSet {
  std::vector<WordHmm> words;
  int states_per_word = 4;
  std::uint64_t seed = 0;

  // Index of `word` or -1.
  int Find(const std::string& word) const;
  int Require(const std::string& word) const;
  int max_components() const;
};

struct Grammar {
  enum class Mode { kPhraseList, kWordLoop };
  Mode mode = Mode::kPhraseList;
  std::vector<std::vector<std::string>> phrases;
  std::vector<std::string> lexicon;  // word-loop vocabulary
  double word_penalty = 0.0;         // log-domain, added per word in word-loop

  static Grammar PhraseList(std::vector<std::vector<std::string>> phrases);
  static Grammar WordLoop(std::vector<std::string> lexicon, double word_penalty = 0.0);
};

// Per-frame (word position, state) path.
struct Alignment {
  std::vector<int> word;
  std::vector<int> state;

  std::size_t size() const { return word.size(); }
};

// Log emission density of every state of every model word, per frame.
// Row index is word * states_per_word + state.
struct EmissionTable {
  std::size_t frames = 0;
  int states_per_word = 0;
  Matrix values;  // (words * states) x T

  double at(int word, int state, std::size_t t) const {
    return values(static_cast<std::size_t>(word * states_per_word + state), t);
  }
};
EmissionTable ComputeEmissions(const ModelSet& models, const Matrix& observations);

struct DecodeResult {
  int phrase = -1;  // phrase index in phrase-list mode
  std::vector<std::string> words;
  double log_score = 0.0;
  Alignment alignment;
};

DecodeResult ViterbiDecode(const ModelSet& models, const Grammar& grammar,
                           const EmissionTable& emissions);
DecodeResult ViterbiDecode(const ModelSet& models, const Grammar& grammar,
                           const Matrix& observations);

struct ForcedAlignment {
  Alignment alignment;
  double log_score = 0.0;
};
ForcedAlignment ForceAlign(const ModelSet& models, std::span<const std::string> words,
                           const EmissionTable& emissions);
ForcedAlignment ForceAlign(const ModelSet& models, std::span<const std::string> words,
                           const Matrix& observations);

struct TrainOptions {
  int states_per_word = 4;
  int max_mixtures = 15;
  int max_realign = 20;
  double tolerance = 1e-4;  // relative log-likelihood improvement to stop
  int passes_per_split = 4;
  double var_floor_ratio = 1e-4;
  double transition_floor = 1e-5;
  std::uint64_t seed = 1;
};

struct TrainingUtterance {
  const Matrix* observations = nullptr;
  std::vector<std::string> words;
};

struct PassRecord {
  int pass = 0;
  double loglik = 0.0;  // total aligned log-likelihood at the start of the pass
  int components = 0;
};

struct TrainReport {
  std::vector<PassRecord> passes;
  std::vector<std::string> warnings;

  // pass,loglik,components
  std::string ToCsv() const;
};

// Flat start, Viterbi re-estimation to convergence, then mixture splitting
// with re-estimation passes after each split.
ModelSet EmbeddedTrain(std::span<const TrainingUtterance> data, const TrainOptions& options,
                       TrainReport* report = nullptr);

// Text model format; round-trips exactly.
std::string SerializeModels(const ModelSet& models, const std::string& config_hash);
void SaveModels(const std::filesystem::path& path, const ModelSet& models,
                const std::string& config_hash);
ModelSet LoadModels(const std::filesystem::path& path, std::string* config_hash = nullptr);

}  // namespace lipread::gmmhmm

#endif  // LIPREAD_GMMHMM_H_
