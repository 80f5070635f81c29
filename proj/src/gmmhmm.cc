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

#include "lipread/gmmhmm.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "lipread/dataio.h"
#include "lipread/error.h"
#include "lipread/parallel.h"
#include "lipread/random.h"

namespace lipread::gmmhmm {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMinVariance = 1e-12;
constexpr double kEmptyComponent = 1e-10;

double LogSumExp(std::span<const double> v) {
  double top = kNegInf;
  for (double x : v) top = std::max(top, x);
  if (top == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - top);
  return top + std::log(s);
}

}  // namespace

GaussianMixture::GaussianMixture(std::vector<double> weights, Matrix means, Matrix variances)
    : weights_(std::move(weights)), means_(std::move(means)), variances_(std::move(variances)) {
  if (weights_.empty() || means_.rows() != weights_.size() ||
      variances_.rows() != weights_.size() || variances_.cols() != means_.cols()) {
    Fail(ErrorKind::kDimension, "inconsistent mixture shapes");
  }
  for (double v : variances_.values()) {
    if (!(v > 0.0)) Fail(ErrorKind::kNumeric, "mixture variance must be positive");
  }
  Refresh();
}

void GaussianMixture::Refresh() {
  const std::size_t K = weights_.size();
  const std::size_t M = means_.cols();
  log_consts_.assign(K, 0.0);
  inv_var_ = Matrix(K, M);
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  for (std::size_t k = 0; k < K; ++k) {
    double c = weights_[k] > 0.0 ? std::log(weights_[k]) : kNegInf;
    for (std::size_t d = 0; d < M; ++d) {
      c -= 0.5 * (log_2pi + std::log(variances_(k, d)));
      inv_var_(k, d) = 1.0 / variances_(k, d);
    }
    log_consts_[k] = c;
  }
}

void GaussianMixture::ComponentLogPdf(std::span<const double> x, std::span<double> out) const {
  const std::size_t M = means_.cols();
  if (x.size() != M) {
    Fail(ErrorKind::kDimension, "observation has dimension " + std::to_string(x.size()) +
                                    ", mixture expects " + std::to_string(M));
  }
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    const double* mu = means_.row(k).data();
    const double* iv = inv_var_.row(k).data();
    double q = 0.0;
    for (std::size_t d = 0; d < M; ++d) {
      const double diff = x[d] - mu[d];
      q += diff * diff * iv[d];
    }
    out[k] = log_consts_[k] - 0.5 * q;
  }
}

double GaussianMixture::LogPdf(std::span<const double> x) const {
  if (weights_.size() == 1) {
    double one;
    ComponentLogPdf(x, {&one, 1});
    return one;
  }
  std::vector<double> comp(weights_.size());
  ComponentLogPdf(x, comp);
  return LogSumExp(comp);
}

double GaussianMixture::LogLikelihood(const Matrix& data) const {
  double total = 0.0;
  for (std::size_t n = 0; n < data.rows(); ++n) total += LogPdf(data.row(n));
  return total;
}

std::vector<double> DimensionVariance(const Matrix& data) {
  const std::size_t M = data.cols();
  std::vector<double> mean(M, 0.0), var(M, 0.0);
  if (data.rows() == 0) return var;
  for (std::size_t n = 0; n < data.rows(); ++n) {
    for (std::size_t d = 0; d < M; ++d) mean[d] += data(n, d);
  }
  for (double& m : mean) m /= static_cast<double>(data.rows());
  for (std::size_t n = 0; n < data.rows(); ++n) {
    for (std::size_t d = 0; d < M; ++d) {
      const double diff = data(n, d) - mean[d];
      var[d] += diff * diff;
    }
  }
  for (double& v : var) v /= static_cast<double>(data.rows());
  return var;
}

std::vector<double> VarianceFloor(const Matrix& data, double ratio) {
  auto floor = DimensionVariance(data);
  for (double& v : floor) v = std::max(v * ratio, kMinVariance);
  return floor;
}

GaussianMixture SingleGaussian(const Matrix& data, std::span<const double> var_floor) {
  if (data.rows() == 0) Fail(ErrorKind::kArgument, "cannot fit a Gaussian to no data");
  const std::size_t M = data.cols();
  Matrix mean(1, M), var(1, M);
  for (std::size_t n = 0; n < data.rows(); ++n) {
    for (std::size_t d = 0; d < M; ++d) mean(0, d) += data(n, d);
  }
  for (double& m : mean.values()) m /= static_cast<double>(data.rows());
  for (std::size_t n = 0; n < data.rows(); ++n) {
    for (std::size_t d = 0; d < M; ++d) {
      const double diff = data(n, d) - mean(0, d);
      var(0, d) += diff * diff;
    }
  }
  for (std::size_t d = 0; d < M; ++d) {
    var(0, d) = std::max(var(0, d) / static_cast<double>(data.rows()), var_floor[d]);
  }
  return GaussianMixture({1.0}, std::move(mean), std::move(var));
}

GaussianMixture KMeansPlusPlusInit(const Matrix& data, int K, std::uint64_t seed,
                                   std::span<const double> var_floor) {
  const std::size_t N = data.rows();
  const std::size_t M = data.cols();
  if (K < 1 || N < static_cast<std::size_t>(K)) {
    Fail(ErrorKind::kArgument, "need at least K=" + std::to_string(K) + " points, got " +
                                   std::to_string(N));
  }
  Rng rng(seed);
  std::vector<std::size_t> centers = {static_cast<std::size_t>(rng.Below(N))};
  std::vector<double> dist(N, std::numeric_limits<double>::infinity());
  while (centers.size() < static_cast<std::size_t>(K)) {
    const auto c = data.row(centers.back());
    double total = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      double d2 = 0.0;
      const auto x = data.row(n);
      for (std::size_t d = 0; d < M; ++d) d2 += (x[d] - c[d]) * (x[d] - c[d]);
      dist[n] = std::min(dist[n], d2);
      total += dist[n];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = rng.Uniform() * total;
      pick = N - 1;
      for (std::size_t n = 0; n < N; ++n) {
        target -= dist[n];
        if (target < 0.0 && dist[n] > 0.0) {
          pick = n;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(rng.Below(N));
    }
    centers.push_back(pick);
  }
  const auto global = DimensionVariance(data);
  Matrix means(static_cast<std::size_t>(K), M), vars(static_cast<std::size_t>(K), M);
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const auto x = data.row(centers[k]);
    std::copy(x.begin(), x.end(), means.row(k).begin());
    for (std::size_t d = 0; d < M; ++d) vars(k, d) = std::max(global[d], var_floor[d]);
  }
  return GaussianMixture(std::vector<double>(static_cast<std::size_t>(K), 1.0 / K),
                         std::move(means), std::move(vars));
}

double EmStep(GaussianMixture& gmm, const Matrix& data, std::span<const double> var_floor) {
  const std::size_t N = data.rows();
  const auto K = static_cast<std::size_t>(gmm.components());
  const std::size_t M = data.cols();
  if (N == 0) Fail(ErrorKind::kArgument, "EM step on empty data");
  if (M != static_cast<std::size_t>(gmm.dim()) || var_floor.size() != M) {
    Fail(ErrorKind::kDimension, "EM data dimension does not match the mixture");
  }

  Matrix resp(N, K);
  std::vector<double> point_ll(N);
  double loglik = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    auto r = resp.row(n);
    gmm.ComponentLogPdf(data.row(n), r);
    const double lse = LogSumExp(r);
    point_ll[n] = lse;
    loglik += lse;
    for (double& v : r) v = std::exp(v - lse);
  }

  std::vector<double> occupancy(K, 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t k = 0; k < K; ++k) occupancy[k] += resp(n, k);
  }
  Matrix means(K, M), vars(K, M);
  std::vector<double> weights(K);
  std::vector<std::size_t> empty;
  for (std::size_t k = 0; k < K; ++k) {
    if (occupancy[k] < kEmptyComponent) {
      empty.push_back(k);
      continue;
    }
    weights[k] = occupancy[k] / static_cast<double>(N);
    auto mu = means.row(k);
    for (std::size_t n = 0; n < N; ++n) {
      const double g = resp(n, k);
      if (g == 0.0) continue;
      const auto x = data.row(n);
      for (std::size_t d = 0; d < M; ++d) mu[d] += g * x[d];
    }
    for (double& v : mu) v /= occupancy[k];
    auto var = vars.row(k);
    for (std::size_t n = 0; n < N; ++n) {
      const double g = resp(n, k);
      if (g == 0.0) continue;
      const auto x = data.row(n);
      for (std::size_t d = 0; d < M; ++d) var[d] += g * (x[d] - mu[d]) * (x[d] - mu[d]);
    }
    for (std::size_t d = 0; d < M; ++d) var[d] = std::max(var[d] / occupancy[k], var_floor[d]);
  }
  if (!empty.empty()) {
    std::vector<std::size_t> worst(N);
    std::iota(worst.begin(), worst.end(), 0);
    std::stable_sort(worst.begin(), worst.end(),
                     [&](std::size_t a, std::size_t b) { return point_ll[a] < point_ll[b]; });
    const auto global = DimensionVariance(data);
    for (std::size_t e = 0; e < empty.size(); ++e) {
      const std::size_t k = empty[e];
      const auto x = data.row(worst[e % N]);
      std::copy(x.begin(), x.end(), means.row(k).begin());
      for (std::size_t d = 0; d < M; ++d) vars(k, d) = std::max(global[d], var_floor[d]);
      weights[k] = 1.0 / static_cast<double>(N);
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (double& w : weights) w /= total;
  }
  gmm = GaussianMixture(std::move(weights), std::move(means), std::move(vars));
  return loglik;
}

GaussianMixture FitGmm(const Matrix& data, int K, const EmOptions& options,
                       std::vector<double>* trace) {
  const auto floor = VarianceFloor(data, options.floor_ratio);
  GaussianMixture gmm = KMeansPlusPlusInit(data, K, options.seed, floor);
  if (trace) trace->clear();
  for (int it = 0; it < options.iterations; ++it) {
    const double ll = EmStep(gmm, data, floor);
    if (trace) trace->push_back(ll);
  }
  if (trace) trace->push_back(gmm.LogLikelihood(data));
  return gmm;
}

GaussianMixture SplitMixtures(const GaussianMixture& gmm, int target) {
  const int K = gmm.components();
  const int goal = std::min(2 * K, std::max(target, K));
  const int n_split = goal - K;
  std::vector<int> order(static_cast<std::size_t>(K));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return gmm.weights()[a] > gmm.weights()[b]; });
  std::vector<bool> split(static_cast<std::size_t>(K), false);
  for (int i = 0; i < n_split; ++i) split[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;

  const std::size_t M = static_cast<std::size_t>(gmm.dim());
  std::vector<double> weights;
  Matrix means(static_cast<std::size_t>(goal), M), vars(static_cast<std::size_t>(goal), M);
  std::size_t out = 0;
  for (std::size_t k = 0; k < static_cast<std::size_t>(K); ++k) {
    const auto mu = gmm.means().row(k);
    const auto var = gmm.variances().row(k);
    if (!split[k]) {
      weights.push_back(gmm.weights()[k]);
      std::copy(mu.begin(), mu.end(), means.row(out).begin());
      std::copy(var.begin(), var.end(), vars.row(out).begin());
      ++out;
      continue;
    }
    for (double sign : {1.0, -1.0}) {
      weights.push_back(0.5 * gmm.weights()[k]);
      for (std::size_t d = 0; d < M; ++d) {
        means(out, d) = mu[d] + sign * 0.2 * std::sqrt(var[d]);
        vars(out, d) = var[d];
      }
      ++out;
    }
  }
  return GaussianMixture(std::move(weights), std::move(means), std::move(vars));
}

std::vector<int> MixtureSchedule(int max_components) {
  if (max_components < 1) Fail(ErrorKind::kArgument, "max_components must be >= 1");
  std::vector<int> schedule = {1};
  while (schedule.back() < max_components) {
    schedule.push_back(std::min(2 * schedule.back(), max_components));
  }
  return schedule;
}

Matrix WordHmm::TransitionMatrix() const {
  const auto n = static_cast<std::size_t>(n_states());
  Matrix m(n + 2, n + 2, kNegInf);
  m(0, 1) = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    m(s + 1, s + 1) = log_self[s];
    m(s + 1, s + 2) = log_next[s];
  }
  return m;
}

int ModelSet::Find(const std::string& word) const {
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (words[i].word == word) return static_cast<int>(i);
  }
  return -1;
}

int ModelSet::Require(const std::string& word) const {
  const int i = Find(word);
  if (i < 0) Fail(ErrorKind::kArgument, "no model for word '" + word + "'");
  return i;
}

int ModelSet::max_components() const {
  int k = 0;
  for (const auto& w : words) {
    for (const auto& s : w.states) k = std::max(k, s.components());
  }
  return k;
}

Grammar Grammar::PhraseList(std::vector<std::vector<std::string>> phrases) {
  if (phrases.empty()) Fail(ErrorKind::kArgument, "phrase-list grammar needs phrases");
  for (const auto& p : phrases) {
    if (p.empty()) Fail(ErrorKind::kArgument, "empty phrase in grammar");
  }
  Grammar g;
  g.mode = Mode::kPhraseList;
  g.phrases = std::move(phrases);
  return g;
}

Grammar Grammar::WordLoop(std::vector<std::string> lexicon, double word_penalty) {
  if (lexicon.empty()) Fail(ErrorKind::kArgument, "word-loop grammar needs a lexicon");
  Grammar g;
  g.mode = Mode::kWordLoop;
  g.lexicon = std::move(lexicon);
  g.word_penalty = word_penalty;
  return g;
}

EmissionTable ComputeEmissions(const ModelSet& models, const Matrix& observations) {
  EmissionTable table;
  table.frames = observations.rows();
  table.states_per_word = models.states_per_word;
  const auto S = static_cast<std::size_t>(models.states_per_word);
  table.values = Matrix(models.words.size() * S, observations.rows());
  for (std::size_t w = 0; w < models.words.size(); ++w) {
    if (models.words[w].states.size() != S) {
      Fail(ErrorKind::kDimension, "word '" + models.words[w].word + "' has wrong state count");
    }
    for (std::size_t s = 0; s < S; ++s) {
      auto row = table.values.row(w * S + s);
      const auto& gmm = models.words[w].states[s];
      for (std::size_t t = 0; t < observations.rows(); ++t) row[t] = gmm.LogPdf(observations.row(t));
    }
  }
  return table;
}

namespace {

struct ChainState {
  int word_pos;
  int state;
  const double* emissions;  // T values
  double log_self;
  double log_next;
};

std::vector<ChainState> BuildChain(const ModelSet& models, std::span<const std::string> words,
                                   const EmissionTable& emissions) {
  std::vector<ChainState> chain;
  const int S = models.states_per_word;
  for (std::size_t p = 0; p < words.size(); ++p) {
    const int w = models.Require(words[p]);
    const auto& hmm = models.words[static_cast<std::size_t>(w)];
    for (int s = 0; s < S; ++s) {
      chain.push_back({static_cast<int>(p), s,
                       emissions.values.row(static_cast<std::size_t>(w * S + s)).data(),
                       hmm.log_self[static_cast<std::size_t>(s)],
                       hmm.log_next[static_cast<std::size_t>(s)]});
    }
  }
  return chain;
}

// Viterbi through a linear chain that starts in its first state and leaves
// through the exit of its last state. Ties prefer the lower predecessor.
ForcedAlignment ChainViterbi(const std::vector<ChainState>& chain, std::size_t T) {
  const std::size_t S = chain.size();
  ForcedAlignment result;
  result.log_score = kNegInf;
  if (T < S || S == 0) return result;
  std::vector<double> prev(S, kNegInf), cur(S, kNegInf);
  std::vector<std::uint8_t> advanced(T * S, 0);
  prev[0] = chain[0].emissions[0];
  for (std::size_t t = 1; t < T; ++t) {
    // State s is reachable at t only if s <= t, and can still finish only if
    // S - 1 - s <= T - 1 - t.
    const std::size_t lo = (S - 1 > T - 1 - t) ? S - 1 - (T - 1 - t) : 0;
    const std::size_t hi = std::min(S - 1, t);
    std::fill(cur.begin(), cur.end(), kNegInf);
    for (std::size_t s = lo; s <= hi; ++s) {
      const double stay = prev[s] + chain[s].log_self;
      double best = stay;
      std::uint8_t adv = 0;
      if (s > 0) {
        const double move = prev[s - 1] + chain[s - 1].log_next;
        if (move >= stay) {
          best = move;
          adv = 1;
        }
      }
      cur[s] = best + chain[s].emissions[t];
      advanced[t * S + s] = adv;
    }
    std::swap(prev, cur);
  }
  const double final_score = prev[S - 1] + chain[S - 1].log_next;
  if (final_score == kNegInf || std::isnan(final_score)) return result;
  result.log_score = final_score;
  result.alignment.word.resize(T);
  result.alignment.state.resize(T);
  std::size_t s = S - 1;
  for (std::size_t t = T; t-- > 0;) {
    result.alignment.word[t] = chain[s].word_pos;
    result.alignment.state[t] = chain[s].state;
    if (t > 0 && advanced[t * S + s]) --s;
  }
  return result;
}

DecodeResult WordLoopDecode(const ModelSet& models, const Grammar& grammar,
                            const EmissionTable& emissions) {
  const std::size_t T = emissions.frames;
  const auto S = static_cast<std::size_t>(models.states_per_word);
  std::vector<int> word_ids;
  for (const auto& w : grammar.lexicon) word_ids.push_back(models.Require(w));
  const std::size_t W = word_ids.size();
  const std::size_t N = W * S;
  const double entry = -std::log(static_cast<double>(W)) + grammar.word_penalty;

  auto emis = [&](std::size_t node, std::size_t t) {
    return emissions.at(word_ids[node / S], static_cast<int>(node % S), t);
  };
  auto hmm = [&](std::size_t node) -> const WordHmm& {
    return models.words[static_cast<std::size_t>(word_ids[node / S])];
  };

  std::vector<double> prev(N, kNegInf), cur(N, kNegInf);
  std::vector<std::uint32_t> back(T * N, 0);
  // Set where a word starts; with one state per word a re-entry of the same
  // word has the same predecessor node as a self-loop.
  std::vector<std::uint8_t> entered(T * N, 0);
  for (std::size_t w = 0; w < W; ++w) prev[w * S] = entry + emis(w * S, 0);
  for (std::size_t t = 1; t < T; ++t) {
    // Best word exit at t-1, ties to the lowest node index.
    double best_exit = kNegInf;
    std::size_t best_exit_node = 0;
    for (std::size_t w = 0; w < W; ++w) {
      const std::size_t last = w * S + S - 1;
      const double v = prev[last] + hmm(last).log_next[S - 1];
      if (v > best_exit) {
        best_exit = v;
        best_exit_node = last;
      }
    }
    for (std::size_t node = 0; node < N; ++node) {
      const std::size_t s = node % S;
      const auto& model = hmm(node);
      double best;
      std::size_t from;
      if (s == 0) {
        const double stay = prev[node] + model.log_self[0];
        const double enter = best_exit + entry;
        if (enter > stay || (enter == stay && best_exit_node < node)) {
          best = enter;
          from = best_exit_node;
          entered[t * N + node] = 1;
        } else {
          best = stay;
          from = node;
        }
      } else {
        const double stay = prev[node] + model.log_self[s];
        const double move = prev[node - 1] + model.log_next[s - 1];
        if (move >= stay) {
          best = move;
          from = node - 1;
        } else {
          best = stay;
          from = node;
        }
      }
      cur[node] = best + emis(node, t);
      back[t * N + node] = static_cast<std::uint32_t>(from);
    }
    std::swap(prev, cur);
  }
  double best = kNegInf;
  std::size_t end = 0;
  for (std::size_t w = 0; w < W; ++w) {
    const std::size_t last = w * S + S - 1;
    const double v = prev[last] + hmm(last).log_next[S - 1];
    if (v > best) {
      best = v;
      end = last;
    }
  }
  if (best == kNegInf) Fail(ErrorKind::kNoPath, "no path through the word loop");
  DecodeResult result;
  result.log_score = best;
  std::vector<std::size_t> nodes(T);
  std::size_t node = end;
  for (std::size_t t = T; t-- > 0;) {
    nodes[t] = node;
    if (t > 0) node = back[t * N + node];
  }
  result.alignment.word.resize(T);
  result.alignment.state.resize(T);
  int pos = -1;
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t s = nodes[t] % S;
    const bool new_word = t == 0 || entered[t * N + nodes[t]];
    if (new_word) {
      ++pos;
      result.words.push_back(grammar.lexicon[nodes[t] / S]);
    }
    result.alignment.word[t] = pos;
    result.alignment.state[t] = static_cast<int>(s);
  }
  return result;
}

}  // namespace

DecodeResult ViterbiDecode(const ModelSet& models, const Grammar& grammar,
                           const EmissionTable& emissions) {
  if (emissions.frames == 0) Fail(ErrorKind::kNoPath, "no frames to decode");
  if (grammar.mode == Grammar::Mode::kWordLoop) return WordLoopDecode(models, grammar, emissions);

  DecodeResult best;
  best.log_score = kNegInf;
  for (std::size_t p = 0; p < grammar.phrases.size(); ++p) {
    const auto chain = BuildChain(models, grammar.phrases[p], emissions);
    ForcedAlignment fa = ChainViterbi(chain, emissions.frames);
    if (fa.log_score > best.log_score) {
      best.phrase = static_cast<int>(p);
      best.words = grammar.phrases[p];
      best.log_score = fa.log_score;
      best.alignment = std::move(fa.alignment);
    }
  }
  if (best.phrase < 0) {
    Fail(ErrorKind::kNoPath, "no path: " + std::to_string(emissions.frames) +
                                 " frames are too few for every phrase in the grammar");
  }
  return best;
}

DecodeResult ViterbiDecode(const ModelSet& models, const Grammar& grammar,
                           const Matrix& observations) {
  return ViterbiDecode(models, grammar, ComputeEmissions(models, observations));
}

ForcedAlignment ForceAlign(const ModelSet& models, std::span<const std::string> words,
                           const EmissionTable& emissions) {
  if (words.empty()) Fail(ErrorKind::kArgument, "forced alignment needs at least one word");
  ForcedAlignment fa = ChainViterbi(BuildChain(models, words, emissions), emissions.frames);
  if (fa.log_score == kNegInf) {
    Fail(ErrorKind::kNoPath, "no path: " + std::to_string(emissions.frames) + " frames for " +
                                 std::to_string(words.size()) + " words of " +
                                 std::to_string(models.states_per_word) + " states");
  }
  return fa;
}

ForcedAlignment ForceAlign(const ModelSet& models, std::span<const std::string> words,
                           const Matrix& observations) {
  return ForceAlign(models, words, ComputeEmissions(models, observations));
}

std::string TrainReport::ToCsv() const {
  std::string out = "pass,loglik,components\n";
  char line[96];
  for (const auto& p : passes) {
    std::snprintf(line, sizeof(line), "%d,%.6f,%d\n", p.pass, p.loglik, p.components);
    out += line;
  }
  return out;
}

namespace {

struct StateStats {
  std::vector<const double*> frames;
  double self = 0.0;
  double next = 0.0;
};

class Trainer {
 public:
  Trainer(std::span<const TrainingUtterance> data, const TrainOptions& options,
          TrainReport* report)
      : data_(data), opt_(options), report_(report) {}

  ModelSet Run() {
    Validate();
    InitModels();
    FlatStart();
    for (int it = 0, last_pass = -1; it < opt_.max_realign; ++it) {
      const double ll = AlignAndReestimate();
      if (last_pass >= 0) {
        const double prev = passes_[static_cast<std::size_t>(last_pass)];
        if (ll - prev < opt_.tolerance * std::abs(prev)) break;
      }
      last_pass = static_cast<int>(passes_.size()) - 1;
    }
    const auto schedule = MixtureSchedule(opt_.max_mixtures);
    for (std::size_t level = 1; level < schedule.size(); ++level) {
      for (auto& w : models_.words) {
        for (auto& s : w.states) s = SplitMixtures(s, schedule[level]);
      }
      for (int p = 0; p < opt_.passes_per_split; ++p) AlignAndReestimate();
    }
    return std::move(models_);
  }

 private:
  void Validate() {
    if (data_.empty()) Fail(ErrorKind::kArgument, "no training utterances");
    if (opt_.states_per_word < 1) Fail(ErrorKind::kArgument, "states_per_word must be >= 1");
    dim_ = data_[0].observations->cols();
    for (const auto& u : data_) {
      if (u.observations == nullptr || u.observations->cols() != dim_) {
        Fail(ErrorKind::kDimension, "training observations disagree in dimension");
      }
      if (u.words.empty()) Fail(ErrorKind::kArgument, "training utterance without transcript");
      if (u.observations->rows() < u.words.size() * static_cast<std::size_t>(opt_.states_per_word)) {
        Fail(ErrorKind::kNoPath, "utterance with " + std::to_string(u.observations->rows()) +
                                     " frames is too short for its " +
                                     std::to_string(u.words.size()) + "-word transcript");
      }
    }
  }

  void InitModels() {
    models_.states_per_word = opt_.states_per_word;
    models_.seed = opt_.seed;
    for (const auto& u : data_) {
      for (const auto& w : u.words) {
        if (models_.Find(w) < 0) {
          WordHmm hmm;
          hmm.word = w;
          models_.words.push_back(std::move(hmm));
        }
      }
    }
    // Global floor over every training frame.
    std::size_t total = 0;
    for (const auto& u : data_) total += u.observations->rows();
    Matrix all(total, dim_);
    std::size_t row = 0;
    for (const auto& u : data_) {
      for (std::size_t t = 0; t < u.observations->rows(); ++t, ++row) {
        std::copy(u.observations->row(t).begin(), u.observations->row(t).end(),
                  all.row(row).begin());
      }
    }
    floor_ = VarianceFloor(all, opt_.var_floor_ratio);
  }

  std::size_t StateIndex(const std::string& word, int state) const {
    return static_cast<std::size_t>(models_.Require(word) * opt_.states_per_word + state);
  }

  void Accumulate(const TrainingUtterance& u, const Alignment& a, std::vector<StateStats>& stats) {
    const std::size_t T = a.size();
    for (std::size_t t = 0; t < T; ++t) {
      auto& st = stats[StateIndex(u.words[static_cast<std::size_t>(a.word[t])], a.state[t])];
      st.frames.push_back(u.observations->row(t).data());
      const bool stays = t + 1 < T && a.word[t + 1] == a.word[t] && a.state[t + 1] == a.state[t];
      (stays ? st.self : st.next) += 1.0;
    }
  }

  void FlatStart() {
    std::vector<StateStats> stats(models_.words.size() * static_cast<std::size_t>(opt_.states_per_word));
    for (const auto& u : data_) {
      const std::size_t T = u.observations->rows();
      const std::size_t S = u.words.size() * static_cast<std::size_t>(opt_.states_per_word);
      Alignment a;
      for (std::size_t t = 0; t < T; ++t) {
        const std::size_t g = t * S / T;
        a.word.push_back(static_cast<int>(g / static_cast<std::size_t>(opt_.states_per_word)));
        a.state.push_back(static_cast<int>(g % static_cast<std::size_t>(opt_.states_per_word)));
      }
      Accumulate(u, a, stats);
    }
    Reestimate(stats, /*flat_start=*/true);
  }

  double AlignAndReestimate() {
    std::vector<ForcedAlignment> aligned(data_.size());
    ParallelFor(data_.size(), [&](std::size_t i) {
      aligned[i] = ForceAlign(models_, data_[i].words, *data_[i].observations);
    });
    double total = 0.0;
    std::vector<StateStats> stats(models_.words.size() * static_cast<std::size_t>(opt_.states_per_word));
    for (std::size_t i = 0; i < data_.size(); ++i) {
      total += aligned[i].log_score;
      Accumulate(data_[i], aligned[i].alignment, stats);
    }
    const int pass = static_cast<int>(passes_.size());
    passes_.push_back(total);
    if (report_) report_->passes.push_back({pass, total, models_.max_components()});
    Reestimate(stats, /*flat_start=*/false);
    return total;
  }

  void Reestimate(std::vector<StateStats>& stats, bool flat_start) {
    const auto S = static_cast<std::size_t>(opt_.states_per_word);
    std::vector<std::string> warnings(stats.size());
    if (flat_start) {
      for (auto& hmm : models_.words) {
        hmm.states.resize(S);
        hmm.log_self.assign(S, std::log(0.5));
        hmm.log_next.assign(S, std::log(0.5));
      }
    }
    ParallelFor(stats.size(), [&](std::size_t g) {
      auto& hmm = models_.words[g / S];
      const std::size_t s = g % S;
      const auto& st = stats[g];
      if (st.frames.empty()) {
        warnings[g] = "word '" + hmm.word + "' state " + std::to_string(s + 1) +
                      " received no frames; keeping previous estimate";
        return;
      }
      Matrix frames(st.frames.size(), dim_);
      for (std::size_t n = 0; n < st.frames.size(); ++n) {
        std::copy(st.frames[n], st.frames[n] + dim_, frames.row(n).begin());
      }
      if (flat_start) {
        hmm.states[s] = SingleGaussian(frames, floor_);
      } else {
        EmStep(hmm.states[s], frames, floor_);
      }
      const double total = st.self + st.next;
      const double self = std::clamp(st.self / total, opt_.transition_floor,
                                     1.0 - opt_.transition_floor);
      hmm.log_self[s] = std::log(self);
      hmm.log_next[s] = std::log(1.0 - self);
    });
    for (auto& w : warnings) {
      if (w.empty()) continue;
      if (flat_start) Fail(ErrorKind::kNumeric, w);
      if (report_) report_->warnings.push_back("pass " + std::to_string(passes_.size() - 1) + ": " + w);
    }
  }

  std::span<const TrainingUtterance> data_;
  TrainOptions opt_;
  TrainReport* report_;
  ModelSet models_;
  std::size_t dim_ = 0;
  std::vector<double> floor_;
  std::vector<double> passes_;
};

}  // namespace

ModelSet EmbeddedTrain(std::span<const TrainingUtterance> data, const TrainOptions& options,
                       TrainReport* report) {
  return Trainer(data, options, report).Run();
}

namespace {

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string SerializeModels(const ModelSet& models, const std::string& config_hash) {
  std::ostringstream out;
  out << "LIPHMM words=" << models.words.size() << " states=" << models.states_per_word
      << " mixtures=" << models.max_components() << " seed=" << models.seed
      << " silence=none priors=uniform config=" << (config_hash.empty() ? "-" : config_hash)
      << '\n';
  for (const auto& w : models.words) {
    out << "WORD " << w.word << '\n';
    for (int s = 0; s < w.n_states(); ++s) {
      const auto& g = w.states[static_cast<std::size_t>(s)];
      out << "STATE " << s + 1 << " COMPONENTS " << g.components() << " DIM " << g.dim() << '\n';
      for (int k = 0; k < g.components(); ++k) {
        out << "WEIGHT " << Num(g.weights()[static_cast<std::size_t>(k)]) << "\nMEAN";
        for (double v : g.means().row(static_cast<std::size_t>(k))) out << ' ' << Num(v);
        out << "\nVAR";
        for (double v : g.variances().row(static_cast<std::size_t>(k))) out << ' ' << Num(v);
        out << '\n';
      }
    }
    const Matrix trans = w.TransitionMatrix();
    out << "TRANSITIONS " << trans.rows() << '\n';
    for (std::size_t r = 0; r < trans.rows(); ++r) {
      for (std::size_t c = 0; c < trans.cols(); ++c) out << (c ? " " : "") << Num(trans(r, c));
      out << '\n';
    }
    out << "END\n";
  }
  return out.str();
}

void SaveModels(const std::filesystem::path& path, const ModelSet& models,
                const std::string& config_hash) {
  WriteTextFile(path, SerializeModels(models, config_hash));
}

ModelSet LoadModels(const std::filesystem::path& path, std::string* config_hash) {
  std::istringstream in(ReadTextFile(path));
  auto fail = [&](const std::string& what) -> void {
    Fail(ErrorKind::kFormat, path.string() + ": " + what);
  };
  auto number = [&]() {
    std::string tok;
    if (!(in >> tok)) fail("unexpected end of file");
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') fail("bad number '" + tok + "'");
    return v;
  };
  auto expect = [&](const std::string& keyword) {
    std::string tok;
    if (!(in >> tok) || tok != keyword) fail("expected " + keyword);
  };
  std::string header;
  std::getline(in, header);
  if (header.rfind("LIPHMM ", 0) != 0) fail("not a model set file");
  ModelSet models;
  std::size_t n_words = 0;
  {
    std::istringstream hs(header.substr(7));
    std::string field;
    while (hs >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
      if (key == "words") n_words = std::stoul(value);
      else if (key == "states") models.states_per_word = std::stoi(value);
      else if (key == "seed") models.seed = std::stoull(value);
      else if (key == "config" && config_hash) *config_hash = value;
    }
  }
  const auto S = static_cast<std::size_t>(models.states_per_word);
  for (std::size_t w = 0; w < n_words; ++w) {
    WordHmm hmm;
    expect("WORD");
    in >> hmm.word;
    for (std::size_t s = 0; s < S; ++s) {
      expect("STATE");
      number();
      expect("COMPONENTS");
      const auto K = static_cast<std::size_t>(number());
      expect("DIM");
      const auto M = static_cast<std::size_t>(number());
      std::vector<double> weights(K);
      Matrix means(K, M), vars(K, M);
      for (std::size_t k = 0; k < K; ++k) {
        expect("WEIGHT");
        weights[k] = number();
        expect("MEAN");
        for (std::size_t d = 0; d < M; ++d) means(k, d) = number();
        expect("VAR");
        for (std::size_t d = 0; d < M; ++d) vars(k, d) = number();
      }
      hmm.states.emplace_back(std::move(weights), std::move(means), std::move(vars));
    }
    expect("TRANSITIONS");
    const auto n = static_cast<std::size_t>(number());
    if (n != S + 2) fail("transition matrix size does not match state count");
    Matrix trans(n, n);
    for (double& v : trans.values()) v = number();
    for (std::size_t s = 0; s < S; ++s) {
      hmm.log_self.push_back(trans(s + 1, s + 1));
      hmm.log_next.push_back(trans(s + 1, s + 2));
      for (std::size_t c = 0; c < n; ++c) {
        if (c != s + 1 && c != s + 2 && trans(s + 1, c) != kNegInf) {
          fail("word '" + hmm.word + "' has a transition outside the self/next topology");
        }
      }
    }
    expect("END");
    models.words.push_back(std::move(hmm));
  }
  return models;
}

}  // namespace lipread::gmmhmm
