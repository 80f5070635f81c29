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

#ifndef LIPREAD_LSTM_H_
#define LIPREAD_LSTM_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lipread/matrix.h"

namespace lipread::lstm {

// Frame-major sequence with sparse rows. PCANet histograms are mostly zero, so
// the input projection only touches the active entries.
struct SparseSequence {
  std::size_t dim = 0;
  std::vector<std::vector<std::pair<std::uint32_t, double>>> frames;

  std::size_t length() const { return frames.size(); }
  static SparseSequence FromDense(const Matrix& dense, double scale = 1.0);
  Matrix ToDense() const;
};

// Single-layer LSTM with sigmoid gates and sigmoid cell nonlinearities,
// followed by a softmax layer.
//
// Storage is transposed relative to the usual H x (D + H) gate matrices so
// that a sparse input row selects a contiguous slice: input_weights is
// D x 4H and recurrent_weights is H x 4H, with gate blocks ordered
// [input | forget | output | candidate] along the columns.
struct Params {
  int input_dim = 0;
  int hidden_dim = 0;
  int n_classes = 0;
  Matrix input_weights;      // D x 4H
  Matrix recurrent_weights;  // H x 4H
  std::vector<double> gate_bias;  // 4H
  Matrix output_weights;     // C x H
  std::vector<double> output_bias;  // C

  int gate_width() const { return 4 * hidden_dim; }
  // Zero-valued tensors of the given shape.
  static Params Zeros(int input_dim, int hidden_dim, int n_classes);
  // Weights ~ Uniform(-r, r), r = 1/sqrt(D + H); forget bias 1, others 0.
  static Params Init(int input_dim, int hidden_dim, int n_classes, std::uint64_t seed);

  // Visits every tensor in the declared serialization order: input weights,
  // recurrent weights, gate bias, output weights, output bias.
  template <typename F>
  void ForEachTensor(F&& f) {
    f(input_weights.values(), true);
    f(recurrent_weights.values(), true);
    f(gate_bias, false);
    f(output_weights.values(), true);
    f(output_bias, false);
  }
  template <typename F>
  void ForEachTensor(F&& f) const {
    f(input_weights.values(), true);
    f(recurrent_weights.values(), true);
    f(gate_bias, false);
    f(output_weights.values(), true);
    f(output_bias, false);
  }
  bool operator==(const Params&) const = default;
};

// Activations kept for backpropagation.
struct Cache {
  std::size_t steps = 0;
  std::vector<double> gates;   // T x 4H, post-activation
  std::vector<double> cells;   // T x H
  std::vector<double> hidden;  // T x H
  Matrix posteriors;           // T x C
};

// Posteriors, one row per frame; rows sum to 1.
Matrix Forward(const Params& params, const SparseSequence& input, Cache* cache = nullptr);
Matrix Forward(const Params& params, const Matrix& input, Cache* cache = nullptr);

// Mean cross-entropy in nats per frame.
double Loss(const Matrix& posteriors, std::span<const int> labels);

// Gradients of the mean cross-entropy. bptt_horizon > 0 cuts the backward
// recurrence at chunk boundaries every bptt_horizon frames.
//
// The returned tensors are dense; `touched_rows` lists the input rows with
// nonzero input-weight gradient, sorted.
struct Gradients {
  Params grad;
  std::vector<std::uint32_t> touched_rows;
};
void Backward(const Params& params, const SparseSequence& input, const Cache& cache,
              std::span<const int> labels, Gradients& out, int bptt_horizon = 0);
Gradients Backward(const Params& params, const SparseSequence& input, const Cache& cache,
                   std::span<const int> labels, int bptt_horizon = 0);

struct TrainConfig {
  double learning_rate = 0.5;
  double weight_decay = 0.001;
  double momentum = 0.8;
  int max_iterations = 10000;
  int bptt_horizon = 0;  // 0: full sequence
  std::uint64_t seed = 1;

  void Validate() const;
};

// v <- momentum * v - lr * (g + decay * w) (decay only on weights); w <- w + v.
void SgdStep(Params& params, const Params& grads, Params& velocity, const TrainConfig& config);

struct Example {
  SparseSequence features;
  std::vector<int> labels;
};

struct TrainResult {
  Params params;
  std::vector<double> loss_trace;  // one entry per iteration
};

// One iteration = forward, backward and update on one utterance; utterance
// order is reshuffled every pass. Input-weight rows an utterance does not
// touch receive the exact closed-form catch-up of the skipped momentum and
// decay updates when next used, so sparse rows cost nothing while idle.
TrainResult Train(std::span<const Example> data, int hidden_dim, int n_classes,
                  const TrainConfig& config);

// Argmax per row; ties go to the lowest class index.
std::vector<int> Predict(const Matrix& posteriors);

// Fraction of frames with argmax posterior equal to the label.
double FrameAccuracy(const Params& params, std::span<const Example> data);

// Text header "LIPLSTM D=.. H=.. C=.. seed=.. scaling=.. config=.." then the
// tensors as little-endian f64 in ForEachTensor order.
void SaveModel(const std::filesystem::path& path, const Params& params, std::uint64_t seed,
               double scaling, const std::string& config_hash);
Params LoadModel(const std::filesystem::path& path, double* scaling = nullptr,
                 std::string* config_hash = nullptr);

}  // namespace lipread::lstm

#endif  // LIPREAD_LSTM_H_
