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

#include "lipread/lstm.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <sstream>

#include "lipread/dataio.h"
#include "lipread/error.h"
#include "lipread/random.h"

namespace lipread::lstm {
namespace {

inline double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void CheckShapes(const Params& p) {
  const auto g = static_cast<std::size_t>(p.gate_width());
  const auto d = static_cast<std::size_t>(p.input_dim);
  const auto h = static_cast<std::size_t>(p.hidden_dim);
  const auto c = static_cast<std::size_t>(p.n_classes);
  if (p.input_weights.rows() != d || p.input_weights.cols() != g ||
      p.recurrent_weights.rows() != h || p.recurrent_weights.cols() != g ||
      p.gate_bias.size() != g || p.output_weights.rows() != c ||
      p.output_weights.cols() != h || p.output_bias.size() != c) {
    Fail(ErrorKind::kDimension, "LSTM parameter tensors have inconsistent shapes");
  }
}

}  // namespace

SparseSequence SparseSequence::FromDense(const Matrix& dense, double scale) {
  SparseSequence seq;
  seq.dim = dense.cols();
  seq.frames.resize(dense.rows());
  for (std::size_t t = 0; t < dense.rows(); ++t) {
    const auto row = dense.row(t);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] != 0.0) seq.frames[t].emplace_back(static_cast<std::uint32_t>(j), row[j] * scale);
    }
  }
  return seq;
}

Matrix SparseSequence::ToDense() const {
  Matrix m(frames.size(), dim);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    for (const auto& [j, v] : frames[t]) m(t, j) = v;
  }
  return m;
}

Params Params::Zeros(int input_dim, int hidden_dim, int n_classes) {
  if (input_dim < 1 || hidden_dim < 1 || n_classes < 1) {
    Fail(ErrorKind::kArgument, "LSTM dimensions must be positive");
  }
  Params p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.n_classes = n_classes;
  const auto g = static_cast<std::size_t>(4 * hidden_dim);
  p.input_weights = Matrix(static_cast<std::size_t>(input_dim), g);
  p.recurrent_weights = Matrix(static_cast<std::size_t>(hidden_dim), g);
  p.gate_bias.assign(g, 0.0);
  p.output_weights = Matrix(static_cast<std::size_t>(n_classes), static_cast<std::size_t>(hidden_dim));
  p.output_bias.assign(static_cast<std::size_t>(n_classes), 0.0);
  return p;
}

Params Params::Init(int input_dim, int hidden_dim, int n_classes, std::uint64_t seed) {
  Params p = Zeros(input_dim, hidden_dim, n_classes);
  Rng rng(seed);
  const double r = 1.0 / std::sqrt(static_cast<double>(input_dim + hidden_dim));
  p.ForEachTensor([&](std::vector<double>& t, bool is_weight) {
    if (!is_weight) return;
    for (double& v : t) v = rng.Uniform(-r, r);
  });
  for (int k = 0; k < hidden_dim; ++k) p.gate_bias[static_cast<std::size_t>(hidden_dim + k)] = 1.0;
  return p;
}

namespace {

// Column-major view of a sparse sequence: for every distinct input index,
// ascending, the frames that use it in ascending time order. Walking the
// input weights one row at a time keeps each row's traffic to a single pass
// per utterance.
struct ColumnView {
  std::vector<std::uint32_t> rows;
  std::vector<std::size_t> offsets;  // rows.size() + 1
  std::vector<std::uint32_t> times;
  std::vector<double> values;
};

ColumnView Columns(const SparseSequence& input) {
  std::vector<std::uint32_t> count(input.dim + 1, 0);
  std::size_t nnz = 0;
  for (std::size_t t = 0; t < input.length(); ++t) {
    for (const auto& [j, x] : input.frames[t]) {
      if (j >= input.dim) Fail(ErrorKind::kDimension, "sparse index beyond input dimension");
      if (!std::isfinite(x)) {
        Fail(ErrorKind::kNumeric, "non-finite input at frame " + std::to_string(t));
      }
      ++count[j + 1];
      ++nnz;
    }
  }
  ColumnView cols;
  for (std::size_t j = 0; j < input.dim; ++j) {
    if (count[j + 1] > 0) cols.rows.push_back(static_cast<std::uint32_t>(j));
    count[j + 1] += count[j];
  }
  cols.offsets.reserve(cols.rows.size() + 1);
  for (std::uint32_t j : cols.rows) cols.offsets.push_back(count[j]);
  cols.offsets.push_back(nnz);
  cols.times.resize(nnz);
  cols.values.resize(nnz);
  for (std::size_t t = 0; t < input.length(); ++t) {
    for (const auto& [j, x] : input.frames[t]) {
      const std::uint32_t slot = count[j]++;
      cols.times[slot] = static_cast<std::uint32_t>(t);
      cols.values[slot] = x;
    }
  }
  return cols;
}

// `before_row(j)` runs just before input-weight row j is read.
template <typename RowHook>
Matrix ForwardColumns(const Params& params, const ColumnView& cols, std::size_t T, Cache* cache,
                      RowHook&& before_row) {
  const auto H = static_cast<std::size_t>(params.hidden_dim);
  const auto G = 4 * H;
  const auto C = static_cast<std::size_t>(params.n_classes);

  Cache local;
  Cache& cc = cache ? *cache : local;
  cc.steps = T;
  cc.gates.assign(T * G, 0.0);
  cc.cells.assign(T * H, 0.0);
  cc.hidden.assign(T * H, 0.0);
  cc.posteriors = Matrix(T, C);

  // Input contributions for every frame; they do not depend on the recurrence.
  std::vector<double> projected(T * G, 0.0);
  for (std::size_t r = 0; r < cols.rows.size(); ++r) {
    before_row(cols.rows[r]);
    const double* w = params.input_weights.row(cols.rows[r]).data();
    for (std::size_t e = cols.offsets[r]; e < cols.offsets[r + 1]; ++e) {
      double* acc = &projected[cols.times[e] * G];
      const double x = cols.values[e];
      for (std::size_t q = 0; q < G; ++q) acc[q] += x * w[q];
    }
  }

  std::vector<double> pre(G);
  std::vector<double> logits(C);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t q = 0; q < G; ++q) pre[q] = params.gate_bias[q] + projected[t * G + q];
    if (t > 0) {
      const double* h_prev = &cc.hidden[(t - 1) * H];
      for (std::size_t r = 0; r < H; ++r) {
        const double hr = h_prev[r];
        const double* w = params.recurrent_weights.row(r).data();
        for (std::size_t q = 0; q < G; ++q) pre[q] += hr * w[q];
      }
    }
    double* gate = &cc.gates[t * G];
    for (std::size_t q = 0; q < G; ++q) gate[q] = Sigmoid(pre[q]);
    const double* in = gate;
    const double* forget = gate + H;
    const double* out = gate + 2 * H;
    const double* cand = gate + 3 * H;
    double* cell = &cc.cells[t * H];
    double* hid = &cc.hidden[t * H];
    for (std::size_t k = 0; k < H; ++k) {
      const double prev = t > 0 ? cc.cells[(t - 1) * H + k] : 0.0;
      cell[k] = forget[k] * prev + in[k] * cand[k];
      hid[k] = out[k] * Sigmoid(cell[k]);
    }
    double top = -INFINITY;
    for (std::size_t c = 0; c < C; ++c) {
      double z = params.output_bias[c];
      const double* w = params.output_weights.row(c).data();
      for (std::size_t k = 0; k < H; ++k) z += w[k] * hid[k];
      logits[c] = z;
      top = std::max(top, z);
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      logits[c] = std::exp(logits[c] - top);
      sum += logits[c];
    }
    auto row = cc.posteriors.row(t);
    for (std::size_t c = 0; c < C; ++c) row[c] = logits[c] / sum;
  }
  return cc.posteriors;
}

void CheckInput(const Params& params, const SparseSequence& input) {
  CheckShapes(params);
  if (input.dim != static_cast<std::size_t>(params.input_dim)) {
    Fail(ErrorKind::kDimension, "input dimension " + std::to_string(input.dim) +
                                    " does not match model dimension " +
                                    std::to_string(params.input_dim));
  }
  if (input.length() == 0) Fail(ErrorKind::kArgument, "empty input sequence");
}

}  // namespace

Matrix Forward(const Params& params, const SparseSequence& input, Cache* cache) {
  CheckInput(params, input);
  return ForwardColumns(params, Columns(input), input.length(), cache, [](std::uint32_t) {});
}

Matrix Forward(const Params& params, const Matrix& input, Cache* cache) {
  for (double v : input.values()) {
    if (!std::isfinite(v)) Fail(ErrorKind::kNumeric, "non-finite input");
  }
  return Forward(params, SparseSequence::FromDense(input), cache);
}

double Loss(const Matrix& posteriors, std::span<const int> labels) {
  if (labels.size() != posteriors.rows()) {
    Fail(ErrorKind::kDimension, "label count does not match posterior rows");
  }
  if (labels.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    const int y = labels[t];
    if (y < 0 || static_cast<std::size_t>(y) >= posteriors.cols()) {
      Fail(ErrorKind::kRange, "label " + std::to_string(y) + " out of range");
    }
    total -= std::log(posteriors(t, static_cast<std::size_t>(y)));
  }
  return total / static_cast<double>(labels.size());
}

namespace {

// Gradients of every tensor except the input weights, plus the gate
// pre-activation deltas `da` (T x 4H) from which input-weight gradients follow.
// g.input_weights is left untouched.
void BackwardCore(const Params& params, const Cache& cache, std::span<const int> labels,
                  Params& g, std::vector<double>& da_all, int bptt_horizon) {
  const std::size_t T = cache.steps;
  const auto H = static_cast<std::size_t>(params.hidden_dim);
  const auto G = 4 * H;
  const auto C = static_cast<std::size_t>(params.n_classes);

  g.recurrent_weights.Fill(0.0);
  std::fill(g.gate_bias.begin(), g.gate_bias.end(), 0.0);
  g.output_weights.Fill(0.0);
  std::fill(g.output_bias.begin(), g.output_bias.end(), 0.0);

  da_all.assign(T * G, 0.0);
  const double inv_t = 1.0 / static_cast<double>(T);
  std::vector<double> dh_next(H, 0.0), dc_next(H, 0.0), dh(H), dlogit(C);
  for (std::size_t t = T; t-- > 0;) {
    if (bptt_horizon > 0 && (t + 1) % static_cast<std::size_t>(bptt_horizon) == 0) {
      std::fill(dh_next.begin(), dh_next.end(), 0.0);
      std::fill(dc_next.begin(), dc_next.end(), 0.0);
    }
    const int y = labels[t];
    if (y < 0 || static_cast<std::size_t>(y) >= C) {
      Fail(ErrorKind::kRange, "label " + std::to_string(y) + " out of range");
    }
    const double* hid = &cache.hidden[t * H];
    for (std::size_t c = 0; c < C; ++c) {
      dlogit[c] = (cache.posteriors(t, c) - (static_cast<std::size_t>(y) == c ? 1.0 : 0.0)) * inv_t;
      g.output_bias[c] += dlogit[c];
      double* w = g.output_weights.row(c).data();
      for (std::size_t k = 0; k < H; ++k) w[k] += dlogit[c] * hid[k];
    }
    for (std::size_t k = 0; k < H; ++k) {
      double s = dh_next[k];
      for (std::size_t c = 0; c < C; ++c) s += params.output_weights(c, k) * dlogit[c];
      dh[k] = s;
    }
    double* da = &da_all[t * G];
    const double* gate = &cache.gates[t * G];
    const double* cell = &cache.cells[t * H];
    for (std::size_t k = 0; k < H; ++k) {
      const double i = gate[k], f = gate[H + k], o = gate[2 * H + k], cand = gate[3 * H + k];
      const double s = Sigmoid(cell[k]);
      const double c_prev = t > 0 ? cache.cells[(t - 1) * H + k] : 0.0;
      const double d_out = dh[k] * s;
      const double dc = dh[k] * o * s * (1.0 - s) + dc_next[k];
      da[k] = dc * cand * i * (1.0 - i);
      da[H + k] = dc * c_prev * f * (1.0 - f);
      da[2 * H + k] = d_out * o * (1.0 - o);
      da[3 * H + k] = dc * i * cand * (1.0 - cand);
      dc_next[k] = dc * f;
    }
    for (std::size_t q = 0; q < G; ++q) g.gate_bias[q] += da[q];
    if (t > 0) {
      const double* h_prev = &cache.hidden[(t - 1) * H];
      for (std::size_t r = 0; r < H; ++r) {
        double* w = g.recurrent_weights.row(r).data();
        const double* wr = params.recurrent_weights.row(r).data();
        double s = 0.0;
        for (std::size_t q = 0; q < G; ++q) {
          w[q] += h_prev[r] * da[q];
          s += wr[q] * da[q];
        }
        dh_next[r] = s;
      }
    } else {
      std::fill(dh_next.begin(), dh_next.end(), 0.0);
    }
  }
}

// Input-weight gradient of one row: sum over the frames that use it.
inline void InputRowGradient(const ColumnView& cols, std::size_t r, const std::vector<double>& da,
                             std::size_t G, double* out) {
  std::fill(out, out + G, 0.0);
  for (std::size_t e = cols.offsets[r]; e < cols.offsets[r + 1]; ++e) {
    const double* d = &da[cols.times[e] * G];
    const double x = cols.values[e];
    for (std::size_t q = 0; q < G; ++q) out[q] += x * d[q];
  }
}

}  // namespace

void Backward(const Params& params, const SparseSequence& input, const Cache& cache,
              std::span<const int> labels, Gradients& out, int bptt_horizon) {
  CheckInput(params, input);
  const std::size_t T = cache.steps;
  if (T != input.length() || labels.size() != T) {
    Fail(ErrorKind::kDimension, "cache, input and labels disagree in length");
  }
  Params& g = out.grad;
  if (g.input_dim != params.input_dim || g.hidden_dim != params.hidden_dim ||
      g.n_classes != params.n_classes || g.input_weights.empty()) {
    g = Params::Zeros(params.input_dim, params.hidden_dim, params.n_classes);
    out.touched_rows.clear();
  }
  for (std::uint32_t j : out.touched_rows) {
    auto row = g.input_weights.row(j);
    std::fill(row.begin(), row.end(), 0.0);
  }
  std::vector<double> da;
  BackwardCore(params, cache, labels, g, da, bptt_horizon);
  const ColumnView cols = Columns(input);
  const auto G = static_cast<std::size_t>(params.gate_width());
  for (std::size_t r = 0; r < cols.rows.size(); ++r) {
    InputRowGradient(cols, r, da, G, g.input_weights.row(cols.rows[r]).data());
  }
  out.touched_rows = cols.rows;
}

Gradients Backward(const Params& params, const SparseSequence& input, const Cache& cache,
                   std::span<const int> labels, int bptt_horizon) {
  Gradients out;
  Backward(params, input, cache, labels, out, bptt_horizon);
  return out;
}

void TrainConfig::Validate() const {
  if (learning_rate < 0 || weight_decay < 0 || momentum < 0) {
    Fail(ErrorKind::kArgument, "learning rate, weight decay and momentum must be >= 0");
  }
  if (max_iterations < 1) Fail(ErrorKind::kArgument, "max_iterations must be >= 1");
  if (bptt_horizon < 0) Fail(ErrorKind::kArgument, "bptt_horizon must be >= 0");
}

namespace {

inline void StepRange(double* w, const double* g, double* v, std::size_t n, double lr,
                      double decay, double momentum) {
  for (std::size_t e = 0; e < n; ++e) {
    v[e] = momentum * v[e] - lr * (g[e] + decay * w[e]);
    w[e] += v[e];
  }
}

}  // namespace

void SgdStep(Params& params, const Params& grads, Params& velocity, const TrainConfig& config) {
  std::vector<std::vector<double>*> w, v;
  std::vector<const std::vector<double>*> g;
  std::vector<bool> is_weight;
  params.ForEachTensor([&](std::vector<double>& t, bool weight) {
    w.push_back(&t);
    is_weight.push_back(weight);
  });
  grads.ForEachTensor([&](const std::vector<double>& t, bool) { g.push_back(&t); });
  velocity.ForEachTensor([&](std::vector<double>& t, bool) { v.push_back(&t); });
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (g[i]->size() != w[i]->size() || v[i]->size() != w[i]->size()) {
      Fail(ErrorKind::kDimension, "gradient/velocity shape mismatch");
    }
    StepRange(w[i]->data(), g[i]->data(), v[i]->data(), w[i]->size(), config.learning_rate,
              is_weight[i] ? config.weight_decay : 0.0, config.momentum);
  }
}

namespace {

// Closed-form powers of the zero-gradient update map
//   (w, v) -> ((1 - lr*decay) w + m v, -lr*decay w + m v).
class IdleUpdate {
 public:
  IdleUpdate(const TrainConfig& c, int max_steps) : powers_(static_cast<std::size_t>(max_steps) + 1) {
    const double a = 1.0 - c.learning_rate * c.weight_decay;
    const double b = c.momentum;
    const double cc = -c.learning_rate * c.weight_decay;
    const double d = c.momentum;
    powers_[0] = {1.0, 0.0, 0.0, 1.0};
    for (std::size_t k = 1; k < powers_.size(); ++k) {
      const auto& p = powers_[k - 1];
      powers_[k] = {a * p[0] + b * p[2], a * p[1] + b * p[3], cc * p[0] + d * p[2],
                    cc * p[1] + d * p[3]};
    }
  }

  void Apply(std::size_t steps, double* w, double* v, std::size_t n) const {
    if (steps == 0) return;
    const auto& p = powers_[steps];
    for (std::size_t e = 0; e < n; ++e) {
      const double nw = p[0] * w[e] + p[1] * v[e];
      const double nv = p[2] * w[e] + p[3] * v[e];
      w[e] = nw;
      v[e] = nv;
    }
  }

 private:
  std::vector<std::array<double, 4>> powers_;
};

}  // namespace

TrainResult Train(std::span<const Example> data, int hidden_dim, int n_classes,
                  const TrainConfig& config) {
  config.Validate();
  if (data.empty()) Fail(ErrorKind::kArgument, "no training utterances");
  const std::size_t dim = data[0].features.dim;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].features.dim != dim) {
      Fail(ErrorKind::kDimension, "training utterances disagree in feature dimension");
    }
    if (data[i].labels.size() != data[i].features.length() || data[i].labels.empty()) {
      Fail(ErrorKind::kArgument, "training utterance " + std::to_string(i) +
                                     " lacks one label per frame");
    }
  }

  TrainResult result;
  result.params = Params::Init(static_cast<int>(dim), hidden_dim, n_classes, config.seed);
  Params& params = result.params;
  Params velocity = Params::Zeros(static_cast<int>(dim), hidden_dim, n_classes);
  // Dense gradients only; input-weight gradients never materialize here.
  Params grads = Params::Zeros(1, hidden_dim, n_classes);
  std::vector<double> da;
  Cache cache;
  const IdleUpdate idle(config, config.max_iterations);
  const auto G = static_cast<std::size_t>(params.gate_width());
  std::vector<int> applied(dim, 0);  // steps already applied to each input row
  std::vector<double> row_grad(G);

  Rng rng(MixSeed(config.seed, 0x5eed));
  std::vector<std::size_t> order(data.size());
  std::size_t cursor = order.size();
  result.loss_trace.reserve(static_cast<std::size_t>(config.max_iterations));

  for (int it = 0; it < config.max_iterations; ++it) {
    if (cursor == order.size()) {
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      rng.Shuffle(order);
      cursor = 0;
    }
    const Example& ex = data[order[cursor++]];

    const ColumnView cols = Columns(ex.features);
    // Rows idle since their last update catch up just before they are read.
    const Matrix post =
        ForwardColumns(params, cols, ex.features.length(), &cache, [&](std::uint32_t j) {
          idle.Apply(static_cast<std::size_t>(it - applied[j]), params.input_weights.row(j).data(),
                     velocity.input_weights.row(j).data(), G);
        });
    result.loss_trace.push_back(Loss(post, ex.labels));
    BackwardCore(params, cache, ex.labels, grads, da, config.bptt_horizon);

    // Input-weight gradients are formed row by row and applied at once.
    for (std::size_t r = 0; r < cols.rows.size(); ++r) {
      const std::uint32_t j = cols.rows[r];
      InputRowGradient(cols, r, da, G, row_grad.data());
      StepRange(params.input_weights.row(j).data(), row_grad.data(),
                velocity.input_weights.row(j).data(), G, config.learning_rate,
                config.weight_decay, config.momentum);
      applied[j] = it + 1;
    }
    StepRange(params.recurrent_weights.values().data(),
              grads.recurrent_weights.values().data(),
              velocity.recurrent_weights.values().data(), params.recurrent_weights.values().size(),
              config.learning_rate, config.weight_decay, config.momentum);
    StepRange(params.gate_bias.data(), grads.gate_bias.data(), velocity.gate_bias.data(),
              G, config.learning_rate, 0.0, config.momentum);
    StepRange(params.output_weights.values().data(), grads.output_weights.values().data(),
              velocity.output_weights.values().data(), params.output_weights.values().size(),
              config.learning_rate, config.weight_decay, config.momentum);
    StepRange(params.output_bias.data(), grads.output_bias.data(),
              velocity.output_bias.data(), params.output_bias.size(), config.learning_rate, 0.0,
              config.momentum);
  }
  for (std::size_t j = 0; j < dim; ++j) {
    idle.Apply(static_cast<std::size_t>(config.max_iterations - applied[j]),
               params.input_weights.row(j).data(), velocity.input_weights.row(j).data(), G);
  }
  return result;
}

std::vector<int> Predict(const Matrix& posteriors) {
  std::vector<int> out(posteriors.rows());
  for (std::size_t t = 0; t < posteriors.rows(); ++t) {
    const auto row = posteriors.row(t);
    out[t] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double FrameAccuracy(const Params& params, std::span<const Example> data) {
  std::size_t correct = 0, total = 0;
  for (const auto& ex : data) {
    const auto pred = Predict(Forward(params, ex.features));
    for (std::size_t t = 0; t < pred.size(); ++t) correct += (pred[t] == ex.labels[t]) ? 1 : 0;
    total += pred.size();
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

void SaveModel(const std::filesystem::path& path, const Params& params, std::uint64_t seed,
               double scaling, const std::string& config_hash) {
  char scale_text[64];
  std::snprintf(scale_text, sizeof(scale_text), "%.17g", scaling);
  std::string data = "LIPLSTM D=" + std::to_string(params.input_dim) +
                     " H=" + std::to_string(params.hidden_dim) +
                     " C=" + std::to_string(params.n_classes) + " seed=" + std::to_string(seed) +
                     " scaling=" + scale_text +
                     " config=" + (config_hash.empty() ? "-" : config_hash) + "\n";
  params.ForEachTensor([&](const std::vector<double>& t, bool) {
    for (double v : t) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      for (int b = 0; b < 8; ++b) data.push_back(static_cast<char>(bits >> (8 * b)));
    }
  });
  WriteTextFile(path, data);
}

Params LoadModel(const std::filesystem::path& path, double* scaling, std::string* config_hash) {
  const std::string data = ReadTextFile(path);
  const auto eol = data.find('\n');
  if (eol == std::string::npos || data.rfind("LIPLSTM ", 0) != 0) {
    Fail(ErrorKind::kFormat, path.string() + ": not an LSTM model file");
  }
  std::istringstream header(data.substr(8, eol - 8));
  std::string field;
  int d = 0, h = 0, c = 0;
  double scale = 1.0;
  std::string hash;
  while (header >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) Fail(ErrorKind::kFormat, path.string() + ": bad header field");
    const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
    if (key == "D") d = std::stoi(value);
    else if (key == "H") h = std::stoi(value);
    else if (key == "C") c = std::stoi(value);
    else if (key == "scaling") scale = std::stod(value);
    else if (key == "config") hash = value;
  }
  Params p = Params::Zeros(d, h, c);
  std::size_t total = 0;
  p.ForEachTensor([&](std::vector<double>& t, bool) { total += t.size(); });
  if (data.size() - eol - 1 != 8 * total) {
    Fail(ErrorKind::kFormat, path.string() + ": payload size does not match header");
  }
  const auto* q = reinterpret_cast<const unsigned char*>(data.data() + eol + 1);
  p.ForEachTensor([&](std::vector<double>& t, bool) {
    for (double& v : t) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(q[b]) << (8 * b);
      v = std::bit_cast<double>(bits);
      q += 8;
    }
  });
  if (scaling) *scaling = scale;
  if (config_hash) *config_hash = hash;
  return p;
}

}  // namespace lipread::lstm
