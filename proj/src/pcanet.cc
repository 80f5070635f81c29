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

#include "lipread/pcanet.h"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "lipread/error.h"
#include "lipread/parallel.h"

namespace lipread::pcanet {

int Config::pooled_side(int n) const {
  if (n <= pool_window) return 1;
  return (n - pool_window + pool_stride - 1) / pool_stride + 1;
}

void Config::Validate() const {
  if (patch_side < 1 || patch_side % 2 == 0) {
    Fail(ErrorKind::kArgument, "patch_side must be odd and positive");
  }
  if (filters < 1 || filters > 15) Fail(ErrorKind::kArgument, "filters must be in [1,15]");
  if (filters > patch_side * patch_side) {
    Fail(ErrorKind::kArgument, "filters exceed patch dimension");
  }
  if (pool_window < 1 || pool_stride < 1) Fail(ErrorKind::kArgument, "bad pooling window");
  if (block_rows < 1 || block_cols < 1) Fail(ErrorKind::kArgument, "bad block grid");
  if (frame_cap < 1) Fail(ErrorKind::kArgument, "frame_cap must be >= 1");
}

Matrix ExtractPatches(const GrayImage& image, int k, PatchMode mode) {
  if (k < 1 || k % 2 == 0) Fail(ErrorKind::kArgument, "patch side must be odd, got " + std::to_string(k));
  const int h = image.height;
  const int w = image.width;
  const int half = (k - 1) / 2;
  int rows, cols, offset;
  if (mode == PatchMode::kValid) {
    if (h < k || w < k) {
      Fail(ErrorKind::kArgument, "patch side " + std::to_string(k) + " larger than image " +
                                     std::to_string(h) + "x" + std::to_string(w));
    }
    rows = h - k + 1;
    cols = w - k + 1;
    offset = 0;
  } else {
    rows = h;
    cols = w;
    offset = -half;
  }
  Matrix patches(static_cast<std::size_t>(rows) * cols, static_cast<std::size_t>(k) * k);
  std::size_t n = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c, ++n) {
      auto p = patches.row(n);
      double mean = 0.0;
      for (int i = 0; i < k; ++i) {
        const int rr = r + offset + i;
        for (int j = 0; j < k; ++j) {
          const int cc = c + offset + j;
          const double v = (rr >= 0 && rr < h && cc >= 0 && cc < w) ? image.at(rr, cc) : 0.0;
          p[static_cast<std::size_t>(i * k + j)] = v;
          mean += v;
        }
      }
      mean /= static_cast<double>(k * k);
      for (double& v : p) v -= mean;
    }
  }
  return patches;
}

void AccumulateScatter(const Matrix& patches, Matrix& scatter) {
  const auto d = static_cast<Eigen::Index>(patches.cols());
  if (scatter.rows() != patches.cols() || scatter.cols() != patches.cols()) {
    Fail(ErrorKind::kDimension, "scatter matrix does not match patch length");
  }
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMajor> p(patches.values().data(),
                               static_cast<Eigen::Index>(patches.rows()), d);
  Eigen::Map<RowMajor> s(scatter.values().data(), d, d);
  s.noalias() += p.transpose() * p;
}

FilterBank FiltersFromScatter(const Matrix& scatter, int L, int stage) {
  const auto d = static_cast<int>(scatter.rows());
  const int k = static_cast<int>(std::lround(std::sqrt(d)));
  if (k * k != d || scatter.cols() != scatter.rows()) {
    Fail(ErrorKind::kDimension, "scatter matrix must be k^2 x k^2");
  }
  if (L < 1 || L > d) Fail(ErrorKind::kArgument, "filter count must be in [1, k^2]");

  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMajor> s(scatter.values().data(), d, d);
  const Eigen::MatrixXd dense = s;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense);
  if (solver.info() != Eigen::Success) Fail(ErrorKind::kNumeric, "eigendecomposition failed");
  const Eigen::VectorXd& values = solver.eigenvalues();
  const Eigen::MatrixXd& vectors = solver.eigenvectors();

  const double top = std::max(values.maxCoeff(), 0.0);
  int rank = 0;
  for (int i = 0; i < d; ++i) rank += (values[i] > top * 1e-10 && values[i] > 0.0) ? 1 : 0;
  if (rank < L) {
    Fail(ErrorKind::kNumeric, "patch scatter has rank " + std::to_string(rank) +
                                  ", fewer than the " + std::to_string(L) + " filters requested");
  }

  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return values[a] > values[b]; });

  FilterBank bank;
  bank.stage = stage;
  bank.patch_side = k;
  for (int l = 0; l < L; ++l) {
    const int idx = order[static_cast<std::size_t>(l)];
    std::vector<double> f(static_cast<std::size_t>(d));
    int peak = 0;
    for (int i = 0; i < d; ++i) {
      f[static_cast<std::size_t>(i)] = vectors(i, idx);
      if (std::abs(vectors(i, idx)) > std::abs(vectors(peak, idx))) peak = i;
    }
    if (f[static_cast<std::size_t>(peak)] < 0) {
      for (double& v : f) v = -v;
    }
    bank.filters.push_back(std::move(f));
    bank.eigenvalues.push_back(values[idx]);
  }
  return bank;
}

FilterBank LearnFilters(const Matrix& patches, int L, int stage) {
  if (patches.rows() < static_cast<std::size_t>(L)) {
    Fail(ErrorKind::kArgument, "need at least " + std::to_string(L) + " patches, got " +
                                   std::to_string(patches.rows()));
  }
  Matrix scatter(patches.cols(), patches.cols());
  AccumulateScatter(patches, scatter);
  return FiltersFromScatter(scatter, L, stage);
}

GrayImage Correlate(const GrayImage& image, std::span<const double> kernel, int k) {
  const int h = image.height;
  const int w = image.width;
  const int half = (k - 1) / 2;
  GrayImage out(w, h, 0.0);
  const double* src = image.pixels.data();
  double* dst = out.pixels.data();
  // Loop over taps outermost; each output pixel still receives its terms in
  // row-major tap order, skipping taps that fall in the zero padding.
  for (int i = 0; i < k; ++i) {
    const int di = i - half;
    const int r0 = std::max(0, -di);
    const int r1 = std::min(h, h - di);
    for (int j = 0; j < k; ++j) {
      const int dj = j - half;
      const double f = kernel[static_cast<std::size_t>(i * k + j)];
      const int c0 = std::max(0, -dj);
      const int c1 = std::min(w, w - dj);
      for (int r = r0; r < r1; ++r) {
        double* o = dst + static_cast<std::size_t>(r) * w;
        const double* s = src + static_cast<std::size_t>(r + di) * w + dj;
        for (int c = c0; c < c1; ++c) o[c] += f * s[c];
      }
    }
  }
  return out;
}

std::vector<GrayImage> Convolve(const GrayImage& image, const FilterBank& bank) {
  std::vector<GrayImage> maps;
  maps.reserve(bank.filters.size());
  for (const auto& f : bank.filters) {
    if (f.size() != static_cast<std::size_t>(bank.patch_side * bank.patch_side)) {
      Fail(ErrorKind::kDimension, "filter length does not match patch side");
    }
    maps.push_back(Correlate(image, f, bank.patch_side));
  }
  return maps;
}

std::vector<std::vector<GrayImage>> StageForward(std::span<const GrayImage> images,
                                                 const FilterBank& bank) {
  std::vector<std::vector<GrayImage>> out(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].width != images[0].width || images[i].height != images[0].height) {
      Fail(ErrorKind::kDimension, "stage input images differ in size");
    }
  }
  ParallelFor(images.size(), [&](std::size_t i) { out[i] = Convolve(images[i], bank); });
  return out;
}

HashImage BinarizeAndStack(std::span<const GrayImage> maps, int expected_maps) {
  if (static_cast<int>(maps.size()) != expected_maps) {
    Fail(ErrorKind::kArgument, "expected " + std::to_string(expected_maps) + " maps, got " +
                                   std::to_string(maps.size()));
  }
  HashImage hash;
  hash.width = maps[0].width;
  hash.height = maps[0].height;
  hash.values.assign(maps[0].pixels.size(), 0);
  for (std::size_t l = 0; l < maps.size(); ++l) {
    if (maps[l].width != hash.width || maps[l].height != hash.height) {
      Fail(ErrorKind::kDimension, "maps to stack differ in size");
    }
    const auto bit = static_cast<std::uint16_t>(1u << l);
    const double* m = maps[l].pixels.data();
    for (std::size_t p = 0; p < hash.values.size(); ++p) {
      if (m[p] > 0.0) hash.values[p] |= bit;
    }
  }
  return hash;
}

namespace {

template <typename T>
std::vector<T> Pool(const std::vector<T>& values, int width, int height, int window, int stride,
                    int* out_width, int* out_height) {
  if (window < 1 || stride < 1) Fail(ErrorKind::kArgument, "bad pooling window");
  auto side = [&](int n) {
    return n <= window ? 1 : (n - window + stride - 1) / stride + 1;
  };
  const int ow = side(width);
  const int oh = side(height);
  std::vector<T> out(static_cast<std::size_t>(ow) * oh);
  for (int r = 0; r < oh; ++r) {
    const int rr1 = std::min(height, r * stride + window);
    for (int c = 0; c < ow; ++c) {
      const int cc1 = std::min(width, c * stride + window);
      T best = values[static_cast<std::size_t>(r * stride) * width + c * stride];
      for (int rr = r * stride; rr < rr1; ++rr) {
        for (int cc = c * stride; cc < cc1; ++cc) {
          best = std::max(best, values[static_cast<std::size_t>(rr) * width + cc]);
        }
      }
      out[static_cast<std::size_t>(r) * ow + c] = best;
    }
  }
  *out_width = ow;
  *out_height = oh;
  return out;
}

}  // namespace

HashImage MaxPool(const HashImage& image, int window, int stride) {
  HashImage out;
  out.values = Pool(image.values, image.width, image.height, window, stride, &out.width,
                    &out.height);
  return out;
}

GrayImage MaxPool(const GrayImage& image, int window, int stride) {
  GrayImage out;
  out.pixels = Pool(image.pixels, image.width, image.height, window, stride, &out.width,
                    &out.height);
  return out;
}

std::vector<double> BlockHistograms(const HashImage& image, int grid_rows, int grid_cols,
                                    int bins) {
  if (image.height < grid_rows || image.width < grid_cols) {
    Fail(ErrorKind::kArgument, "image smaller than block grid");
  }
  const int block_h = image.height / grid_rows;
  const int block_w = image.width / grid_cols;
  std::vector<double> hist(static_cast<std::size_t>(grid_rows) * grid_cols * bins, 0.0);
  for (int r = 0; r < image.height; ++r) {
    const int br = std::min(r / block_h, grid_rows - 1);
    for (int c = 0; c < image.width; ++c) {
      const int bc = std::min(c / block_w, grid_cols - 1);
      const int v = image.at(r, c);
      if (v >= bins) {
        Fail(ErrorKind::kRange, "hash value " + std::to_string(v) + " exceeds " +
                                    std::to_string(bins) + " bins");
      }
      hist[static_cast<std::size_t>((br * grid_cols + bc) * bins + v)] += 1.0;
    }
  }
  return hist;
}

std::vector<std::size_t> SubsampleIndices(std::size_t n, int cap) {
  std::vector<std::size_t> idx;
  const std::size_t m = std::min(n, static_cast<std::size_t>(std::max(cap, 0)));
  for (std::size_t i = 0; i < m; ++i) idx.push_back(i * n / m);
  return idx;
}

namespace {

// Per-item partial scatters combined in index order, independent of the
// worker count.
Matrix ReduceScatter(std::size_t items, int d,
                     const std::function<void(std::size_t, Matrix&)>& accumulate) {
  std::vector<Matrix> partial(items);
  ParallelFor(items, [&](std::size_t i) {
    partial[i] = Matrix(static_cast<std::size_t>(d), static_cast<std::size_t>(d));
    accumulate(i, partial[i]);
  });
  Matrix total(static_cast<std::size_t>(d), static_cast<std::size_t>(d));
  for (const auto& p : partial) {
    for (std::size_t e = 0; e < total.values().size(); ++e) total.values()[e] += p.values()[e];
  }
  return total;
}

}  // namespace

FilterBank LearnStage1(std::span<const GrayImage> frames, const Config& config) {
  config.Validate();
  const auto idx = SubsampleIndices(frames.size(), config.frame_cap);
  if (idx.empty()) Fail(ErrorKind::kArgument, "no frames to learn filters from");
  const int k = config.patch_side;
  Matrix scatter = ReduceScatter(idx.size(), k * k, [&](std::size_t i, Matrix& s) {
    AccumulateScatter(ExtractPatches(frames[idx[i]], k, PatchMode::kValid), s);
  });
  return FiltersFromScatter(scatter, config.filters, 1);
}

FilterBank LearnStage2(std::span<const GrayImage> frames, const FilterBank& stage1,
                       const Config& config) {
  config.Validate();
  const auto idx = SubsampleIndices(frames.size(), config.frame_cap);
  if (idx.empty()) Fail(ErrorKind::kArgument, "no frames to learn filters from");
  const int k = config.patch_side;
  Matrix scatter = ReduceScatter(idx.size(), k * k, [&](std::size_t i, Matrix& s) {
    for (const auto& map : Convolve(frames[idx[i]], stage1)) {
      AccumulateScatter(ExtractPatches(map, k, PatchMode::kValid), s);
    }
  });
  return FiltersFromScatter(scatter, config.filters, 2);
}

std::vector<double> ExtractFeature(const GrayImage& frame, const FilterBank& stage1,
                                   const FilterBank& stage2, const Config& config) {
  if (stage1.size() != config.filters || stage2.size() != config.filters) {
    Fail(ErrorKind::kDimension, "filter banks do not match the configured filter count");
  }
  if (stage1.patch_side != config.patch_side || stage2.patch_side != config.patch_side) {
    Fail(ErrorKind::kDimension, "filter banks do not match the configured patch side");
  }
  const int bins = config.bins();
  const std::size_t group_dim =
      static_cast<std::size_t>(config.block_rows) * config.block_cols * bins;
  std::vector<double> feature;
  feature.reserve(group_dim * static_cast<std::size_t>(config.filters));
  for (const auto& parent : Convolve(frame, stage1)) {
    const auto children = Convolve(parent, stage2);
    const HashImage pooled = MaxPool(BinarizeAndStack(children, config.filters),
                                     config.pool_window, config.pool_stride);
    const auto hist = BlockHistograms(pooled, config.block_rows, config.block_cols, bins);
    feature.insert(feature.end(), hist.begin(), hist.end());
  }
  return feature;
}

void SaveFilterBank(const std::filesystem::path& path, const FilterBank& bank,
                    const std::string& config_hash) {
  std::string data = "LIPFBANK stage=" + std::to_string(bank.stage) +
                     " k=" + std::to_string(bank.patch_side) +
                     " L=" + std::to_string(bank.size()) + " config=" +
                     (config_hash.empty() ? "-" : config_hash) + "\n";
  for (const auto& f : bank.filters) {
    for (double v : f) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      for (int b = 0; b < 8; ++b) data.push_back(static_cast<char>(bits >> (8 * b)));
    }
  }
  WriteTextFile(path, data);
}

FilterBank LoadFilterBank(const std::filesystem::path& path, std::string* config_hash) {
  const std::string data = ReadTextFile(path);
  const auto eol = data.find('\n');
  if (eol == std::string::npos) Fail(ErrorKind::kFormat, path.string() + ": missing header");
  std::istringstream header(data.substr(0, eol));
  std::string magic, stage_f, k_f, l_f, cfg_f;
  header >> magic >> stage_f >> k_f >> l_f >> cfg_f;
  if (magic != "LIPFBANK" || stage_f.rfind("stage=", 0) != 0 || k_f.rfind("k=", 0) != 0 ||
      l_f.rfind("L=", 0) != 0 || cfg_f.rfind("config=", 0) != 0) {
    Fail(ErrorKind::kFormat, path.string() + ": malformed filter bank header");
  }
  FilterBank bank;
  bank.stage = std::stoi(stage_f.substr(6));
  bank.patch_side = std::stoi(k_f.substr(2));
  const int L = std::stoi(l_f.substr(2));
  if (config_hash) *config_hash = cfg_f.substr(7);
  const std::size_t d = static_cast<std::size_t>(bank.patch_side) * bank.patch_side;
  if (data.size() - eol - 1 != 8 * d * static_cast<std::size_t>(L)) {
    Fail(ErrorKind::kFormat, path.string() + ": payload size does not match header");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(data.data() + eol + 1);
  for (int l = 0; l < L; ++l) {
    std::vector<double> f(d);
    for (double& v : f) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
      v = std::bit_cast<double>(bits);
      p += 8;
    }
    bank.filters.push_back(std::move(f));
  }
  return bank;
}

}  // namespace lipread::pcanet
