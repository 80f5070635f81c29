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

#ifndef LIPREAD_PCANET_H_
#define LIPREAD_PCANET_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lipread/dataio.h"
#include "lipread/matrix.h"

namespace lipread::pcanet {

struct Config {
  int patch_side = 7;
  int filters = 8;      // per stage; also the number of bits in a hash value
  int pool_window = 2;
  int pool_stride = 2;
  int block_rows = 4;
  int block_cols = 4;
  int frame_cap = 200;  // training frames sampled for filter learning

  int bins() const { return 1 << filters; }
  // block_rows * block_cols * bins * filters; 32,768 with the defaults.
  std::size_t feature_dim() const {
    return static_cast<std::size_t>(block_rows) * block_cols * bins() * filters;
  }
  // Side length after pooling a side of length n (ragged edges kept).
  int pooled_side(int n) const;
  void Validate() const;
};

enum class PatchMode { kValid, kSame };

// PCA eigenfilters of one stage, ordered by descending eigenvalue.
struct FilterBank {
  int stage = 1;
  int patch_side = 7;
  std::vector<std::vector<double>> filters;  // each patch_side^2, row-major
  std::vector<double> eigenvalues;           // of the scatter matrix

  int size() const { return static_cast<int>(filters.size()); }
};

// Integer image of stacked sign bits.
struct HashImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> values;

  std::uint16_t at(int r, int c) const {
    return values[static_cast<std::size_t>(r) * width + c];
  }
  bool operator==(const HashImage&) const = default;
};

// One row per patch, row-major vectorized with its own mean removed. Patches
// are ordered by top-left position, row-major.
Matrix ExtractPatches(const GrayImage& image, int k, PatchMode mode);

// Sum of outer products of the rows of `patches`, accumulated into `scatter`
// (k^2 x k^2).
void AccumulateScatter(const Matrix& patches, Matrix& scatter);

// Top-L eigenvectors of a scatter matrix. Each filter's largest-magnitude
// entry is positive. Throws when the numerical rank is below L.
FilterBank FiltersFromScatter(const Matrix& scatter, int L, int stage);
FilterBank LearnFilters(const Matrix& patches, int L, int stage = 1);

// Zero-padded same-size correlation of one image with every filter.
std::vector<GrayImage> Convolve(const GrayImage& image, const FilterBank& bank);
// Zero-padded same-size correlation with a single k x k kernel.
GrayImage Correlate(const GrayImage& image, std::span<const double> kernel, int k);
// Convolve applied to every image.
std::vector<std::vector<GrayImage>> StageForward(std::span<const GrayImage> images,
                                                 const FilterBank& bank);

// value(p) = sum_l 2^l * [maps[l](p) > 0], l counted from 0.
HashImage BinarizeAndStack(std::span<const GrayImage> maps, int expected_maps = 8);

HashImage MaxPool(const HashImage& image, int window = 2, int stride = 2);
GrayImage MaxPool(const GrayImage& image, int window = 2, int stride = 2);

// Raw counts of a grid of non-overlapping blocks, concatenated block-row-major.
// The last block row/column absorbs remainder pixels.
std::vector<double> BlockHistograms(const HashImage& image, int grid_rows, int grid_cols,
                                    int bins);

// Stage-1 bank learned from patches of the (subsampled) training frames.
FilterBank LearnStage1(std::span<const GrayImage> frames, const Config& config);
// Stage-2 bank learned jointly from patches of every stage-1 output map.
FilterBank LearnStage2(std::span<const GrayImage> frames, const FilterBank& stage1,
                       const Config& config);

// Uniform subsample of at most `cap` indices from [0, n).
std::vector<std::size_t> SubsampleIndices(std::size_t n, int cap);

// Full per-frame feature: for each stage-1 map (in filter order), hash its
// stage-2 responses, pool, and take block histograms.
std::vector<double> ExtractFeature(const GrayImage& frame, const FilterBank& stage1,
                                   const FilterBank& stage2, const Config& config);

// Text header line "LIPFBANK stage=S k=K L=L config=HASH" followed by
// little-endian f64 filter entries, filters in order.
void SaveFilterBank(const std::filesystem::path& path, const FilterBank& bank,
                    const std::string& config_hash);
FilterBank LoadFilterBank(const std::filesystem::path& path, std::string* config_hash = nullptr);

}  // namespace lipread::pcanet

#endif  // LIPREAD_PCANET_H_
