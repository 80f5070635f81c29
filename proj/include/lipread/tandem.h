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

#ifndef LIPREAD_TANDEM_H_
#define LIPREAD_TANDEM_H_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lipread/matrix.h"

namespace lipread::tandem {

inline constexpr double kDefaultFloor = 1e-8;
inline constexpr int kDefaultDeltaWindow = 2;

// log(max(p, floor)) elementwise. Throws on negative entries.
Matrix LogFeatures(const Matrix& posteriors, double floor = kDefaultFloor);

// Regression deltas over +-window frames with edge replication:
//   d_t = sum_k k (c_{t+k} - c_{t-k}) / (2 sum_k k^2).
Matrix Delta(const Matrix& seq, int window = kDefaultDeltaWindow);

// [statics | delta | delta of delta] from already-logged features.
Matrix AppendDynamics(const Matrix& statics, int window = kDefaultDeltaWindow);

// Log-posteriors with delta and acceleration; 3 * C columns.
Matrix Assemble(const Matrix& posteriors, double floor = kDefaultFloor,
                int window = kDefaultDeltaWindow);

// Row-wise concatenation of per-view matrices. `names` label the views in
// error messages and must match `views` in size.
Matrix ConcatRows(std::span<const Matrix> views, std::span<const std::string> names);

// Fuses per-view posteriors: concatenated log-posteriors, then one
// delta/acceleration pass; 3 * C * V columns.
Matrix ConcatViews(std::span<const Matrix> posteriors, std::span<const std::string> names,
                   double floor = kDefaultFloor, int window = kDefaultDeltaWindow);

// Canonical fusion order 0, 30, 45, 60, 90 restricted to `views`.
std::vector<int> CanonicalViewOrder(std::span<const int> views);

struct SidecarHeader {
  int classes = 0;
  int views = 0;
  int window = kDefaultDeltaWindow;
  double floor = kDefaultFloor;
  std::vector<int> view_order;
  std::string config_hash;

  std::string ToText() const;
  static SidecarHeader Parse(const std::string& text, const std::string& origin);
};

}  // namespace lipread::tandem

#endif  // LIPREAD_TANDEM_H_
