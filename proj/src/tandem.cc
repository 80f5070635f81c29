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

#include "lipread/tandem.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "lipread/dataio.h"
#include "lipread/error.h"

namespace lipread::tandem {

Matrix LogFeatures(const Matrix& posteriors, double floor) {
  Matrix out(posteriors.rows(), posteriors.cols());
  for (std::size_t i = 0; i < posteriors.values().size(); ++i) {
    const double p = posteriors.values()[i];
    if (p < 0.0 || std::isnan(p)) {
      Fail(ErrorKind::kRange, "negative or NaN posterior at row " +
                                  std::to_string(i / std::max<std::size_t>(1, posteriors.cols())));
    }
    out.values()[i] = std::log(std::max(p, floor));
  }
  return out;
}

Matrix Delta(const Matrix& seq, int window) {
  if (window < 1) Fail(ErrorKind::kArgument, "delta window must be >= 1");
  const auto T = static_cast<long>(seq.rows());
  const std::size_t K = seq.cols();
  Matrix out(seq.rows(), K);
  if (T == 0) return out;
  double norm = 0.0;
  for (int k = 1; k <= window; ++k) norm += k * k;
  norm *= 2.0;
  auto clamp = [&](long t) { return static_cast<std::size_t>(std::clamp(t, 0L, T - 1)); };
  for (long t = 0; t < T; ++t) {
    auto d = out.row(static_cast<std::size_t>(t));
    for (int k = 1; k <= window; ++k) {
      const auto ahead = seq.row(clamp(t + k));
      const auto behind = seq.row(clamp(t - k));
      for (std::size_t j = 0; j < K; ++j) d[j] += k * (ahead[j] - behind[j]);
    }
    for (double& v : d) v /= norm;
  }
  return out;
}

Matrix AppendDynamics(const Matrix& statics, int window) {
  const Matrix d = Delta(statics, window);
  const Matrix a = Delta(d, window);
  const std::size_t C = statics.cols();
  Matrix out(statics.rows(), 3 * C);
  for (std::size_t t = 0; t < statics.rows(); ++t) {
    auto row = out.row(t);
    std::copy(statics.row(t).begin(), statics.row(t).end(), row.begin());
    std::copy(d.row(t).begin(), d.row(t).end(), row.begin() + static_cast<long>(C));
    std::copy(a.row(t).begin(), a.row(t).end(), row.begin() + static_cast<long>(2 * C));
  }
  return out;
}

Matrix Assemble(const Matrix& posteriors, double floor, int window) {
  return AppendDynamics(LogFeatures(posteriors, floor), window);
}

Matrix ConcatRows(std::span<const Matrix> views, std::span<const std::string> names) {
  if (views.empty()) Fail(ErrorKind::kArgument, "no views to concatenate");
  if (names.size() != views.size()) Fail(ErrorKind::kArgument, "one name per view required");
  std::size_t cols = 0;
  for (std::size_t v = 0; v < views.size(); ++v) {
    if (views[v].rows() != views[0].rows()) {
      Fail(ErrorKind::kDimension, "view " + names[v] + " has " + std::to_string(views[v].rows()) +
                                      " frames but view " + names[0] + " has " +
                                      std::to_string(views[0].rows()));
    }
    cols += views[v].cols();
  }
  Matrix out(views[0].rows(), cols);
  for (std::size_t t = 0; t < out.rows(); ++t) {
    auto dst = out.row(t).begin();
    for (const auto& m : views) dst = std::copy(m.row(t).begin(), m.row(t).end(), dst);
  }
  return out;
}

Matrix ConcatViews(std::span<const Matrix> posteriors, std::span<const std::string> names,
                   double floor, int window) {
  std::vector<Matrix> logs;
  logs.reserve(posteriors.size());
  for (const auto& p : posteriors) logs.push_back(LogFeatures(p, floor));
  return AppendDynamics(ConcatRows(logs, names), window);
}

std::vector<int> CanonicalViewOrder(std::span<const int> views) {
  std::vector<int> out;
  for (int v : kViews) {
    if (std::find(views.begin(), views.end(), v) != views.end()) out.push_back(v);
  }
  for (int v : views) {
    if (!IsKnownView(v)) Fail(ErrorKind::kArgument, "unknown view " + std::to_string(v));
  }
  if (out.size() != views.size()) Fail(ErrorKind::kArgument, "a view is listed twice");
  return out;
}

std::string SidecarHeader::ToText() const {
  char floor_text[64];
  std::snprintf(floor_text, sizeof(floor_text), "%.17g", floor);
  std::string text = "LIPTANDEM\nclasses=" + std::to_string(classes) +
                     "\nviews=" + std::to_string(views) + "\ndelta_window=" +
                     std::to_string(window) + "\nfloor=" + floor_text + "\nview_order=";
  for (std::size_t i = 0; i < view_order.size(); ++i) {
    text += (i ? "," : "") + std::to_string(view_order[i]);
  }
  text += "\nconfig=" + (config_hash.empty() ? std::string("-") : config_hash) + "\n";
  return text;
}

SidecarHeader SidecarHeader::Parse(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "LIPTANDEM") {
    Fail(ErrorKind::kFormat, origin + ": not a tandem sidecar header");
  }
  SidecarHeader h;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    try {
      if (key == "classes") h.classes = std::stoi(value);
      else if (key == "views") h.views = std::stoi(value);
      else if (key == "delta_window") h.window = std::stoi(value);
      else if (key == "floor") h.floor = std::stod(value);
      else if (key == "config") h.config_hash = value;
      else if (key == "view_order") {
        std::istringstream vs(value);
        std::string item;
        while (std::getline(vs, item, ',')) h.view_order.push_back(std::stoi(item));
      }
    } catch (const std::logic_error&) {
      Fail(ErrorKind::kFormat, origin + ": bad value for " + key + ": '" + value + "'");
    }
  }
  if (h.classes < 1 || h.views < 1 || h.window < 1 || !(h.floor > 0.0) ||
      static_cast<int>(h.view_order.size()) != h.views) {
    Fail(ErrorKind::kFormat, origin + ": incomplete tandem sidecar header");
  }
  return h;
}

}  // namespace lipread::tandem
