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

#ifndef LIPREAD_PARALLEL_H_
#define LIPREAD_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace lipread {

// Worker count used by ParallelFor. Defaults to the LIPREAD_THREADS
// environment variable, else 1.
int NumThreads();
void SetNumThreads(int n);

// Runs body(i) for i in [0, n). Every index is visited exactly once; callers
// write results into per-index slots so output never depends on the worker
// count.
void ParallelFor(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace lipread

#endif  // LIPREAD_PARALLEL_H_
