// Copyright 2026 The tune-probe Authors.
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

#ifndef TUNEPROBE_PARALLEL_H_
#define TUNEPROBE_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace tuneprobe {

// Worker count from TUNE_PROBE_JOBS, or 1 when unset or invalid.
int default_jobs();

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Items are handed out
// in index order; fn must only touch state owned by item i. The first
// exception thrown by any item is rethrown after all workers join.
void parallel_for(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& fn);

}  // namespace tuneprobe

#endif  // TUNEPROBE_PARALLEL_H_
