// Copyright 2026 The Nightlights Authors.
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

#ifndef NIGHTLIGHTS_PARALLEL_H_
#define NIGHTLIGHTS_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace nightlights {

// Upper bound on worker threads used by library routines. 0 selects the
// hardware concurrency. Results never depend on this value.
void SetMaxThreads(int threads);
int MaxThreads();

// Calls fn(i) for every i in [0, n). Work items are independent; callers are
// responsible for writing results into per-index slots so that the outcome
// is independent of scheduling. The first exception thrown is rethrown.
void ParallelFor(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace nightlights

#endif  // NIGHTLIGHTS_PARALLEL_H_
