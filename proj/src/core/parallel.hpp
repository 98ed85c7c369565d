// Copyright 2026 The em2g Authors
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

#ifndef EM2G_CORE_PARALLEL_HPP_
#define EM2G_CORE_PARALLEL_HPP_

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace em2g
{

/// Rows per reduction chunk. Even, so stabilized (x, -x) pairs never straddle
/// a chunk boundary. Fixed independently of the worker count: partial results
/// are combined in chunk order, which keeps every reduction bit-identical for
/// any number of workers.
inline constexpr std::size_t kChunkRows = 4096;

/// Calls fn(task_index) for every task in [0, n_tasks), spread over up to
/// `workers` threads. The first exception thrown by a task is rethrown.
template <class Fn>
void parallel_for(std::size_t n_tasks, int workers, Fn && fn)
{
  const auto n_threads =
    static_cast<std::size_t>(std::max(1, std::min<int>(workers, static_cast<int>(n_tasks))));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n_tasks) {
        return;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
        next.store(n_tasks);
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) {
    threads.emplace_back(worker);
  }
  for (auto & t : threads) {
    t.join();
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
}

/// Fixed-tree reduction over [0, n): fn(begin, end) produces a partial for
/// each kChunkRows-sized chunk; partials are added in chunk order.
template <class T, class Fn>
T chunked_sum(std::size_t n, int workers, T zero, Fn && fn)
{
  const std::size_t n_chunks = (n + kChunkRows - 1) / kChunkRows;
  std::vector<T> partials(n_chunks, zero);
  parallel_for(n_chunks, workers, [&](std::size_t c) {
    const std::size_t begin = c * kChunkRows;
    const std::size_t end = std::min(n, begin + kChunkRows);
    partials[c] = fn(begin, end);
  });
  T total = zero;
  for (const auto & p : partials) {
    total += p;
  }
  return total;
}

}  // namespace em2g

#endif  // EM2G_CORE_PARALLEL_HPP_
