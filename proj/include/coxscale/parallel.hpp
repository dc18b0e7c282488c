#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace coxscale {

/// Worker count: COXSCALE_THREADS when set to a positive integer, otherwise
/// the hardware concurrency.
inline std::size_t worker_count() {
  std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("COXSCALE_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return hw;
}

/// Outcome of one task in `parallel_map`: a value or the message of the
/// exception it threw.
template <class T>
struct TaskResult {
  std::optional<T> value;
  std::string error;
  bool ok() const { return value.has_value(); }
};

/// Runs fn(0..n_tasks-1) on a pool of workers. Results are stored by task
/// index, so the output never depends on scheduling order.
template <class Fn>
auto parallel_map(std::size_t n_tasks, Fn&& fn, std::size_t n_workers = worker_count())
    -> std::vector<TaskResult<std::invoke_result_t<Fn&, std::size_t>>> {
  using T = std::invoke_result_t<Fn&, std::size_t>;
  std::vector<TaskResult<T>> results(n_tasks);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n_tasks; i = next++) {
      try {
        results[i].value.emplace(fn(i));
      } catch (const std::exception& e) {
        results[i].error = e.what();
      }
    }
  };
  n_workers = std::clamp<std::size_t>(n_workers, 1, std::max<std::size_t>(n_tasks, 1));
  if (n_workers == 1) {
    work();
    return results;
  }
  std::vector<std::jthread> pool;
  pool.reserve(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(work);
  pool.clear();
  return results;
}

}  // namespace coxscale
