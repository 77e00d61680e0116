#pragma once

// Trial-level parallelism. Every Monte Carlo estimator writes its per-trial
// result into a slot indexed by trial number and aggregates serially
// afterwards, so the serial path is the reference the OpenMP path must match
// bit for bit.

#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>

namespace bratteli {

enum class Execution { serial, parallel };

/// Worker count used by Execution::parallel. Reads BRATTELI_WORKERS on first use.
int worker_count();
void set_worker_count(int workers);

template <class Fn>
void for_each_trial(std::size_t trials, Execution exec, Fn&& fn) {
  if (exec == Execution::serial || trials < 2) {
    for (std::size_t t = 0; t < trials; ++t) fn(t);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto count = static_cast<std::int64_t>(trials);
#pragma omp parallel for schedule(dynamic, 8) num_threads(worker_count())
  for (std::int64_t t = 0; t < count; ++t) {
    try {
      fn(static_cast<std::size_t>(t));
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace bratteli
