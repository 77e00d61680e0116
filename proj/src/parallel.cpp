#include "bratteli/parallel.hpp"

#include <omp.h>

#include <atomic>
#include <cstdlib>
#include <string>

namespace bratteli {

namespace {

int workers_from_environment() {
  if (const char* env = std::getenv("BRATTELI_WORKERS")) {
    try {
      const int value = std::stoi(env);
      if (value > 0) return value;
    } catch (const std::exception&) {
      // fall through to the OpenMP default
    }
  }
  return omp_get_max_threads();
}

std::atomic<int>& configured_workers() {
  static std::atomic<int> workers{workers_from_environment()};
  return workers;
}

}  // namespace

int worker_count() { return configured_workers().load(std::memory_order_relaxed); }

void set_worker_count(int workers) {
  configured_workers().store(workers > 0 ? workers : 1, std::memory_order_relaxed);
}

}  // namespace bratteli
