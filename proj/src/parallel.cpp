#include "selfvocab/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>

namespace selfvocab::par {

namespace {

std::atomic<int> g_override{0};

int env_threads() {
  const char *env = std::getenv("SELFVOCAB_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  char *end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (end == env || v <= 0) return 0;
  if (v > 256) v = 256;
  return static_cast<int>(v);
}

int hardware_threads() {
#ifdef _OPENMP
  int n = omp_get_max_threads();
#else
  int n = static_cast<int>(std::thread::hardware_concurrency());
#endif
  return n > 0 ? n : 1;
}

} // namespace

int thread_count() {
  int forced = g_override.load(std::memory_order_relaxed);
  if (forced > 0) return forced;
  int env = env_threads();
  if (env > 0) return env;
  return hardware_threads();
}

void set_thread_count(int n) {
  g_override.store(n > 0 ? n : 0, std::memory_order_relaxed);
}

} // namespace selfvocab::par
