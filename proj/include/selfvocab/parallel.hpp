#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace selfvocab::par {

// Number of worker threads used by the data-parallel kernels.
// Resolution order: explicit set_thread_count() > SELFVOCAB_THREADS > hardware.
int thread_count();

// Override the thread budget; 0 restores the environment/hardware default.
void set_thread_count(int n);

// Fixed block size for deterministic reductions. Work is split into blocks of
// this many items; each block's partial result is computed in item order and
// partials are folded in block order, so results do not depend on how many
// threads ran. Floating-point reductions stay bit-identical for any thread
// count because the addition order is fixed by the block structure.
inline constexpr std::size_t kBlockSize = 256;

inline std::size_t block_count(std::size_t n, std::size_t block = kBlockSize) {
  return n == 0 ? 0 : (n + block - 1) / block;
}

// Runs fn(block_index, begin, end) over [0, n) split into kBlockSize blocks.
template <class Fn> void for_each_block(std::size_t n, Fn &&fn) {
  const std::size_t nblocks = block_count(n);
  const int nthreads = thread_count();
  (void)nthreads;
#ifdef _OPENMP
#pragma omp parallel for num_threads(nthreads) schedule(static)
#endif
  for (long long bi = 0; bi < static_cast<long long>(nblocks); ++bi) {
    const std::size_t begin = static_cast<std::size_t>(bi) * kBlockSize;
    const std::size_t end = begin + kBlockSize < n ? begin + kBlockSize : n;
    fn(static_cast<std::size_t>(bi), begin, end);
  }
}

// Element-wise parallel loop for independent per-index work.
template <class Fn> void for_each_index(std::size_t n, Fn &&fn) {
  const int nthreads = thread_count();
  (void)nthreads;
#ifdef _OPENMP
#pragma omp parallel for num_threads(nthreads) schedule(static)
#endif
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    fn(static_cast<std::size_t>(i));
  }
}

} // namespace selfvocab::par
