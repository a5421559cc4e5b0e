#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pigan::parallel {

struct Chunk {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

/// Splits [0, n) into fixed-size chunks. Chunk boundaries depend only on
/// `n` and `chunk_size`, never on the number of threads, which is what makes
/// the ordered reductions below reproducible.
inline std::vector<Chunk> make_chunks(std::size_t n, std::size_t chunk_size) {
  std::vector<Chunk> chunks;
  if (chunk_size == 0) chunk_size = 1;
  for (std::size_t b = 0; b < n; b += chunk_size)
    chunks.push_back({b, b + chunk_size < n ? b + chunk_size : n});
  return chunks;
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

/// Runs `body(i)` for i in [0, n) across OpenMP threads. The first exception
/// thrown by any iteration is rethrown on the calling thread.
template <class Body>
void for_each_index(std::size_t n, Body&& body) {
  std::exception_ptr error;
  std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace pigan::parallel
