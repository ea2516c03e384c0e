#pragma once

#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lmor {

/// Selects the serial reference loop or the OpenMP loop of a kernel.
/// Both produce bit-identical results: parallel loops only write disjoint
/// outputs, and every reduction is finished serially in a fixed order.
enum class Exec { serial, parallel };

/// Runs fn(i) for i in [0, n). Exceptions thrown by fn are rethrown on the
/// calling thread (the first one wins).
template <class Fn>
void for_each_index(long n, Exec exec, Fn&& fn) {
  if (exec == Exec::serial || n < 2) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex guard;
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      std::lock_guard lock(guard);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Applies a worker count from the LMOR_NUM_THREADS environment variable.
void configure_threads_from_env();

}  // namespace lmor
