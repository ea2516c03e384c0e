#include "lmor/parallel.hpp"

#include <cstdlib>
#include <string>

namespace lmor {

void configure_threads_from_env() {
  const char* value = std::getenv("LMOR_NUM_THREADS");
  if (!value || !*value) return;
  int n = 0;
  try {
    n = std::stoi(value);
  } catch (const std::exception&) {
    return;
  }
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace lmor
