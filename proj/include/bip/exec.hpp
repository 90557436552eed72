#pragma once

#include <cstdint>
#include <exception>
#include <mutex>

#ifdef BIP_USE_OPENMP
#include <omp.h>
#endif

namespace bip {

/// Execution policy for feature-indexed kernels. `serial` is the reference
/// path; `parallel` spreads the same loop body over OpenMP threads. Both
/// produce identical draws because every index owns its random stream.
enum class Exec { serial, parallel };

/// Applies BIP_THREADS (if set) as an upper bound on the OpenMP team size.
void configure_threads_from_env();

int max_threads();

template <class Body>
void for_each_index(Exec exec, std::int64_t count, Body&& body) {
#ifdef BIP_USE_OPENMP
  if (exec == Exec::parallel && count > 1 && !omp_in_parallel()) {
    std::exception_ptr error;
    std::mutex error_mutex;
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
    return;
  }
#endif
  (void)exec;
  for (std::int64_t i = 0; i < count; ++i) body(i);
}

}  // namespace bip
