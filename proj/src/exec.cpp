#include "bip/exec.hpp"

#include <cstdlib>
#include <string>

namespace bip {

void configure_threads_from_env() {
#ifdef BIP_USE_OPENMP
  if (const char* env = std::getenv("BIP_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1) omp_set_num_threads(cap);
    } catch (const std::exception&) {
      // Malformed values leave the OpenMP default in place.
    }
  }
#endif
}

int max_threads() {
#ifdef BIP_USE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace bip
