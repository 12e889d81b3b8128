#include "pnpunmix/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace pnpunmix {

int threadCount() {
  const char* env = std::getenv(kThreadsEnv);
  if (env != nullptr && *env != '\0') {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
      // Unparseable values fall back to all cores.
    }
  }
  return omp_get_num_procs();
}

}  // namespace pnpunmix
