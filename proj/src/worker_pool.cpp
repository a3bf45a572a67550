#include "crownbench/worker_pool.hpp"

#include <cstdlib>
#include <string>

#include "crownbench/errors.hpp"

namespace crownbench {

unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CROWNBENCH_WORKERS"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const long v = std::stol(env, &used);
      if (used == std::string(env).size() && v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw ValidationError(std::string("CROWNBENCH_WORKERS must be a positive integer, got '") + env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace crownbench
