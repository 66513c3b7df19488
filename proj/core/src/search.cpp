#include <cstdlib>
#include <string>

#include "gopforge/search.hpp"

namespace gopforge {

std::size_t resolve_workers(std::optional<std::size_t> requested) {
  if (const char* env = std::getenv("GOPFORGE_WORKERS"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(env, &used);
      if (used == std::string(env).size() && v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw ValidationError("GOPFORGE_WORKERS must be a positive integer, got '" + std::string(env) +
                          "'");
  }
  return requested.value_or(1) == 0 ? 1 : requested.value_or(1);
}

}  // namespace gopforge
