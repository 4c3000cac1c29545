#include "specshare/rng.hpp"

#include <sstream>

namespace specshare {

Rng make_stream(std::uint64_t seed, std::string_view name, std::uint64_t index) {
  const std::uint64_t tag = fnv1a64(name);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng rng_from_state(const std::string& state) {
  Rng rng;
  std::istringstream is(state);
  is >> rng;
  return rng;
}

}  // namespace specshare
