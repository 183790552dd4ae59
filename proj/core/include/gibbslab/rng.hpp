#pragma once

#include <cstdint>

namespace gibbslab {

// Counter-free splittable generator. Streams derived with derive() are
// independent of thread scheduling, so sampling results depend only on the
// master seed, never on the number of worker threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Deterministic child stream for the given index.
  static Rng derive(std::uint64_t seed, std::uint64_t index) {
    Rng mix(seed ^ (0xd1342543de82ef95ull * (index + 1)));
    std::uint64_t s = mix.next_u64();
    s ^= mix.next_u64() << 1;
    return Rng(s);
  }

 private:
  std::uint64_t state_;
};

}  // namespace gibbslab
