#pragma once

#include <cstdint>

#include "kdc/types.hpp"

namespace kdc {

// SplitMix64 (Steele/Lea/Flood variant, the one used to seed the xoshiro
// family). 64-bit state advanced by the golden-ratio increment, output via
// the murmur-style finalizer. Version tag: "splitmix64-v1".
inline constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline uint64_t splitmix_finalize(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

class SplitMix64 {
  public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += kGolden;
        return splitmix_finalize(state_);
    }

    // uniform in [0, 1), 53 mantissa bits
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // standard normal, Box-Muller (pairs cached)
    double next_normal();

  private:
    uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Documented stream-derivation rule: independent substream seeds are
// stream(master, i) = finalize(master + finalize(i + golden)).
inline uint64_t derive_stream(uint64_t master, uint64_t index) {
    return splitmix_finalize(master + splitmix_finalize(index + kGolden));
}

// ── random objects for searches and tests ─────────────────────────────────
CVector random_unit_vector(int d, SplitMix64& rng);
CMatrix random_unitary(int d, SplitMix64& rng);        // Haar (QR with phase fix)
CMatrix random_density_matrix(int d, SplitMix64& rng); // Ginibre GG†/Tr

}  // namespace kdc
