#pragma once

#include <cstdint>

// Deterministic, platform-independent pseudo-random primitives.
//
// Every random decision in the simulator is keyed to (seed, stream, counter)
// so that any packet-level decision can be replayed in isolation. Standard
// <random> distributions are avoided on purpose: their output is not
// specified bit-exactly by the standard, and byte-identical replay across
// toolchains is a hard requirement here.

namespace voipsteg::rng {

// Fixed stream tags keep independent decision sequences from aliasing even
// when they share a call seed.
enum : std::uint64_t {
    kStreamInit = 1,      // initial seq / timestamp / ssrc
    kStreamPayload = 2,   // synthetic voice samples
    kStreamSlots = 3,     // encapsulation header slot values
    kStreamLoss = 4,      // per-packet drop decisions
    kStreamJitter = 5,    // per-packet jitter draws
    kStreamLack = 6,      // LACK Bernoulli selection
    kStreamAuthTag = 7,   // opaque SRTP auth-tag bytes
    kStreamRtcp = 8,      // RTCP report-block filler
    kStreamWarden = 9,    // warden re-randomized field values
    kStreamMessage = 10,  // covert message material
    kStreamCall = 11,     // per-call seed derivation
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// One 64-bit word keyed to (seed, stream, counter).
inline std::uint64_t keyed(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    return splitmix64(splitmix64(seed ^ splitmix64(stream)) ^ counter);
}

// Uniform double in [0, 1) with 53 significant bits.
inline double unit(std::uint64_t word) {
    return static_cast<double>(word >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, bound]; bound-inclusive so a jitter cap J maps to
// draws over the whole closed interval [0, J]. Modulo bias is < 2^-40 for
// every bound used here.
inline std::uint64_t below(std::uint64_t word, std::uint64_t bound_inclusive) {
    return word % (bound_inclusive + 1);
}

// Counter-based generator: a thin convenience over keyed().
class Sequence {
public:
    Sequence(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

    std::uint64_t next() { return keyed(seed_, stream_, counter_++); }
    double next_unit() { return unit(next()); }
    std::uint64_t next_below(std::uint64_t bound_inclusive) { return below(next(), bound_inclusive); }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

} // namespace voipsteg::rng
