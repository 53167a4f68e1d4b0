#pragma once

#include <cmath>
#include <cstdint>

namespace dynbatch {

// splitmix64: tiny, fast, well-mixed 64-bit generator.  We use it directly
// instead of <random> engines/distributions so that streams are bit-identical
// across platforms and standard-library versions.
class splitmix64 {
public:
    explicit splitmix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in (0, 1]: never returns 0 so -log(u) is always finite.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    // Exponential with the given rate, by inversion.
    double next_exponential(double rate) {
        return -std::log(next_uniform()) / rate;
    }

private:
    std::uint64_t state_;
};

// Derives an independent-looking substream from (seed, stream id).  Used to
// keep the arrival process identical across policies while service draws vary.
inline splitmix64 make_stream(std::uint64_t seed, std::uint64_t stream) {
    splitmix64 mixer(seed ^ (0x6a09e667f3bcc909ULL * (stream + 1)));
    return splitmix64(mixer.next_u64());
}

}  // namespace dynbatch
