#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace arhgls {

/// splitmix64 step; used to expand seeds into generator state.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// xoshiro256++ stream with a Box-Muller Gaussian source. Bit-stable across
/// platforms (no std::distribution involved), so fixed seeds reproduce byte
///-identical experiment output regardless of thread count or standard
/// library.
class RngStream {
public:
    /// Expands a 64-bit key into generator state via splitmix64.
    static RngStream from_key(std::uint64_t key) {
        RngStream r;
        for (auto& word : r.state_) word = splitmix64(key);
        return r;
    }

    /// Independent stream for a repetition index: mixes (seed, index) into a
    /// fresh key so repetitions can run concurrently and reduction order
    /// never affects results.
    static RngStream for_repetition(std::uint64_t seed, std::uint64_t index) {
        std::uint64_t key = seed ^ (0x9E3779B97F4A7C15ULL * (index + 1));
        return from_key(splitmix64(key));
    }

    std::uint64_t next() {
        auto rotl = [](std::uint64_t x, int k) {
            return (x << k) | (x >> (64 - k));
        };
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform draw in (0, 1]; never 0 so log() below stays finite.
    double uniform01() {
        return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; the pair's second value is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u = uniform01();
        const double v = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u));
        const double theta = 2.0 * 3.14159265358979323846 * v;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace arhgls
