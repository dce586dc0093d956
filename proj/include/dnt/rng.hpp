#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "dnt/errors.hpp"

namespace dnt {

// Deterministic RNG built on splitmix64. All distributions are implemented
// here rather than via <random> so that streams are bit-identical across
// compilers and standard libraries. Every consumer derives its own stream
// from the root seed and a stream name, so adding a consumer never perturbs
// the draws seen by the others.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // Avoid the all-zero fixed point and decorrelate small seeds.
        next_u64();
        next_u64();
    }

    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t z = a + 0x9e3779b97f4a7c15ULL + (b << 1 | 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t hash_name(std::string_view name) {
        // FNV-1a.
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : name) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    // Named sub-stream of a root seed.
    static Rng substream(std::uint64_t root_seed, std::string_view name) {
        return Rng(mix(root_seed, hash_name(name)));
    }

    // Indexed sub-stream (e.g. one per round or per client).
    static Rng substream(std::uint64_t root_seed, std::string_view name, std::uint64_t index) {
        return Rng(mix(mix(root_seed, hash_name(name)), index));
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (hi < lo) throw DomainError("uniform_int: empty range");
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(next_u64() % span);
    }

    // Standard normal via Box-Muller (no cached spare, keeps the stream
    // position independent of call history).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::uint64_t state_;
};

}  // namespace dnt
