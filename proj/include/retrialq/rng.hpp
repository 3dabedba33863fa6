#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace retrialq {

// splitmix64: used to derive independent per-stream seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(splitmix64(master) ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 1));
}

// Deterministic uniform/exponential sampling on top of mt19937_64.
// The uint64 -> double mapping is fixed here (not the implementation-defined
// std::uniform_real_distribution) so that streams are reproducible everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // strictly inside (0,1)
    double uniform01() {
        const std::uint64_t x = gen_();
        return static_cast<double>(x >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    double exponential(double rate) { return -std::log(uniform01()) / rate; }

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

}  // namespace retrialq
