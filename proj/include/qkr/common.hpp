#pragma once

#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>

namespace qkr {

inline constexpr double kPi = std::numbers::pi;

// splitmix64 finalizer; the basis for deriving independent child seeds
// from a single master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Child seed for the given stream id. Distinct streams of one master seed
// are statistically independent, so parallel consumers stay deterministic.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x51ed270b0a1c2ULL));
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(master, a), b);
}

// Round-trip safe decimal formatting, used by every CSV/JSON writer so that
// equal inputs produce byte-identical files.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace qkr
