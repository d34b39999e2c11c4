#pragma once

#include <cmath>
#include <cstdint>
#include <concepts>
#include <string_view>
#include <vector>

namespace cpdp::rng {

// splitmix64 step; used both as a generator seeder and as a mixing function.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace detail {
inline void mix_in(std::uint64_t& h, std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    std::uint64_t s = h;
    h = splitmix64(s);
}
template <typename T>
    requires std::integral<T>
void mix_one(std::uint64_t& h, T v) {
    mix_in(h, static_cast<std::uint64_t>(v));
}
inline void mix_one(std::uint64_t& h, std::string_view s) {
    mix_in(h, 0x7f4a7c15ULL);
    for (char c : s) mix_in(h, static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
}
}  // namespace detail

// Derives an independent stream seed from a base seed and a tag path, so the
// same base seed can feed many named purposes without draw-order coupling.
template <typename... Tags>
std::uint64_t derive(std::uint64_t base, Tags&&... tags) {
    std::uint64_t h = base ^ 0xd6e8feb86659fd93ULL;
    (detail::mix_one(h, std::forward<Tags>(tags)), ...);
    std::uint64_t s = h;
    return splitmix64(s);
}

// Deterministic xoshiro-free generator: splitmix64 sequence. All floating
// draws are built from raw 64-bit words, so behaviour is identical across
// standard libraries.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() { return splitmix64(state_); }

    /// Uniform draw in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi], inclusive.
    long long uniform_int(long long lo, long long hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1ULL;
        return lo + static_cast<long long>(next() % span);
    }

    /// Uniform index in [0, n).
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(next() % n); }

    /// Standard normal via Box-Muller; consumes exactly two uniforms.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace cpdp::rng
