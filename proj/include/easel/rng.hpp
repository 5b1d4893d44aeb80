// Counter-based deterministic random stream. Same seed gives the same draw
// sequence regardless of platform or thread count; substreams are cheap and
// independent, which lets parallel code assign one stream per work item.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

#include "easel/types.hpp"

namespace easel {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return h;
}

}  // namespace detail

class RngStream {
public:
    RngStream() : RngStream(0) {}
    explicit RngStream(std::uint64_t seed) : key_(detail::mix64(seed + detail::kGolden)) {}

    // Independent stream addressed by (parent key, id); counter restarts at 0.
    RngStream substream(std::uint64_t id) const {
        RngStream s;
        s.key_ = detail::mix64(key_ ^ detail::mix64(id * detail::kGolden + 0x632BE59BD9B4E019ull));
        s.counter_ = 0;
        return s;
    }

    RngStream substream(std::string_view name) const { return substream(detail::fnv1a(name)); }

    std::uint64_t next_u64() { return detail::mix64(key_ + (++counter_) * detail::kGolden); }

    // Uniform in (0, 1]; never returns 0 so log(u) is safe.
    double uniform() {
        return ((next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; consumes two uniforms per draw.
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Image-shaped standard-normal draw in row-major pixel order.
    Image normal_image(const ImageGrid& grid) {
        Image z(grid);
        for (double& v : z.values) v = normal();
        return z;
    }

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace easel
