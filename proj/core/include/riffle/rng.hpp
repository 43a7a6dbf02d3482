#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace riffle {

/// splitmix64 finalizer; full-period 64-bit mixer.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Seedable xoshiro256** generator with pure stream derivation.
///
/// All randomized behavior in the library flows through this generator so
/// that outputs are reproducible across runs and compilers for a fixed
/// seed. `stream(tag)` derives an independent generator purely from the
/// root seed and the tag, never from consumed state, so derivation order
/// does not matter.
class Rng {
public:
    static constexpr std::string_view kName = "xoshiro256ss";

    explicit Rng(std::uint64_t seed) noexcept : root_(seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) {
            sm += 0x9e3779b97f4a7c15ull;
            word = mix64(sm);
        }
    }

    /// Derived generator, independent of this one's consumption.
    [[nodiscard]] Rng stream(std::uint64_t tag) const noexcept {
        return Rng(mix64(root_ ^ mix64(tag + 0x1d8e4e27c47d124full)));
    }

    [[nodiscard]] std::uint64_t root_seed() const noexcept { return root_; }

    std::uint64_t next() noexcept {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Unbiased uniform draw from [0, n). n must be nonzero.
    std::uint64_t bounded(std::uint64_t n) noexcept {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

    /// Uniform double in [0, 1).
    double next_double() noexcept {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::span<T> items) noexcept {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(bounded(i));
            if (j != i - 1) {
                using std::swap;
                swap(items[i - 1], items[j]);
            }
        }
    }

private:
    [[nodiscard]] static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t root_;
    std::array<std::uint64_t, 4> state_{};
};

}  // namespace riffle
