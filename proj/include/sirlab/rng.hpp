#pragma once

// Counter-based 64-bit generator (SplitMix64 finalizer over key + n * golden).
// Every draw is a pure function of (key, counter), so streams are reproducible
// on any platform and replica streams are split by key derivation alone.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>

namespace sirlab {

class Rng {
public:
    explicit Rng(std::uint64_t key = 0) : key_(key) {}

    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Key of replica `index` under `base`: mix(base ^ mix(index + golden)).
    static constexpr std::uint64_t derive(std::uint64_t base, std::uint64_t index) {
        return mix(base ^ mix(index + kGolden));
    }

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t next() noexcept { return mix(key_ + (++counter_) * kGolden); }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform() noexcept { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

    /// Exponential with the given rate, by inversion.
    double exponential(double rate) noexcept { return -std::log(uniform()) / rate; }

    /// Index k with probability cumulative-increment k / total. `cumulative` is
    /// nondecreasing with a positive last entry.
    std::size_t categorical(std::span<const double> cumulative) noexcept {
        const double u = uniform() * cumulative.back();
        std::size_t lo = 0, hi = cumulative.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (u < cumulative[mid]) hi = mid;
            else lo = mid + 1;
        }
        return lo;
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace sirlab
