// Copyright Contributors to the pvsm project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>

namespace pvsm {

namespace detail {

inline constexpr std::uint64_t
splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace detail

/// Counter-based random stream: value k of stream (seed, tag) is a pure hash
/// of (seed, tag, k). Streams with different tags are independent, and any
/// value can be computed without generating its predecessors.
class CounterRng {
  public:
    constexpr CounterRng(std::uint64_t seed, std::uint64_t tag)
        : mKey(detail::splitmix64(detail::splitmix64(seed) ^ detail::splitmix64(~tag))) {}

    constexpr std::uint64_t
    bits(std::uint64_t counter) const {
        return detail::splitmix64(mKey ^ detail::splitmix64(counter));
    }

    /// Uniform double in [0, 1) with 53 random bits.
    constexpr double
    uniform(std::uint64_t counter) const {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
    }

    double
    uniform(std::uint64_t counter, double lo, double hi) const {
        return lo + (hi - lo) * uniform(counter);
    }

    /// Integer in [0, n) via 128-bit multiply (n > 0).
    std::uint64_t
    below(std::uint64_t counter, std::uint64_t n) const {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(bits(counter)) * n) >> 64);
    }

  private:
    std::uint64_t mKey;
};

/// Sequential view over a CounterRng.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t tag) : mRng(seed, tag) {}

    double
    uniform() {
        return mRng.uniform(mCounter++);
    }
    double
    uniform(double lo, double hi) {
        return mRng.uniform(mCounter++, lo, hi);
    }
    std::uint64_t
    below(std::uint64_t n) {
        return mRng.below(mCounter++, n);
    }
    /// Standard normal (Box–Muller, consumes two counters).
    double
    normal() {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

  private:
    CounterRng mRng;
    std::uint64_t mCounter = 0;
};

} // namespace pvsm
