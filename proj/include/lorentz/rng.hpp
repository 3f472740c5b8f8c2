#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

namespace lorentz {

namespace detail {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

} // namespace detail

/// Counter-based random stream.
///
/// A stream is identified by (seed, stream id); the i-th output is a pure
/// function of (seed, stream id, i), so streams can be split off for trials
/// and replicas without any shared state. Satisfies UniformRandomBitGenerator.
///
/// All derived draws (uniform, bounded, geometric) are implemented here so
/// that results are bit-identical across standard libraries.
class Rng
{
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : seed_(seed)
        , stream_(stream)
        , key_(detail::mix64(seed ^ detail::mix64(stream + detail::kGolden)))
    {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept
    {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept
    {
        return detail::mix64(key_ + (++counter_) * detail::kGolden);
    }

    /// Child stream; independent of this stream's position.
    Rng split(std::uint64_t child) const noexcept
    {
        return Rng(detail::mix64(key_ ^ detail::mix64(child)), child);
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }
    std::uint64_t counter() const noexcept { return counter_; }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept
    {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n); n > 0. Lemire's method with rejection.
    std::uint64_t below(std::uint64_t n) noexcept
    {
        std::uint64_t x = (*this)();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                x = (*this)();
                m = static_cast<__uint128_t>(x) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// P(k) = (1/2)^(k+1), k >= 0: number of leading one-bits of fair coins.
    std::uint32_t geometric_half() noexcept
    {
        std::uint32_t k = 0;
        for (;;) {
            const std::uint64_t x = (*this)();
            const int ones = std::countr_one(x);
            k += static_cast<std::uint32_t>(ones);
            if (ones < 64)
                return k;
        }
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace lorentz
