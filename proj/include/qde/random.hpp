#pragma once

#include <cstdint>
#include <limits>

namespace qde {

/// Independent randomness sources of one simulation run.
enum class StreamRole : std::uint64_t {
    noise = 1,
    dither = 2,
    channel = 3,
    aux = 4,
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t absorb(std::uint64_t state, std::uint64_t word) noexcept {
    return splitmix64(state ^ splitmix64(word + 0x632be59bd9b4e019ULL));
}

} // namespace detail

/// Counter-based random stream keyed by (seed, run, role, entity, step).
///
/// Every key yields its own sequence; draws within a key are indexed by an
/// internal counter. Two streams with the same key produce the same values
/// regardless of what any other stream did, which is what makes runs
/// reproducible in isolation and independent of execution order.
/// Satisfies std::uniform_random_bit_generator.
class CounterStream {
public:
    using result_type = std::uint64_t;

    constexpr CounterStream(std::uint64_t seed, std::uint64_t run, StreamRole role,
                            std::uint64_t entity, std::uint64_t step) noexcept
        : key_(detail::absorb(
              detail::absorb(
                  detail::absorb(detail::absorb(detail::splitmix64(seed), run),
                                 static_cast<std::uint64_t>(role)),
                  entity),
              step)) {}

    explicit constexpr CounterStream(std::uint64_t seed) noexcept
        : key_(detail::splitmix64(seed)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept { return detail::absorb(key_, counter_++); }

    /// Uniform on the open interval (0,1); never returns 0 or 1.
    constexpr double uniform() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    constexpr std::uint64_t draws() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Open-interval uniform from any 64-bit generator. CounterStream has its own fast path.
template <class Gen>
double uniform_open(Gen& gen) {
    if constexpr (requires { gen.uniform(); }) {
        return gen.uniform();
    } else {
        static_assert(Gen::max() == std::numeric_limits<std::uint64_t>::max() && Gen::min() == 0,
                      "uniform_open needs a full-range 64-bit generator");
        return (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53;
    }
}

} // namespace qde
