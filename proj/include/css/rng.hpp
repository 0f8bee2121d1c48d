#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace css {

/// Philox4x32-10 block function (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// SplitMix64 finalizer; used to derive independent seeds for named sub-streams.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed for a named purpose (data, test set, plan, folds, ...) within one replication.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept;

/// Counter-based generator keyed by (seed, stream).
///
/// Output for a given (seed, stream) depends only on how many values were drawn,
/// so independent streams (pairs, replications) can be produced in any order.
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform() noexcept;

    /// Uniform integer in [0, bound), unbiased (rejection sampling).
    std::uint64_t below(std::uint64_t bound) noexcept;

    /// Standard normal via Box-Muller; both variates of each pair are used.
    double normal() noexcept;

private:
    void refill() noexcept;

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int used_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace css
