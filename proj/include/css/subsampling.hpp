#pragma once

#include "css/dataset.hpp"

#include <cstdint>
#include <vector>

namespace css {

/// One complementary pair: two disjoint halves of size floor(n/2), each sorted.
struct HalfPair {
    IndexList first;
    IndexList second;
};

struct SubsamplePlan {
    Index n = 0;
    std::uint64_t seed = 0;
    std::vector<HalfPair> pairs;

    Index B() const noexcept { return static_cast<Index>(pairs.size()); }
};

/// B complementary pairs of half-samples. Pair b depends only on (seed, b): a uniform
/// permutation of [n] is split into its first and second floor(n/2) entries, so for odd n
/// the left-out index is uniform and independent across pairs.
SubsamplePlan draw_complementary_pairs(Index n, Index B, std::uint64_t seed, int threads = 1);

/// Throws ValidationError unless every pair has disjoint, in-range halves of size floor(n/2).
void validate(const SubsamplePlan& plan);

/// `count` independent (unpaired) subsamples of size floor(n/2), each sorted.
std::vector<IndexList> draw_subsamples(Index n, Index count, std::uint64_t seed);

}  // namespace css
