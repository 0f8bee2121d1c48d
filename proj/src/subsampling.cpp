#include "css/subsampling.hpp"

#include "css/parallel.hpp"
#include "css/rng.hpp"

#include <algorithm>
#include <numeric>

namespace css {

namespace {

constexpr std::uint64_t kSubsampleTag = 0x5AB5A3B1E5ull;

IndexList shuffled(Index n, CounterRng& rng) {
    IndexList perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    for (Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    return perm;
}

}  // namespace

SubsamplePlan draw_complementary_pairs(Index n, Index B, std::uint64_t seed, int threads) {
    if (n < 4) throw ValidationError("complementary pairs need n >= 4, got " + std::to_string(n));
    if (B < 1) throw ValidationError("number of pairs B must be at least 1");
    SubsamplePlan plan;
    plan.n = n;
    plan.seed = seed;
    plan.pairs.resize(static_cast<std::size_t>(B));
    const auto half = static_cast<std::ptrdiff_t>(n / 2);
    parallel_for(plan.pairs.size(), threads, [&](std::size_t b) {
        CounterRng rng(seed, b);
        const IndexList perm = shuffled(n, rng);
        HalfPair& pair = plan.pairs[b];
        pair.first.assign(perm.begin(), perm.begin() + half);
        pair.second.assign(perm.begin() + half, perm.begin() + 2 * half);
        std::sort(pair.first.begin(), pair.first.end());
        std::sort(pair.second.begin(), pair.second.end());
    });
    validate(plan);
    return plan;
}

void validate(const SubsamplePlan& plan) {
    const auto half = static_cast<std::size_t>(plan.n / 2);
    std::vector<int> mark(static_cast<std::size_t>(std::max<Index>(plan.n, 0)));
    for (std::size_t b = 0; b < plan.pairs.size(); ++b) {
        const HalfPair& pair = plan.pairs[b];
        if (pair.first.size() != half || pair.second.size() != half)
            throw ValidationError("pair " + std::to_string(b) + " has halves of the wrong size");
        std::fill(mark.begin(), mark.end(), 0);
        for (const IndexList* side : {&pair.first, &pair.second}) {
            for (Index i : *side) {
                if (i < 0 || i >= plan.n)
                    throw ValidationError("pair " + std::to_string(b) + " has an out-of-range index");
                if (mark[static_cast<std::size_t>(i)]++)
                    throw ValidationError("pair " + std::to_string(b) + " halves overlap");
            }
        }
    }
}

std::vector<IndexList> draw_subsamples(Index n, Index count, std::uint64_t seed) {
    if (n < 4) throw ValidationError("subsampling needs n >= 4, got " + std::to_string(n));
    if (count < 1) throw ValidationError("number of subsamples must be at least 1");
    std::vector<IndexList> out(static_cast<std::size_t>(count));
    for (std::size_t b = 0; b < out.size(); ++b) {
        CounterRng rng(derive_seed(seed, kSubsampleTag), b);
        IndexList perm = shuffled(n, rng);
        perm.resize(static_cast<std::size_t>(n / 2));
        std::sort(perm.begin(), perm.end());
        out[b] = std::move(perm);
    }
    return out;
}

}  // namespace css
