#pragma once

#include "css/css.hpp"
#include "css/rng.hpp"
#include "css/theory.hpp"

#include <string>

namespace css {

enum class Design {
    Sparse,     // 10 proxies (corr 0.9 with Z and each other), 10 weak signals, 80 noise
    Weighted,   // 5 strong (0.9) and 10 weak (0.5) proxies, 10 weak signals, 75 noise
};

struct SimTruth {
    std::string design;
    double beta_Z = 0.0;
    Vector beta;             // coefficients on the observed features in mu
    IndexList proxies;       // features that are noisy copies of Z
    IndexList signals;       // features with nonzero beta
    ClusterPartition clusters;
    double sigma_eps_sq = 0.0;
    bool outside_interval = false;  // two-proxy instance drawn with beta_Z outside its interval
};

struct SimInstance {
    DataSet data;
    Vector mu;  // E[y | Z, X]
    Vector z;   // latent signal
    SimTruth truth;
};

/// Number of observed features of a design (100 for both designs).
Index design_features(Design design);

/// `rows` independent rows of a design's features; the latent Z of each row goes to `z`.
Matrix sample_design_rows(Design design, CounterRng& rng, Index rows, Vector& z);

/// Truth (beta_Z = 1.5, beta_j = 1/sqrt(j) on the weak signals, known clusters) of a design.
SimTruth design_truth(Design design);

/// One replication: features, mu = 1.5 Z + X beta, noise variance ||mu||^2 / (3 n).
SimInstance gen_design_sim(Design design, std::uint64_t seed, Index n = 200);

/// Replications r = 0..reps-1 use derive_seed(seed, r).
std::vector<SimInstance> gen_design_sims(Design design, std::uint64_t seed, Index n, Index reps);

inline SimInstance gen_sparse_sim(std::uint64_t seed, Index n = 200) {
    return gen_design_sim(Design::Sparse, seed, n);
}
inline SimInstance gen_weighted_sim(std::uint64_t seed, Index n = 200) {
    return gen_design_sim(Design::Weighted, seed, n);
}

/// Fresh rows of the same design and truth (noise variance kept from `like`).
SimInstance draw_test_set(const SimInstance& like, Design design, std::uint64_t seed, Index n);

/// X1 = Z + zeta1, X2 = Z + zeta2, X3 ~ N(0, 1), y = beta_Z Z + X3 + eps with
/// Var(zeta) = 10 / sqrt(n log n). Marks `outside_interval` when beta_Z is not in the interval.
SimInstance gen_theorem31_instance(Index n, double sigma_eps_sq, double beta_Z, std::uint64_t seed);

/// Proxy model: features 0..q-1 are Z + zeta_j, q..p-1 standard normal,
/// y = beta_Z Z + sum beta_j X_j + eps.
SimInstance gen_proxy_model(const theory::ProxyModelParams<double>& params, std::uint64_t seed,
                            Index rows = -1);

}  // namespace css
