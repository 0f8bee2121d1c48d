#include "css/simgen.hpp"

#include <cmath>

namespace css {

namespace {

constexpr double kBetaZ = 1.5;
constexpr double kSnr = 3.0;

struct Layout {
    Index strong = 0;     // proxies at correlation 0.9
    Index weak = 0;       // proxies at correlation 0.5
    Index signals = 10;
    Index noise = 0;
};

Layout layout(Design design) {
    if (design == Design::Sparse) return {10, 0, 10, 80};
    return {5, 10, 10, 75};
}

void add_noise(SimInstance& sim, CounterRng& rng) {
    sim.data.y = sim.mu;
    const double sd = std::sqrt(sim.truth.sigma_eps_sq);
    for (Index i = 0; i < sim.mu.size(); ++i) sim.data.y[i] += sd * rng.normal();
}

}  // namespace

Index design_features(Design design) {
    const Layout l = layout(design);
    return l.strong + l.weak + l.signals + l.noise;
}

Matrix sample_design_rows(Design design, CounterRng& rng, Index rows, Vector& z) {
    const Layout l = layout(design);
    const Index p = design_features(design);
    const double strong_noise = design == Design::Sparse ? std::sqrt(0.1) : std::sqrt(0.19);
    const double weak_noise = std::sqrt(0.75);
    Matrix X(rows, p);
    z.resize(rows);
    for (Index i = 0; i < rows; ++i) {
        const double zi = rng.normal();
        z[i] = zi;
        Index c = 0;
        if (design == Design::Sparse) {
            // 0.9 Z + 0.3 W + sqrt(0.1) e: unit variance, covariance 0.9 with Z and with each other.
            const double w = rng.normal();
            for (Index j = 0; j < l.strong; ++j) X(i, c++) = 0.9 * zi + 0.3 * w + strong_noise * rng.normal();
        } else {
            for (Index j = 0; j < l.strong; ++j) X(i, c++) = 0.9 * zi + strong_noise * rng.normal();
            for (Index j = 0; j < l.weak; ++j) X(i, c++) = 0.5 * zi + weak_noise * rng.normal();
        }
        for (; c < p; ++c) X(i, c) = rng.normal();
    }
    return X;
}

SimTruth design_truth(Design design) {
    const Layout l = layout(design);
    const Index p = design_features(design);
    const Index n_proxies = l.strong + l.weak;
    SimTruth truth;
    truth.design = design == Design::Sparse ? "sparse" : "weighted";
    truth.beta_Z = kBetaZ;
    truth.beta = Vector::Zero(p);
    for (Index j = 0; j < n_proxies; ++j) truth.proxies.push_back(j);
    for (Index j = 0; j < l.signals; ++j) {
        truth.beta[n_proxies + j] = 1.0 / std::sqrt(static_cast<double>(j + 1));
        truth.signals.push_back(n_proxies + j);
    }
    truth.clusters.clusters.push_back(truth.proxies);
    for (Index j = n_proxies; j < p; ++j) truth.clusters.clusters.push_back({j});
    return truth;
}

SimInstance gen_design_sim(Design design, std::uint64_t seed, Index n) {
    if (n < 2) throw ValidationError("need at least 2 observations");
    SimInstance sim;
    sim.truth = design_truth(design);
    CounterRng rng(seed, 0);
    sim.data.X = sample_design_rows(design, rng, n, sim.z);
    sim.mu = sim.truth.beta_Z * sim.z + sim.data.X * sim.truth.beta;
    sim.truth.sigma_eps_sq = sim.mu.squaredNorm() / (static_cast<double>(n) * kSnr);
    add_noise(sim, rng);
    return sim;
}

std::vector<SimInstance> gen_design_sims(Design design, std::uint64_t seed, Index n, Index reps) {
    std::vector<SimInstance> out;
    for (Index r = 0; r < reps; ++r) out.push_back(gen_design_sim(design, derive_seed(seed, static_cast<std::uint64_t>(r)), n));
    return out;
}

SimInstance draw_test_set(const SimInstance& like, Design design, std::uint64_t seed, Index n) {
    SimInstance sim;
    sim.truth = like.truth;
    CounterRng rng(seed, 1);
    sim.data.X = sample_design_rows(design, rng, n, sim.z);
    sim.mu = sim.truth.beta_Z * sim.z + sim.data.X * sim.truth.beta;
    add_noise(sim, rng);
    return sim;
}

SimInstance gen_theorem31_instance(Index n, double sigma_eps_sq, double beta_Z, std::uint64_t seed) {
    const auto interval = theory::theorem31_interval(n, sigma_eps_sq);
    theory::ProxyModelParams<double> params;
    params.n = n;
    params.q = 2;
    params.p = 3;
    params.beta_Z = beta_Z;
    params.betas = {1.0};
    const double sz = theory::theorem31_sigma_zeta_sq(n);
    params.sigma_zeta_sq = {sz, sz};
    params.sigma_eps_sq = sigma_eps_sq;
    SimInstance sim = gen_proxy_model(params, seed);
    sim.truth.design = "theorem31";
    sim.truth.outside_interval = !(beta_Z > interval.lo && beta_Z < interval.hi);
    return sim;
}

SimInstance gen_proxy_model(const theory::ProxyModelParams<double>& params, std::uint64_t seed,
                            Index rows) {
    theory::validate(params);
    const Index n = rows < 0 ? params.n : rows;
    if (n < 1) throw ValidationError("need at least one row");
    SimInstance sim;
    SimTruth& truth = sim.truth;
    truth.design = "proxy";
    truth.beta_Z = params.beta_Z;
    truth.sigma_eps_sq = params.sigma_eps_sq;
    truth.beta = Vector::Zero(params.p);
    for (Index j = 0; j < params.q; ++j) truth.proxies.push_back(j);
    for (Index j = params.q; j < params.p; ++j) {
        truth.beta[j] = params.betas[static_cast<std::size_t>(j - params.q)];
        if (truth.beta[j] != 0.0) truth.signals.push_back(j);
    }
    truth.clusters.clusters.push_back(truth.proxies);
    for (Index j = params.q; j < params.p; ++j) truth.clusters.clusters.push_back({j});

    CounterRng rng(seed, 0);
    sim.data.X.resize(n, params.p);
    sim.z.resize(n);
    sim.mu.resize(n);
    sim.data.y.resize(n);
    std::vector<double> zeta_sd(params.sigma_zeta_sq.size());
    for (std::size_t j = 0; j < zeta_sd.size(); ++j) zeta_sd[j] = std::sqrt(params.sigma_zeta_sq[j]);
    const double eps_sd = std::sqrt(params.sigma_eps_sq);
    for (Index i = 0; i < n; ++i) {
        const double zi = rng.normal();
        sim.z[i] = zi;
        double mu = params.beta_Z * zi;
        for (Index j = 0; j < params.q; ++j) {
            const double sd = zeta_sd[static_cast<std::size_t>(j)];
            sim.data.X(i, j) = sd == 0.0 ? zi : zi + sd * rng.normal();
        }
        for (Index j = params.q; j < params.p; ++j) {
            sim.data.X(i, j) = rng.normal();
            mu += truth.beta[j] * sim.data.X(i, j);
        }
        sim.mu[i] = mu;
        sim.data.y[i] = mu + eps_sd * rng.normal();
    }
    return sim;
}

}  // namespace css
