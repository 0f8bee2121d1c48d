#include "css/simgen.hpp"

#include <doctest.h>

#include <cmath>

using namespace css;

namespace {

// Second moments of (Z, first `k` features) over `total` rows drawn in chunks.
Matrix design_moments(Design design, Index k, Index total, std::uint64_t seed) {
    CounterRng rng(seed, 0);
    Matrix acc = Matrix::Zero(k + 1, k + 1);
    const Index chunk = 50000;
    for (Index done = 0; done < total; done += chunk) {
        Vector z;
        const Matrix X = sample_design_rows(design, rng, chunk, z);
        Matrix block(chunk, k + 1);
        block << z, X.leftCols(k);
        acc.noalias() += block.transpose() * block;
    }
    return acc / static_cast<double>(total);
}

}  // namespace

TEST_CASE("sparse design covariances") {
    CHECK(design_features(Design::Sparse) == 100);
    const Matrix C = design_moments(Design::Sparse, 22, 1000000, 1);
    const double tol = 0.006;
    CHECK(C(0, 0) == doctest::Approx(1.0).epsilon(tol));
    for (Index a = 1; a <= 22; ++a) {
        CHECK(std::abs(C(a, a) - 1.0) < tol);
        const bool proxy_a = a <= 10;
        CHECK(std::abs(C(0, a) - (proxy_a ? 0.9 : 0.0)) < tol);
        for (Index b = a + 1; b <= 22; ++b) {
            const bool proxy_b = b <= 10;
            CHECK(std::abs(C(a, b) - (proxy_a && proxy_b ? 0.9 : 0.0)) < tol);
        }
    }
}

TEST_CASE("weighted design covariances") {
    CHECK(design_features(Design::Weighted) == 100);
    const Matrix C = design_moments(Design::Weighted, 27, 1000000, 2);
    const double tol = 0.006;
    auto loading = [](Index j) { return j < 5 ? 0.9 : j < 15 ? 0.5 : 0.0; };
    for (Index a = 1; a <= 27; ++a) {
        CHECK(std::abs(C(a, a) - 1.0) < tol);
        CHECK(std::abs(C(0, a) - loading(a - 1)) < tol);
        for (Index b = a + 1; b <= 27; ++b)
            CHECK(std::abs(C(a, b) - loading(a - 1) * loading(b - 1)) < tol);
    }
}

TEST_CASE("design truth") {
    const SimTruth sparse = design_truth(Design::Sparse);
    CHECK(sparse.beta_Z == 1.5);
    CHECK(sparse.proxies.size() == 10);
    CHECK(sparse.signals == IndexList{10, 11, 12, 13, 14, 15, 16, 17, 18, 19});
    for (Index j = 0; j < 10; ++j) CHECK(sparse.beta[10 + j] == doctest::Approx(1 / std::sqrt(j + 1.0)));
    CHECK(sparse.beta.head(10).isZero());
    CHECK(sparse.beta.tail(80).isZero());
    CHECK(sparse.clusters.K() == 91);
    CHECK(sparse.clusters.clusters[0] == sparse.proxies);
    validate(sparse.clusters, 100);

    const SimTruth weighted = design_truth(Design::Weighted);
    CHECK(weighted.proxies.size() == 15);
    CHECK(weighted.signals.front() == 15);
    CHECK(weighted.signals.back() == 24);
    CHECK(weighted.clusters.K() == 86);
    validate(weighted.clusters, 100);
}

TEST_CASE("noise level gives signal-to-noise three") {
    for (Design d : {Design::Sparse, Design::Weighted}) {
        const SimInstance sim = gen_design_sim(d, 3, 5000);
        const Vector mu = sim.truth.beta_Z * sim.z + sim.data.X * sim.truth.beta;
        CHECK(sim.mu.isApprox(mu));
        CHECK(sim.truth.sigma_eps_sq == doctest::Approx(mu.squaredNorm() / (3.0 * 5000)));
        const double noise = (sim.data.y - sim.mu).squaredNorm() / 5000;
        CHECK(noise == doctest::Approx(sim.truth.sigma_eps_sq).epsilon(0.06));
        // population value: beta_Z^2 + sum 1/j = 2.25 + H_10
        double energy = 2.25;
        for (int j = 1; j <= 10; ++j) energy += 1.0 / j;
        CHECK(sim.truth.sigma_eps_sq == doctest::Approx(energy / 3).epsilon(0.08));
    }
}

TEST_CASE("replications are reproducible and distinct") {
    const SimInstance a = gen_sparse_sim(10);
    const SimInstance b = gen_sparse_sim(10);
    CHECK(a.data.X == b.data.X);
    CHECK(a.data.y == b.data.y);
    CHECK(gen_sparse_sim(11).data.X != a.data.X);
    const auto reps = gen_design_sims(Design::Weighted, 5, 200, 3);
    for (std::uint64_t r = 0; r < 3; ++r)
        CHECK(reps[r].data.X == gen_weighted_sim(derive_seed(5, r)).data.X);
    const SimInstance test = draw_test_set(a, Design::Sparse, 10, 200);
    CHECK(test.data.X != a.data.X);
    CHECK(test.truth.sigma_eps_sq == a.truth.sigma_eps_sq);
    CHECK(test.mu.isApprox(test.truth.beta_Z * test.z + test.data.X * test.truth.beta));
    CHECK_THROWS_AS(gen_sparse_sim(1, 1), ValidationError);
}

TEST_CASE("noiseless single proxy is the latent signal") {
    theory::ProxyModelParams<double> m;
    m.n = 50;
    m.q = 1;
    m.p = 2;
    m.beta_Z = 2.0;
    m.betas = {0.5};
    m.sigma_zeta_sq = {0.0};
    m.sigma_eps_sq = 0.0;
    const SimInstance sim = gen_proxy_model(m, 4);
    CHECK(sim.data.X.col(0) == sim.z);
    CHECK(sim.data.y.isApprox(2.0 * sim.z + 0.5 * sim.data.X.col(1)));
    CHECK(sim.truth.clusters.clusters == std::vector<IndexList>{{0}, {1}});
    CHECK(gen_proxy_model(m, 4, 7).data.n() == 7);
}

TEST_CASE("two-proxy instances flag coefficients outside the interval") {
    const auto iv = theory::theorem31_interval(5000, 1.0);
    CHECK_FALSE(gen_theorem31_instance(5000, 1.0, iv.midpoint(), 1).truth.outside_interval);
    CHECK(gen_theorem31_instance(5000, 1.0, iv.hi + 0.5, 1).truth.outside_interval);
    const SimInstance sim = gen_theorem31_instance(5000, 1.0, iv.midpoint(), 2);
    CHECK(sim.data.p() == 3);
    CHECK(sim.truth.proxies == IndexList{0, 1});
    CHECK(sim.truth.signals == IndexList{2});
}
