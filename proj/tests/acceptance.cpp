#include "css/baselines.hpp"
#include "css/cli.hpp"
#include "css/evaluation.hpp"
#include "css/io.hpp"
#include "css/rng.hpp"
#include "css/simgen.hpp"
#include "css/studies.hpp"
#include "css/theory.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

using namespace css;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream s;
    s.precision(precision);
    s << v;
    return s.str();
}

int worker_threads() {
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// ---------------------------------------------------------------------------

Outcome solver_equivalence() {
    const auto start = Clock::now();
    CounterRng rng(2024, 1);
    double worst = 0.0, worst_kkt = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
        const Index n = 10 + static_cast<Index>(rng.below(41));
        const Index p = 2 + static_cast<Index>(rng.below(19));
        Matrix X(n, p);
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < p; ++j) X(i, j) = rng.normal();
        Vector y(n);
        for (Index i = 0; i < n; ++i) y[i] = X(i, 0) - 0.5 * X(i, p - 1) + rng.normal();
        const DataSet data = make_dataset(X, y);
        const LassoPath path = fit_lasso_path(data, 10000);
        const LassoSolver solver(data);
        const double top = path.knots.front().lambda;
        for (std::size_t k = 0; k < path.knots.size(); ++k)
            worst_kkt = std::max(worst_kkt, kkt_violation(data, path.knot_coefficients[k], path.knots[k].lambda));
        for (int i = 1; i <= 20; ++i) {
            const double lambda = path.end_lambda + (top - path.end_lambda) * (1.0 - i / 21.0);
            const LassoFit fit = solver.fit(lambda);
            const Vector on_path = path.coefficients_at(lambda);
            worst = std::max(worst, (fit.coefficients - on_path).cwiseAbs().maxCoeff());
            worst_kkt = std::max(worst_kkt, kkt_violation(data, fit.coefficients, lambda));
            worst_kkt = std::max(worst_kkt, kkt_violation(data, on_path, lambda));
        }
    }
    const double elapsed = seconds_since(start);
    return {worst <= 1e-6 && worst_kkt <= 1e-8 && elapsed < 30,
            "max |path - cd| " + fmt(worst) + ", max KKT " + fmt(worst_kkt) + ", " + fmt(elapsed, 3) + " s"};
}

// ---------------------------------------------------------------------------

Outcome knot_formulas() {
    CounterRng rng(2024, 2);
    double worst1 = 0.0, worst2 = 0.0;
    int first_mismatch = 0, second_checked = 0, second_mismatch = 0;
    for (int inst = 0; inst < 500; ++inst) {
        const Index n = 10 + static_cast<Index>(rng.below(30));
        Matrix X(n, 3);
        Vector y(n);
        const double rho = 2 * rng.uniform() - 1;
        for (Index i = 0; i < n; ++i) {
            X(i, 0) = rng.normal();
            X(i, 1) = rho * X(i, 0) + rng.normal();
            X(i, 2) = rng.normal();
            y[i] = (rng.uniform() - 0.3) * X(i, 0) + rng.uniform() * X(i, 2) + rng.normal();
        }
        const LassoPath path = fit_lasso_path(make_dataset(X, y), 2);
        const auto first = theory::first_knot_closed_form(X, y);
        first_mismatch += path.knots[0].feature != first.feature;
        worst1 = std::max(worst1, std::abs(path.knots[0].lambda - first.lambda));
        if (path.knots.size() < 2) continue;
        const auto candidates = theory::second_knot_closed_form(X, y, first.feature);
        for (const auto& c : candidates) {
            if (c.feature != path.knots[1].feature || !c.flags_pass()) continue;
            ++second_checked;
            second_mismatch += path.knots[1].event != PathEvent::Enter;
            worst2 = std::max(worst2, std::abs(path.knots[1].lambda - c.lambda));
        }
    }
    return {first_mismatch == 0 && worst1 <= 1e-10 && second_mismatch == 0 && worst2 <= 1e-8 && second_checked > 0,
            "first knot max err " + fmt(worst1) + "; second knot max err " + fmt(worst2) + " over " +
                std::to_string(second_checked) + " flagged instances"};
}

// ---------------------------------------------------------------------------

struct TwoProxy {
    EntrantTable table;
    double seconds = 0.0;
};

TwoProxy two_proxy_study() {
    StudyConfig config;
    config.study = Study::Theorem31;
    config.reps = 400;
    config.seed = 31;
    config.theorem31_n = 5000;
    config.sigma_eps_sq = 1.0;
    config.theorem31_B = 50;
    config.threads = worker_threads();
    const auto start = Clock::now();
    TwoProxy out{run_theorem31_study(config), 0.0};
    out.seconds = seconds_since(start);
    return out;
}

Outcome entrant_frequencies(const TwoProxy& study) {
    const EntrantTable& t = study.table;
    Index x1_x3 = 0, x2_x3 = 0;
    for (const auto& [key, count] : t.counts) {
        if (key == std::pair<Index, Index>{0, 2}) x1_x3 += count;
        if (key == std::pair<Index, Index>{1, 2}) x2_x3 += count;
    }
    const double f13 = static_cast<double>(x1_x3) / static_cast<double>(t.reps);
    const double f23 = static_cast<double>(x2_x3) / static_cast<double>(t.reps);
    const bool pass = f13 >= 0.33 && f13 <= 0.55 && std::abs(f13 - f23) <= 0.05 && f13 + f23 >= 0.80;
    std::string detail = "beta_Z " + fmt(t.beta_Z) + "; freq(X1,X3) " + fmt(f13) + ", freq(X2,X3) " + fmt(f23) +
                         ", ties " + std::to_string(t.ties) + "; table:";
    for (const auto& [key, count] : t.counts)
        detail += " (" + std::to_string(key.first + 1) + "," + std::to_string(key.second + 1) + ")=" +
                  std::to_string(count);
    detail += "; " + fmt(study.seconds, 3) + " s";
    return {pass && study.seconds < 300, detail};
}

Outcome first_two_proportions(const TwoProxy& study) {
    const EntrantTable& t = study.table;
    const Vector mean = t.feature_props.colwise().mean().transpose();
    Index wins = 0;
    for (Index r = 0; r < t.cluster_props.rows(); ++r) wins += t.cluster_props(r, 0) >= t.cluster_props(r, 1);
    const double frac = static_cast<double>(wins) / static_cast<double>(t.reps);
    const bool props = mean[0] <= 0.62 && mean[1] <= 0.62;
    const bool third = mean[2] >= 0.85;
    const bool clusters = frac >= 0.95;
    return {props && third && clusters,
            std::string("mean Pi ") + fmt(mean[0]) + ", " + fmt(mean[1]) + ", " + fmt(mean[2]) +
                (props ? "" : " [Pi(1),Pi(2) <= 0.62 fails]") + (third ? "" : " [Pi(3) >= 0.85 fails]") +
                "; Theta({1,2}) >= Theta({3}) in " + fmt(frac) + " of reps" + (clusters ? "" : " [fails]")};
}

// ---------------------------------------------------------------------------

theory::ProxyModelParams<double> proxy_params(Index n, double beta_Z, std::vector<double> sz,
                                              std::vector<double> betas, double eps) {
    theory::ProxyModelParams<double> m;
    m.n = n;
    m.q = static_cast<Index>(sz.size());
    m.p = m.q + static_cast<Index>(betas.size());
    m.beta_Z = beta_Z;
    m.sigma_zeta_sq = std::move(sz);
    m.betas = std::move(betas);
    m.sigma_eps_sq = eps;
    return m;
}

Outcome risk_oracles() {
    const auto start = Clock::now();
    const std::vector<theory::ProxyModelParams<double>> grid{
        proxy_params(8, 1.5, {0.5, 1.0, 2.0}, {0.8}, 1.0),
        proxy_params(20, 1.0, {0.2, 0.2}, {0.5, 1.2}, 0.5),
        proxy_params(50, 2.0, {1.0, 3.0, 0.5, 0.7}, {1.0}, 2.0),
        proxy_params(200, 1.2, {0.3, 0.6, 0.9}, {0.6, 0.3}, 1.0),
        proxy_params(1000, 0.8, {2.0, 0.1}, {0.9}, 0.25)};
    const int reps = 20000;
    int failures = 0;
    double worst_z = 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const auto& m = grid[g];
        const auto w_opt = theory::optimal_weights(m.sigma_zeta_sq);
        const std::vector<double> w_simple(static_cast<std::size_t>(m.q), 1.0 / static_cast<double>(m.q));
        const std::vector<double> closed{theory::risk_single_feature(m, 0), theory::risk_single_feature(m, m.q),
                                         theory::e_ideal(m), theory::risk_weighted_rep(m, w_simple),
                                         theory::min_weighted_risk(m)};
        std::vector<double> sum(closed.size(), 0.0), sum_sq(closed.size(), 0.0);
        for (int r = 0; r < reps; ++r) {
            const std::uint64_t seed = derive_seed(500 + g, static_cast<std::uint64_t>(r));
            const SimInstance train = gen_proxy_model(m, seed);
            const SimInstance test = gen_proxy_model(m, derive_seed(seed, 1), 1);
            auto rep = [&](const Matrix& X, const std::vector<double>& w) {
                Vector v = Vector::Zero(X.rows());
                for (Index j = 0; j < m.q; ++j) v += w[static_cast<std::size_t>(j)] * X.col(j);
                return v;
            };
            const std::vector<std::pair<Vector, Vector>> columns{
                {train.data.X.col(0), test.data.X.col(0)},
                {train.data.X.col(m.q), test.data.X.col(m.q)},
                {train.z, test.z},
                {rep(train.data.X, w_simple), rep(test.data.X, w_simple)},
                {rep(train.data.X, w_opt), rep(test.data.X, w_opt)}};
            for (std::size_t c = 0; c < columns.size(); ++c) {
                const Vector& x = columns[c].first;
                const double b = x.dot(train.data.y) / x.squaredNorm();
                const double e = std::pow(test.data.y[0] - b * columns[c].second[0], 2);
                sum[c] += e;
                sum_sq[c] += e * e;
            }
        }
        for (std::size_t c = 0; c < closed.size(); ++c) {
            const double mean = sum[c] / reps;
            const double se = std::sqrt((sum_sq[c] / reps - mean * mean) / (reps - 1));
            const double z = std::abs(mean - closed[c]) / se;
            worst_z = std::max(worst_z, z);
            failures += z > 3;
        }
    }

    // Sign grids: the comparisons switch exactly at the stated thresholds.
    int flips_wrong = 0;
    for (double s : {0.1, 0.5, 1.0, 2.0}) {
        for (double bk : {0.5, 1.0, 1.7}) {
            for (int i = 0; i <= 400; ++i) {
                const double bz = 0.01 * i;
                const auto m = proxy_params(100, bz, {s, 2 * s}, {bk}, 1.0);
                const bool proxy_wins = bz * bz / (bk * bk) > 1 + s;
                const double precision = 1 / s + 1 / (2 * s);
                const bool rep_wins = bz * bz / (bk * bk) > (1 + precision) / precision;
                flips_wrong += theory::proxy_beats_signal(m, 0, 2) != proxy_wins;
                flips_wrong += theory::representative_beats_signal(m, 2) != rep_wins;
                // away from the threshold the risks order the same way
                const double r0 = theory::risk_single_feature(m, 0), rk = theory::risk_single_feature(m, 2);
                if (std::abs(r0 - rk) > 1e-9) flips_wrong += (r0 < rk) != proxy_wins;
                const double rr = theory::min_weighted_risk(m);
                if (std::abs(rr - rk) > 1e-9) flips_wrong += (rr < rk) != rep_wins;
            }
        }
    }
    const double elapsed = seconds_since(start);
    return {failures == 0 && flips_wrong == 0 && elapsed < 180,
            std::to_string(failures) + " of 25 risks outside 3 SE (max |z| " + fmt(worst_z, 3) + "); " +
                std::to_string(flips_wrong) + " threshold mismatches; " + fmt(elapsed, 3) + " s"};
}

// ---------------------------------------------------------------------------

Outcome weight_stationarity() {
    CounterRng rng(2024, 6);
    double worst_grad = 0.0;
    int beaten = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const Index q = 2 + static_cast<Index>(rng.below(5));
        std::vector<double> sz(static_cast<std::size_t>(q));
        for (double& v : sz) v = 0.05 + 2.5 * rng.uniform();
        const auto m = proxy_params(100, 0.5 + 2 * rng.uniform(), sz, {0.7}, 1.0);
        const auto w = theory::optimal_weights(sz);
        const double best = theory::risk_weighted_rep(m, w);
        // numeric gradient, projected onto the simplex's tangent space
        const double h = 1e-6;
        Vector grad(q);
        for (Index j = 0; j < q; ++j) {
            auto up = w, down = w;
            up[static_cast<std::size_t>(j)] += h;
            down[static_cast<std::size_t>(j)] -= h;
            // evaluate off the simplex through the unnormalized formula
            auto risk = [&](const std::vector<double>& v) {
                double s = 0;
                for (Index i = 0; i < q; ++i) s += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)] * sz[static_cast<std::size_t>(i)];
                return theory::inflation(m) * (m.beta_Z * m.beta_Z * s / (1 + s) + theory::signal_energy(m) + m.sigma_eps_sq);
            };
            grad[j] = (risk(up) - risk(down)) / (2 * h);
        }
        const Vector projected = grad.array() - grad.mean();
        worst_grad = std::max(worst_grad, projected.cwiseAbs().maxCoeff());
        for (int draw = 0; draw < 200; ++draw) {
            std::vector<double> v(static_cast<std::size_t>(q));
            double total = 0;
            for (double& x : v) total += x = -std::log(rng.uniform());
            for (double& x : v) x /= total;
            beaten += theory::risk_weighted_rep(m, v) < best;
        }
    }
    return {worst_grad <= 1e-6 && beaten == 0,
            "max projected gradient " + fmt(worst_grad) + "; random points beating w* " + std::to_string(beaten)};
}

// ---------------------------------------------------------------------------

Outcome error_control() {
    const auto m = proxy_params(100, 1.0, {0.5, 0.5}, {0.8, 0, 0, 0, 0, 0, 0, 0}, 1.0);
    ClusterPartition partition;
    partition.clusters.push_back({0, 1});
    for (Index j = 2; j < m.p; ++j) partition.clusters.push_back({j});
    const Index K = partition.K();
    const FirstK base{3};
    const double tau = 0.8;
    const Index half = m.n / 2;

    // Pilot on independent half-size samples.
    Vector hits = Vector::Zero(K);
    const int pilot = 4000;
    const IndexList of = cluster_membership(partition, m.p);
    double mean_size = 0;
    for (int r = 0; r < pilot; ++r) {
        const SimInstance sim = gen_proxy_model(m, derive_seed(7000, static_cast<std::uint64_t>(r)), half);
        std::vector<char> hit(static_cast<std::size_t>(K), 0);
        for (Index j : first_k_entrants(sim.data, base.k)) hit[static_cast<std::size_t>(of[static_cast<std::size_t>(j)])] = 1;
        for (Index k = 0; k < K; ++k) {
            hits[k] += hit[static_cast<std::size_t>(k)];
            mean_size += hit[static_cast<std::size_t>(k)];
        }
    }
    const Vector p_hat = hits / pilot;
    const double theta = mean_size / pilot / static_cast<double>(K);
    IndexList low;
    for (Index k = 0; k < K; ++k)
        if (p_hat[k] <= theta) low.push_back(k);

    const int reps = 200;
    const Index B = 50;
    Vector css_count(reps), base_count(reps);
    for (int r = 0; r < reps; ++r) {
        const std::uint64_t seed = derive_seed(8000, static_cast<std::uint64_t>(r));
        const SimInstance sim = gen_proxy_model(m, seed);
        const SubsamplePlan plan = draw_complementary_pairs(sim.data.n(), B, derive_seed(seed, 1));
        const auto records = run_base_selections(sim.data, plan, base);
        const Vector theta_hat = cluster_proportions(records, partition);
        css_count[r] = 0;
        for (Index k : low) css_count[r] += theta_hat[k] >= tau;
        double total = 0;
        for (const SelectionRecord& rec : records) {
            std::vector<char> hit(static_cast<std::size_t>(K), 0);
            for (Index j : rec.selected) hit[static_cast<std::size_t>(of[static_cast<std::size_t>(j)])] = 1;
            for (Index k : low) total += hit[static_cast<std::size_t>(k)];
        }
        base_count[r] = total / static_cast<double>(records.size());
    }
    const double css_mean = css_count.mean();
    const double base_mean = base_count.mean();
    const double se = std::sqrt((css_count.array() - css_mean).square().sum() / (reps - 1) / reps);
    const double bound = theory::error_bound_rhs(theta, tau, base_mean);
    return {!low.empty() && css_mean <= bound + 3 * se,
            "theta " + fmt(theta) + ", |L| " + std::to_string(low.size()) + " of " + std::to_string(K) +
                "; E|CSS & L| " + fmt(css_mean) + " <= " + fmt(bound) + " + 3*" + fmt(se) +
                " (E|base & L| " + fmt(base_mean) + ")"};
}

// ---------------------------------------------------------------------------

struct Cell {
    double mean = 0, se = 0;
    Index count = 0;
    std::optional<double> stability;
};

// (method, size) -> summary, computed straight from the observations.
std::map<std::pair<std::string, Index>, Cell> cells(const StudyResult& result) {
    std::map<std::pair<std::string, Index>, std::vector<const Observation*>> groups;
    for (const Observation& o : result.observations) groups[{o.method, o.size}].push_back(&o);
    std::map<std::pair<std::string, Index>, Cell> out;
    for (const auto& [key, group] : groups) {
        Cell c;
        c.count = static_cast<Index>(group.size());
        for (const Observation* o : group) c.mean += o->mse / c.count;
        if (c.count > 1) {
            double ss = 0;
            for (const Observation* o : group) ss += (o->mse - c.mean) * (o->mse - c.mean);
            c.se = std::sqrt(ss / (c.count - 1) / c.count);
        }
        Matrix S = Matrix::Zero(c.count, result.p);
        for (Index i = 0; i < c.count; ++i)
            for (Index j : group[static_cast<std::size_t>(i)]->selected) S(i, j) = 1;
        c.stability = nogueira_stability(S);
        out[key] = c;
    }
    return out;
}

// a beats b by at least one combined SE at every size in [lo, hi] where both are defined.
bool beats_everywhere(const std::map<std::pair<std::string, Index>, Cell>& c, const std::string& a,
                      const std::string& b, std::string& detail, Index* clear_count = nullptr,
                      bool require_clear = true) {
    bool ok = true;
    Index compared = 0, clear = 0;
    for (Index s = 2; s <= 8; ++s) {
        const auto ia = c.find({a, s}), ib = c.find({b, s});
        if (ia == c.end() || ib == c.end() || ia->second.count < 2 || ib->second.count < 2) continue;
        ++compared;
        const double gap = ib->second.mean - ia->second.mean;
        const double se = std::hypot(ia->second.se, ib->second.se);
        clear += gap >= se;
        if (require_clear ? gap < se : gap < 0) {
            ok = false;
            detail += " " + a + " vs " + b + " size " + std::to_string(s) + " gap " + fmt(gap) + " (se " + fmt(se) + ");";
        }
    }
    if (clear_count) *clear_count = clear;
    return ok && compared > 0;
}

Outcome sparse_study() {
    StudyConfig config;
    config.study = Study::Sparse;
    config.reps = 100;
    config.seed = 51;
    config.test_n = 2000;
    config.threads = worker_threads();
    const auto start = Clock::now();
    const StudyResult result = run_design_study(config);
    const double elapsed = seconds_since(start);
    const auto c = cells(result);

    std::string detail;
    const bool a = beats_everywhere(c, "css-sparse", "ss", detail);

    Index split = 0;
    for (const RepDiagnostics& d : result.reps) {
        double top_weak = 0;
        for (Index j = 10; j < 20; ++j) top_weak = std::max(top_weak, d.feature_props[j]);
        bool all_below = true;
        for (Index j = 0; j < 10; ++j) all_below = all_below && d.feature_props[j] < top_weak;
        split += all_below;
    }
    const double frac = static_cast<double>(split) / static_cast<double>(result.reps.size());
    const bool b = frac >= 0.8;

    bool stab = true;
    Index compared = 0;
    for (Index s = 2; s <= 8; ++s) {
        const auto ic = c.find({"css-sparse", s}), il = c.find({"lasso", s});
        if (ic == c.end() || il == c.end() || !ic->second.stability || !il->second.stability) continue;
        ++compared;
        if (*ic->second.stability < *il->second.stability) {
            stab = false;
            detail += " stability size " + std::to_string(s) + " " + fmt(*ic->second.stability) + " < " +
                      fmt(*il->second.stability) + ";";
        }
    }
    const bool cc = stab && compared > 0;
    return {a && b && cc && elapsed < 900,
            std::string("(a) ") + (a ? "ok" : "fails") + ", (b) fraction " + fmt(frac) + ", (c) " +
                (cc ? "ok" : "fails") + " over " + std::to_string(compared) + " sizes; " + fmt(elapsed, 3) + " s" +
                detail};
}

Outcome averaging_studies() {
    StudyConfig config;
    config.reps = 100;
    config.test_n = 10000;
    config.threads = worker_threads();
    const auto start = Clock::now();

    config.study = Study::Averaging;
    config.seed = 52;
    const auto avg = cells(run_design_study(config));
    config.study = Study::Weighted;
    config.seed = 53;
    const auto wtd = cells(run_design_study(config));

    std::string detail;
    const bool simple_beats = beats_everywhere(avg, "css-simple", "css-sparse", detail);
    const bool w_beats = beats_everywhere(wtd, "css-weighted", "css-sparse", detail);
    const bool s_beats = beats_everywhere(wtd, "css-simple", "css-sparse", detail);
    Index clear = 0;
    const bool w_le = beats_everywhere(wtd, "css-weighted", "css-simple", detail, &clear, false);
    double worst_gap = 0;
    bool stab = true;
    for (Index s = 2; s <= 8; ++s) {
        const auto iw = wtd.find({"css-weighted", s}), is = wtd.find({"css-simple", s});
        if (iw == wtd.end() || is == wtd.end() || !iw->second.stability || !is->second.stability) continue;
        const double gap = std::abs(*iw->second.stability - *is->second.stability);
        worst_gap = std::max(worst_gap, gap);
        stab = stab && gap <= 0.02;
    }
    const bool pass = simple_beats && w_beats && s_beats && w_le && clear >= 4 && stab;
    return {pass, std::string("averaging beats sparse: ") + (simple_beats && w_beats && s_beats ? "ok" : "fails") +
                      "; weighted <= simple: " + (w_le ? "ok" : "fails") + " (" + std::to_string(clear) +
                      " sizes by 1 SE); max stability gap " + fmt(worst_gap) + "; " +
                      fmt(seconds_since(start), 3) + " s" + detail};
}

// ---------------------------------------------------------------------------

Outcome nogueira() {
    CounterRng rng(2024, 10);
    bool identical = true;
    for (int trial = 0; trial < 20; ++trial) {
        const Index d = 5 + static_cast<Index>(rng.below(40));
        Matrix S = Matrix::Zero(2 + static_cast<Index>(rng.below(50)), d);
        Index chosen = 0;
        for (Index j = 0; j < d; ++j)
            if (rng.below(3) == 0) S.col(j).setOnes(), ++chosen;
        if (chosen == 0) S.col(0).setOnes();
        if (chosen == d) S.col(0).setZero();
        const auto phi = nogueira_stability(S);
        identical = identical && phi && *phi == 1.0;
    }
    double worst = 0;
    for (Index k : {1, 5, 10, 25}) {
        const Index M = 1000, p = 50;
        Matrix S = Matrix::Zero(M, p);
        for (Index i = 0; i < M; ++i) {
            IndexList cols(static_cast<std::size_t>(p));
            for (Index j = 0; j < p; ++j) cols[static_cast<std::size_t>(j)] = j;
            for (Index j = 0; j < k; ++j) {
                const Index r = j + static_cast<Index>(rng.below(static_cast<std::uint64_t>(p - j)));
                std::swap(cols[static_cast<std::size_t>(j)], cols[static_cast<std::size_t>(r)]);
                S(i, cols[static_cast<std::size_t>(j)]) = 1;
            }
        }
        worst = std::max(worst, std::abs(*nogueira_stability(S)));
    }
    return {identical && worst <= 0.05,
            std::string("identical -> 1: ") + (identical ? "yes" : "no") + "; max |phi| random " + fmt(worst)};
}

// ---------------------------------------------------------------------------

Outcome reductions() {
    int mismatches = 0, violations = 0, strict = 0, tested = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        CounterRng rng(seed, 11);
        const Index n = 40 + static_cast<Index>(rng.below(40));
        const Index p = 5 + static_cast<Index>(rng.below(15));
        Matrix X(n, p);
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < p; ++j) X(i, j) = rng.normal();
        Vector y(n);
        for (Index i = 0; i < n; ++i) y[i] = X(i, 0) + 0.5 * X(i, 1) + rng.normal();
        const DataSet data = make_dataset(X, y);
        const SubsamplePlan plan = draw_complementary_pairs(n, 25, seed);
        const double l1 = lambda_max(data);
        const double lambda = l1 * (0.1 + 0.5 * rng.uniform());
        const CssResult css = run_css(data, singleton_partition(p), plan, FixedLambdas{{lambda}}, WeightScheme::Weighted);
        const Vector ss = stability_selection_ss(data, plan, {lambda});
        mismatches += !(css.cluster_props == ss) || !(css.feature_props == ss);

        const std::vector<double> grid{0.7 * l1, 0.45 * l1, 0.25 * l1, 0.12 * l1};
        const auto per = per_lambda_selections(data, plan, grid);
        Vector union_props = Vector::Zero(p), per_max = Vector::Zero(p);
        for (const auto& record : per) {
            std::vector<char> any(static_cast<std::size_t>(p), 0);
            for (const IndexList& s : record)
                for (Index j : s) any[static_cast<std::size_t>(j)] = 1;
            for (Index j = 0; j < p; ++j) union_props[j] += any[static_cast<std::size_t>(j)];
        }
        union_props /= static_cast<double>(per.size());
        for (std::size_t l = 0; l < grid.size(); ++l) {
            Vector counts = Vector::Zero(p);
            for (const auto& record : per)
                for (Index j : record[l]) counts[j] += 1;
            per_max = per_max.cwiseMax(counts / static_cast<double>(per.size()));
        }
        const CssResult over_grid = run_css(data, singleton_partition(p), plan, FixedLambdas{grid}, WeightScheme::Weighted);
        mismatches += !(over_grid.feature_props == union_props);
        for (Index j = 0; j < p; ++j) {
            violations += union_props[j] < per_max[j];
            strict += union_props[j] > per_max[j];
        }
        ++tested;
    }
    return {mismatches == 0 && violations == 0,
            std::to_string(tested) + " data sets: " + std::to_string(mismatches) + " reduction mismatches, " +
                std::to_string(violations) + " dominance violations (" + std::to_string(strict) + " strict)"};
}

// ---------------------------------------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file()) files[fs::relative(entry.path(), dir).string()] = read_text(entry.path().string());
    return files;
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / ("css_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    const SimInstance sim = gen_sparse_sim(12, 120);
    std::ostringstream xs, ys;
    xs.precision(17);
    ys.precision(17);
    for (Index i = 0; i < sim.data.n(); ++i) {
        for (Index j = 0; j < 30; ++j) xs << (j ? "," : "") << sim.data.X(i, j);
        xs << "\n";
        ys << sim.data.y[i] << "\n";
    }
    write_text((root / "x.csv").string(), xs.str());
    write_text((root / "y.csv").string(), ys.str());

    const std::vector<std::vector<std::string>> commands{
        {"run", "--x", "X", "--y", "Y", "--auto-cluster", "--cutoff", "0.5", "--B", "20", "--seed", "3", "--top", "3",
         "--save-plan", "--out", "OUT/run"},
        {"run", "--x", "X", "--y", "Y", "--base", "cv-per-half", "--B", "8", "--seed", "4", "--tau", "0.6",
         "--out", "OUT/per-half"},
        {"cluster", "--x", "X", "--cutoff", "0.4", "--out", "OUT/clusters.json"},
        {"simulate", "--study", "weighted", "--reps", "3", "--B", "10", "--test-n", "200", "--seed", "5", "--quiet",
         "--out", "OUT/sim"},
        {"simulate", "--study", "theorem31", "--reps", "6", "--theorem31-n", "400", "--theorem31-B", "5", "--seed",
         "6", "--quiet", "--out", "OUT/t31"}};
    int differing = 0, failed = 0;
    for (int threads : {1, 3}) {
        const fs::path out = root / ("threads" + std::to_string(threads));
        fs::create_directories(out);
        for (auto args : commands) {
            for (std::string& a : args) {
                if (a == "X") a = (root / "x.csv").string();
                else if (a == "Y") a = (root / "y.csv").string();
                else if (a.rfind("OUT", 0) == 0) a = out.string() + a.substr(3);
            }
            args.push_back("--threads");
            args.push_back(std::to_string(threads));
            std::ostringstream o, e;
            failed += run_cli(args, o, e) != 0;
        }
    }
    const auto one = snapshot(root / "threads1");
    const auto three = snapshot(root / "threads3");
    for (const auto& [name, text] : one) {
        const auto it = three.find(name);
        differing += it == three.end() || it->second != text;
    }
    fs::remove_all(root);
    return {failed == 0 && differing == 0 && one.size() == three.size() && one.size() >= 8,
            std::to_string(one.size()) + " output files, " + std::to_string(differing) + " differ between 1 and 3 threads" +
                (failed ? ", " + std::to_string(failed) + " commands failed" : "")};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> checks{
        {"lasso path agrees with coordinate descent", solver_equivalence},
        {"first and second knot closed forms", knot_formulas},
    };
    int failures = 0;
    int number = 0;
    auto report = [&](const std::string& name, const Outcome& o) {
        ++number;
        failures += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << number << ": " << name << " -- " << o.detail << std::endl;
    };
    auto guarded = [](const std::function<Outcome()>& f) {
        try {
            return f();
        } catch (const std::exception& e) {
            return Outcome{false, std::string("threw: ") + e.what()};
        }
    };
    for (const auto& [name, f] : checks) report(name, guarded(f));

    TwoProxy two;
    std::string two_error;
    try {
        two = two_proxy_study();
    } catch (const std::exception& e) {
        two_error = e.what();
    }
    if (two_error.empty()) {
        report("two-proxy first-two entrants", entrant_frequencies(two));
        report("two-proxy first-2 stability proportions", first_two_proportions(two));
    } else {
        report("two-proxy first-two entrants", {false, "threw: " + two_error});
        report("two-proxy first-2 stability proportions", {false, "threw: " + two_error});
    }
    report("risk closed forms match simulation", guarded(risk_oracles));
    report("optimal weights are stationary and minimal", guarded(weight_stationarity));
    report("thresholded cluster error bound", guarded(error_control));
    report("sparse design study", guarded(sparse_study));
    report("averaging and weighted design studies", guarded(averaging_studies));
    report("stability metric", guarded(nogueira));
    report("reductions and union dominance", guarded(reductions));
    report("deterministic across thread counts", guarded(determinism));
    std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail") << std::endl;
    return failures == 0 ? 0 : 1;
}
