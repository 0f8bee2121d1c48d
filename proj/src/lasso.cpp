#include "css/lasso.hpp"

#include "css/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace css {

namespace {

// Scaled (and optionally centered) sufficient statistics of a data set.
struct ScaledProblem {
    Index n = 0;
    Matrix gram;
    Vector xty;
    Vector norms;
    Vector x_means;
    double y_mean = 0.0;
    std::vector<bool> excluded;
};

ScaledProblem build_scaled(const DataSet& data, bool center) {
    validate(data, false);
    ScaledProblem prob;
    prob.n = data.n();
    Matrix Xc = data.X;
    Vector yc = data.y;
    if (center) {
        prob.x_means = Xc.colwise().mean().transpose();
        Xc.rowwise() -= prob.x_means.transpose();
        prob.y_mean = yc.mean();
        yc.array() -= prob.y_mean;
    }
    const Index p = data.p();
    prob.norms = column_norms(Xc);
    const Vector raw_norms = column_norms(data.X);
    prob.excluded.assign(p, false);
    for (Index j = 0; j < p; ++j) {
        if (prob.norms[j] <= 1e-12 * std::max(1.0, raw_norms[j])) {
            prob.excluded[j] = true;
            prob.norms[j] = 1.0;
            Xc.col(j).setZero();
        }
    }
    Xc.array().rowwise() /= prob.norms.transpose().array();
    prob.gram = Xc.transpose() * Xc;
    prob.xty = Xc.transpose() * yc;
    return prob;
}

IndexList excluded_list(const std::vector<bool>& flags) {
    IndexList out;
    for (std::size_t j = 0; j < flags.size(); ++j) {
        if (flags[j]) out.push_back(static_cast<Index>(j));
    }
    return out;
}

double sign_of(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

}  // namespace

// ---------------------------------------------------------------------------
// LassoPath accessors

Vector LassoPath::coefficients_at(double lambda) const {
    if (lambda < 0) throw ValidationError("coefficients_at: negative lambda");
    if (knots.empty() || lambda >= knots.front().lambda) return Vector::Zero(p());
    if (lambda < end_lambda)
        throw ValidationError("coefficients_at: lambda " + std::to_string(lambda) +
                              " below the computed path end " + std::to_string(end_lambda));
    for (std::size_t k = 0; k < knots.size(); ++k) {
        const double hi = knots[k].lambda;
        const bool last = k + 1 == knots.size();
        const double lo = last ? end_lambda : knots[k + 1].lambda;
        if (lambda <= hi && lambda >= lo) {
            const Vector& b_hi = knot_coefficients[k];
            const Vector& b_lo = last ? end_coefficients : knot_coefficients[k + 1];
            if (hi == lo) return b_hi;
            const double t = (hi - lambda) / (hi - lo);
            return (1.0 - t) * b_hi + t * b_lo;
        }
    }
    return end_coefficients;
}

double LassoPath::intercept_at(double lambda) const {
    if (!centered) return 0.0;
    return y_mean - x_means.dot(coefficients_at(lambda));
}

IndexList LassoPath::entry_order() const {
    IndexList order;
    std::vector<bool> seen(p(), false);
    for (const Knot& k : knots) {
        if (k.event == PathEvent::Enter && !seen[k.feature]) {
            seen[k.feature] = true;
            order.push_back(k.feature);
        }
    }
    return order;
}

IndexList LassoPath::active_set_after(std::size_t k) const {
    std::vector<bool> active(p(), false);
    for (std::size_t i = 0; i <= k && i < knots.size(); ++i)
        active[knots[i].feature] = knots[i].event == PathEvent::Enter;
    return excluded_list(active);
}

std::optional<IndexList> LassoPath::first_active_set_of_size(Index s) const {
    std::vector<bool> active(p(), false);
    Index size = 0;
    for (const Knot& k : knots) {
        const bool enter = k.event == PathEvent::Enter;
        if (active[k.feature] != enter) size += enter ? 1 : -1;
        active[k.feature] = enter;
        if (size == s) return excluded_list(active);
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Homotopy path

LassoPath fit_lasso_path(const DataSet& data, Index max_steps, const SolverOptions& options) {
    if (max_steps < 1) throw ValidationError("fit_lasso_path: max_steps must be positive");
    const ScaledProblem prob = build_scaled(data, options.center);
    const Index p = data.p();
    const double n = static_cast<double>(prob.n);

    LassoPath path;
    path.scaling = prob.norms;
    path.centered = options.center;
    path.x_means = prob.x_means;
    path.y_mean = prob.y_mean;
    path.excluded = excluded_list(prob.excluded);

    auto to_original = [&](const Vector& scaled) {
        return Vector(scaled.cwiseQuotient(prob.norms));
    };

    // First knot.
    const Vector c0 = prob.xty / n;
    Index first = -1;
    double lambda1 = 0.0;
    for (Index j = 0; j < p; ++j) {
        if (prob.excluded[j]) continue;
        if (std::abs(c0[j]) > lambda1) {
            lambda1 = std::abs(c0[j]);
            first = j;
        }
    }
    path.end_coefficients = Vector::Zero(p);
    if (first < 0 || lambda1 == 0.0) return path;
    for (Index j = 0; j < p; ++j) {
        if (j != first && !prob.excluded[j] && std::abs(c0[j]) >= lambda1 * (1.0 - options.tie_tol))
            throw PathTie(std::min(j, first), std::max(j, first), lambda1);
    }

    IndexList active{first};
    std::vector<double> signs{sign_of(c0[first])};
    std::vector<bool> is_active(p, false);
    is_active[first] = true;
    Vector beta = Vector::Zero(p);
    double lambda = lambda1;
    path.knots.push_back({lambda1, PathEvent::Enter, first});
    path.knot_coefficients.push_back(Vector::Zero(p));

    const Index usable = p - static_cast<Index>(path.excluded.size());
    const Index rank_limit = std::min<Index>(usable, options.center ? prob.n - 1 : prob.n);
    const double guard = 1e-12 * lambda1;
    bool finished = false;

    while (static_cast<Index>(path.knots.size()) < max_steps) {
        const Index m = static_cast<Index>(active.size());
        const Matrix g_aa = prob.gram(active, active);
        const Eigen::LLT<Matrix> llt(g_aa);
        if (llt.info() != Eigen::Success) {
            path.saturated = true;
            break;
        }
        Vector s_a(m);
        for (Index i = 0; i < m; ++i) s_a[i] = signs[i];
        const Vector a = llt.solve(Vector(prob.xty(active)));
        const Vector b = n * llt.solve(s_a);

        double best = 0.0;
        Index best_feature = -1;
        PathEvent best_event = PathEvent::Enter;
        double best_sign = 0.0;
        double runner_up = 0.0;
        Index runner_feature = -1;

        if (m < rank_limit) {
            for (Index j = 0; j < p; ++j) {
                if (is_active[j] || prob.excluded[j]) continue;
                const auto g_ja = prob.gram(j, active);
                const double alpha = (prob.xty[j] - g_ja.dot(a)) / n;
                const double gamma = g_ja.dot(b) / n;
                for (double s : {1.0, -1.0}) {
                    const double denom = s - gamma;
                    if (denom == 0.0) continue;
                    const double cand = alpha / denom;
                    if (!(cand > guard && cand < lambda - guard)) continue;
                    if (cand > best) {
                        if (best_feature >= 0 && best_feature != j && best_event == PathEvent::Enter) {
                            runner_up = best;
                            runner_feature = best_feature;
                        }
                        best = cand;
                        best_feature = j;
                        best_event = PathEvent::Enter;
                        best_sign = s;
                    } else if (j != best_feature && cand > runner_up) {
                        runner_up = cand;
                        runner_feature = j;
                    }
                }
            }
        } else {
            path.saturated = true;
        }
        for (Index i = 0; i < m; ++i) {
            if (b[i] == 0.0) continue;
            const double cand = a[i] / b[i];
            if (cand > guard && cand < lambda - guard && cand > best) {
                best = cand;
                best_feature = active[i];
                best_event = PathEvent::Drop;
            }
        }

        if (best_feature < 0) {
            // No further event: the last segment runs to lambda = 0.
            Vector end = Vector::Zero(p);
            end(active) = a;
            path.end_lambda = 0.0;
            path.end_coefficients = to_original(end);
            finished = true;
            break;
        }
        if (best_event == PathEvent::Enter && runner_feature >= 0 &&
            runner_up >= best * (1.0 - options.tie_tol)) {
            throw PathTie(std::min(best_feature, runner_feature),
                          std::max(best_feature, runner_feature), best);
        }

        beta(active) = a - best * b;
        lambda = best;
        if (best_event == PathEvent::Enter) {
            active.push_back(best_feature);
            signs.push_back(best_sign);
            is_active[best_feature] = true;
        } else {
            const auto it = std::find(active.begin(), active.end(), best_feature);
            const auto pos = it - active.begin();
            active.erase(it);
            signs.erase(signs.begin() + pos);
            is_active[best_feature] = false;
            beta[best_feature] = 0.0;
        }
        path.knots.push_back({lambda, best_event, best_feature});
        path.knot_coefficients.push_back(to_original(beta));
    }

    if (!finished) {
        path.end_lambda = lambda;
        path.end_coefficients = path.knot_coefficients.back();
    }
    return path;
}

IndexList select_first_k(const LassoPath& path, Index k) {
    if (k < 1) throw ValidationError("select_first_k: k must be positive");
    IndexList order = path.entry_order();
    if (static_cast<Index>(order.size()) < k)
        throw InsufficientPath(k, static_cast<Index>(order.size()));
    order.resize(static_cast<std::size_t>(k));
    return order;
}

double lambda_max(const DataSet& data, bool center) {
    const ScaledProblem prob = build_scaled(data, center);
    return prob.xty.cwiseAbs().maxCoeff() / static_cast<double>(prob.n);
}

// ---------------------------------------------------------------------------
// Coordinate descent

LassoSolver::LassoSolver(const DataSet& data, SolverOptions options) : options_(options) {
    ScaledProblem prob = build_scaled(data, options.center);
    n_ = prob.n;
    gram_ = std::move(prob.gram);
    xty_ = std::move(prob.xty);
    norms_ = std::move(prob.norms);
    x_means_ = std::move(prob.x_means);
    y_mean_ = prob.y_mean;
    excluded_ = std::move(prob.excluded);
    lambda_max_ = xty_.size() ? xty_.cwiseAbs().maxCoeff() / static_cast<double>(n_) : 0.0;
}

LassoFit LassoSolver::fit(double lambda) const {
    Vector state = Vector::Zero(p());
    return fit(lambda, state);
}

// Re-solves the active-set stationarity equations exactly and accepts the result
// only if it is sign-consistent and satisfies the inactive KKT conditions.
bool LassoSolver::polish(double lambda, Vector& beta) const {
    IndexList active;
    for (Index j = 0; j < p(); ++j) {
        if (beta[j] != 0.0) active.push_back(j);
    }
    const double n = static_cast<double>(n_);
    Vector candidate = Vector::Zero(p());
    if (!active.empty()) {
        const Eigen::LLT<Matrix> llt(gram_(active, active));
        if (llt.info() != Eigen::Success) return false;
        Vector rhs = xty_(active);
        for (std::size_t i = 0; i < active.size(); ++i)
            rhs[static_cast<Index>(i)] -= n * lambda * sign_of(beta[active[i]]);
        const Vector sol = llt.solve(rhs);
        for (std::size_t i = 0; i < active.size(); ++i) {
            const double v = sol[static_cast<Index>(i)];
            if (lambda > 0 && sign_of(v) != sign_of(beta[active[i]])) return false;
            candidate[active[i]] = v;
        }
    }
    const Vector grad = (xty_ - gram_ * candidate) / n;
    const double slack = options_.kkt_tol * 0.01;
    for (Index j = 0; j < p(); ++j) {
        if (candidate[j] != 0.0 || excluded_[j]) continue;
        if (std::abs(grad[j]) > lambda + slack) return false;
    }
    beta = candidate;
    return true;
}

LassoFit LassoSolver::finish(double lambda, const Vector& beta, int sweeps) const {
    LassoFit fit;
    fit.lambda = lambda;
    fit.coefficients = beta.cwiseQuotient(norms_);
    fit.intercept = options_.center ? y_mean_ - x_means_.dot(fit.coefficients) : 0.0;
    for (Index j = 0; j < p(); ++j) {
        if (fit.coefficients[j] != 0.0) fit.support.push_back(j);
    }
    fit.excluded = excluded_list(excluded_);
    fit.sweeps = sweeps;
    return fit;
}

LassoFit LassoSolver::fit(double lambda, Vector& beta) const {
    if (!(lambda >= 0) || !std::isfinite(lambda))
        throw ValidationError("lasso penalty must be a finite nonnegative number");
    if (beta.size() != p()) beta = Vector::Zero(p());
    const Index P = p();
    const double threshold = static_cast<double>(n_) * lambda;
    Vector q = gram_ * beta;  // gram * beta, kept in sync

    auto update = [&](Index j) -> double {
        if (excluded_[j]) return 0.0;
        const double gjj = gram_(j, j);
        const double z = xty_[j] - q[j] + gjj * beta[j];
        double next = 0.0;
        if (z > threshold) next = (z - threshold) / gjj;
        else if (z < -threshold) next = (z + threshold) / gjj;
        const double delta = next - beta[j];
        if (delta == 0.0) return 0.0;
        q.noalias() += gram_.col(j) * delta;
        beta[j] = next;
        return std::abs(delta) / norms_[j];
    };

    constexpr double polish_tol = 1e-6;
    int sweeps = 0;
    while (true) {
        double change = 0.0;
        for (Index j = 0; j < P; ++j) change = std::max(change, update(j));
        ++sweeps;
        if (change <= options_.cd_tol) break;

        IndexList active;
        for (Index j = 0; j < P; ++j) {
            if (beta[j] != 0.0) active.push_back(j);
        }
        bool tried_polish = false;
        while (true) {
            if (sweeps > options_.max_sweeps) throw ConvergenceFailure(sweeps, change);
            change = 0.0;
            for (Index j : active) change = std::max(change, update(j));
            ++sweeps;
            if (!tried_polish && change <= polish_tol) {
                tried_polish = true;
                Vector trial = beta;
                if (polish(lambda, trial)) {
                    beta = trial;
                    return finish(lambda, beta, sweeps);
                }
            }
            if (change <= options_.cd_tol) break;
        }
        if (sweeps > options_.max_sweeps) throw ConvergenceFailure(sweeps, change);
    }
    Vector trial = beta;
    if (polish(lambda, trial)) beta = trial;
    return finish(lambda, beta, sweeps);
}

LassoFit fit_lasso_at(const DataSet& data, double lambda, const SolverOptions& options) {
    return LassoSolver(data, options).fit(lambda);
}

double kkt_violation(const DataSet& data, const Vector& coefficients, double lambda, bool center) {
    Matrix X = data.X;
    Vector y = data.y;
    if (center) {
        X.rowwise() -= X.colwise().mean();
        y.array() -= y.mean();
    }
    const double n = static_cast<double>(data.n());
    const Vector residual = y - X * coefficients;
    const Vector norms = column_norms(X);
    double worst = 0.0;
    for (Index j = 0; j < data.p(); ++j) {
        if (norms[j] == 0.0) continue;
        const double g = X.col(j).dot(residual) / (n * norms[j]);
        const double v = coefficients[j] != 0.0 ? std::abs(g - lambda * sign_of(coefficients[j]))
                                                : std::max(0.0, std::abs(g) - lambda);
        worst = std::max(worst, v);
    }
    return worst;
}

std::vector<double> default_lambda_grid(const DataSet& data, int count, double ratio, bool center) {
    if (count < 1) throw ValidationError("lambda grid needs at least one point");
    if (!(ratio > 0 && ratio < 1)) throw ValidationError("lambda grid ratio must lie in (0, 1)");
    const double top = lambda_max(data, center);
    std::vector<double> grid(static_cast<std::size_t>(count));
    if (count == 1) {
        grid[0] = top;
        return grid;
    }
    const double log_top = std::log(top);
    const double step = std::log(ratio) / (count - 1);
    for (int i = 0; i < count; ++i) grid[static_cast<std::size_t>(i)] = std::exp(log_top + step * i);
    return grid;
}

// ---------------------------------------------------------------------------
// Cross-validation

CvResult cross_validate(const DataSet& data, const std::vector<double>& grid, std::uint64_t seed,
                        const CvOptions& options) {
    if (grid.empty()) throw ValidationError("cross-validation grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] < grid[i - 1]))
            throw ValidationError("cross-validation grid must be strictly decreasing");
    }
    const Index n = data.n();
    if (options.folds < 2 || options.folds > n)
        throw ValidationError("number of folds must lie in [2, n]");
    validate(data, false);

    CvResult result;
    result.mean_error.assign(grid.size(), 0.0);
    result.standard_error.assign(grid.size(), 0.0);
    if (grid.size() == 1) {
        result.lambda = grid[0];
        return result;
    }

    // Fold assignment: a seeded Fisher-Yates permutation dealt round-robin.
    IndexList perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    CounterRng rng(seed, 0xCF0D5ull);
    for (Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    std::vector<int> fold_of(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) fold_of[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] =
        static_cast<int>(i % options.folds);

    std::vector<std::vector<double>> fold_errors(grid.size());
    for (int f = 0; f < options.folds; ++f) {
        IndexList train, test;
        for (Index i = 0; i < n; ++i) (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
        const DataSet train_data = restrict(data, train);
        const LassoSolver solver(train_data, options.solver);
        const Matrix test_X = data.X(test, Eigen::all);
        const Vector test_y = data.y(test);
        Vector state = Vector::Zero(data.p());
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const LassoFit fit = solver.fit(grid[g], state);
            const Vector pred = (test_X * fit.coefficients).array() + fit.intercept;
            fold_errors[g].push_back((test_y - pred).squaredNorm() / static_cast<double>(test.size()));
        }
    }
    const double k = options.folds;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const auto& e = fold_errors[g];
        const double mean = std::accumulate(e.begin(), e.end(), 0.0) / k;
        double ss = 0.0;
        for (double v : e) ss += (v - mean) * (v - mean);
        result.mean_error[g] = mean;
        result.standard_error[g] = std::sqrt(ss / (k - 1) / k);
    }
    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g) {
        if (result.mean_error[g] < result.mean_error[best]) best = g;
    }
    if (options.one_standard_error) {
        const double limit = result.mean_error[best] + result.standard_error[best];
        for (std::size_t g = 0; g < best; ++g) {
            if (result.mean_error[g] <= limit) {
                best = g;
                break;
            }
        }
    }
    result.index = best;
    result.lambda = grid[best];
    return result;
}

double cross_validate_lambda(const DataSet& data, int folds, const std::vector<double>& grid,
                             std::uint64_t seed, const SolverOptions& solver) {
    CvOptions options;
    options.folds = folds;
    options.solver = solver;
    return cross_validate(data, grid, seed, options).lambda;
}

// ---------------------------------------------------------------------------
// OLS

OlsFit ols_fit(const Matrix& design, const Vector& y, bool intercept) {
    if (design.rows() != y.size()) throw ValidationError("ols_fit: design and response lengths differ");
    if (y.size() < 1) throw ValidationError("ols_fit: empty response");
    const Index k = design.cols();
    OlsFit fit;
    Matrix D = design;
    Vector yc = y;
    Vector means = Vector::Zero(k);
    double y_mean = 0.0;
    if (intercept) {
        means = D.colwise().mean().transpose();
        D.rowwise() -= means.transpose();
        y_mean = y.mean();
        yc.array() -= y_mean;
    }
    if (k == 0) {
        fit.coefficients = Vector::Zero(0);
        fit.intercept = y_mean;
        fit.residuals = yc;
        return fit;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(D);
    const double scale = std::max(1.0, D.cwiseAbs().maxCoeff());
    qr.setThreshold(1e-10 * scale / std::max(1.0, D.colwise().norm().maxCoeff() / scale));
    if (qr.rank() < k) {
        IndexList collinear;
        const auto& perm = qr.colsPermutation().indices();
        for (Index i = qr.rank(); i < k; ++i) collinear.push_back(perm[i]);
        std::sort(collinear.begin(), collinear.end());
        throw RankDeficient(std::move(collinear));
    }
    fit.coefficients = qr.solve(yc);
    fit.intercept = intercept ? y_mean - means.dot(fit.coefficients) : 0.0;
    fit.residuals = y - design * fit.coefficients;
    fit.residuals.array() -= fit.intercept;
    return fit;
}

OlsFit ols_fit(const DataSet& data, std::span<const Index> columns, bool intercept) {
    IndexList cols(columns.begin(), columns.end());
    for (Index c : cols) {
        if (c < 0 || c >= data.p()) throw ValidationError("ols_fit: column index out of range");
    }
    return ols_fit(Matrix(data.X(Eigen::all, cols)), data.y, intercept);
}

}  // namespace css
