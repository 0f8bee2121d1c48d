#pragma once

#include "css/dataset.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace css {

// The lasso here is always the column-scaled problem
//
//     min_b  1/(2n) || y - sum_j X_j / ||X_j|| * b_j ||^2  +  lambda * sum_j |b_j|
//
// Coefficients reported to callers are on the original (unscaled) column basis,
// i.e. coef_j = b_j / ||X_j||. With `center`, X and y are mean-centered first and
// an intercept is reported. Columns with zero norm are excluded (never selected).

struct SolverOptions {
    bool center = false;
    double kkt_tol = 1e-8;
    double cd_tol = 1e-10;      // max coefficient change per sweep, original basis
    double tie_tol = 1e-12;     // relative gap below which two knots are a tie
    int max_sweeps = 200000;
};

enum class PathEvent { Enter, Drop };

struct Knot {
    double lambda;
    PathEvent event;
    Index feature;
};

/// Exact, piecewise-linear lasso solution path.
///
/// `knot_coefficients[k]` is the solution at `knots[k].lambda`; between consecutive
/// knots (and from the last knot down to `end_lambda`) the solution is linear in lambda.
/// Above the first knot the solution is zero.
struct LassoPath {
    std::vector<Knot> knots;
    std::vector<Vector> knot_coefficients;
    double end_lambda = 0.0;
    Vector end_coefficients;
    Vector scaling;          // column L2 norms used by the solver
    bool centered = false;
    Vector x_means;          // empty unless centered
    double y_mean = 0.0;
    bool saturated = false;  // active set reached the rank limit
    IndexList excluded;      // zero-norm columns

    Index p() const noexcept { return scaling.size(); }

    /// Coefficients (original basis) at any lambda >= end_lambda.
    Vector coefficients_at(double lambda) const;
    double intercept_at(double lambda) const;

    /// Distinct features in order of first entry.
    IndexList entry_order() const;

    /// Active set right after knot k.
    IndexList active_set_after(std::size_t k) const;

    /// The first active set along the path with exactly s members, sorted ascending.
    std::optional<IndexList> first_active_set_of_size(Index s) const;
};

struct LassoFit {
    double lambda = 0.0;
    Vector coefficients;  // original basis
    double intercept = 0.0;
    IndexList support;
    IndexList excluded;
    int sweeps = 0;
};

/// Homotopy (LARS with the lasso modification) path from lambda_max down to
/// saturation, 0, or `max_steps` knots, whichever comes first.
/// Throws PathTie when two features enter at the same knot within tie_tol.
LassoPath fit_lasso_path(const DataSet& data, Index max_steps, const SolverOptions& options = {});

/// First k distinct features to enter the path (re-entries count once).
IndexList select_first_k(const LassoPath& path, Index k);

/// max_j |X_j^T y| / (n ||X_j||), the smallest lambda with an all-zero solution.
double lambda_max(const DataSet& data, bool center = false);

/// Precomputes the scaled Gram matrix of a data set so several penalties can be
/// solved cheaply (and warm-started) by cyclic coordinate descent.
class LassoSolver {
public:
    explicit LassoSolver(const DataSet& data, SolverOptions options = {});

    LassoFit fit(double lambda) const;

    /// Warm-started fit; `state` holds scaled-basis coefficients and is updated in place.
    LassoFit fit(double lambda, Vector& state) const;

    double lambda_max() const noexcept { return lambda_max_; }
    Index p() const noexcept { return gram_.cols(); }

private:
    bool polish(double lambda, Vector& beta) const;
    LassoFit finish(double lambda, const Vector& beta, int sweeps) const;

    SolverOptions options_;
    Index n_ = 0;
    Matrix gram_;
    Vector xty_;
    Vector norms_;
    Vector x_means_;
    double y_mean_ = 0.0;
    std::vector<bool> excluded_;
    double lambda_max_ = 0.0;
};

LassoFit fit_lasso_at(const DataSet& data, double lambda, const SolverOptions& options = {});

/// Largest violation of the lasso subgradient (KKT) conditions by `coefficients`
/// (original basis), evaluated directly from the data:
/// active j: |g_j - lambda sign(b_j)|, inactive j: max(0, |g_j| - lambda),
/// with g_j = X_j^T (y - X b) / (n ||X_j||).
double kkt_violation(const DataSet& data, const Vector& coefficients, double lambda,
                     bool center = false);

/// `count` log-spaced penalties from lambda_max down to lambda_max * ratio.
std::vector<double> default_lambda_grid(const DataSet& data, int count = 100, double ratio = 1e-3,
                                        bool center = false);

struct CvOptions {
    int folds = 10;
    bool one_standard_error = false;
    SolverOptions solver{};
};

struct CvResult {
    double lambda = 0.0;
    std::size_t index = 0;
    std::vector<double> mean_error;
    std::vector<double> standard_error;
};

/// K-fold cross-validation over a strictly decreasing grid. Ties go to the larger lambda.
CvResult cross_validate(const DataSet& data, const std::vector<double>& grid, std::uint64_t seed,
                        const CvOptions& options = {});

double cross_validate_lambda(const DataSet& data, int folds, const std::vector<double>& grid,
                             std::uint64_t seed, const SolverOptions& solver = {});

struct OlsFit {
    Vector coefficients;
    double intercept = 0.0;
    Vector residuals;
};

/// Least squares of y on the columns of `design` (plus an intercept when requested).
/// Throws RankDeficient naming the dependent design columns.
OlsFit ols_fit(const Matrix& design, const Vector& y, bool intercept = true);

OlsFit ols_fit(const DataSet& data, std::span<const Index> columns, bool intercept = true);

}  // namespace css
