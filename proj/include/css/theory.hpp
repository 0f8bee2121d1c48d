#pragma once

#include "css/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

// Closed-form quantities of the latent-signal proxy model
//
//     y = beta_Z Z + sum_{j >= q} beta_j X_j + eps,   X_j = Z + zeta_j (j < q),
//
// with Z, X_j (j >= q) standard normal, zeta_j ~ N(0, sigma_zeta_j^2), eps ~ N(0, sigma_eps^2).
// Features are 0-based: proxies are 0..q-1, direct signals q..p-1.
namespace css::theory {

template <typename Scalar = double>
struct ProxyModelParams {
    Index n = 0;
    Index q = 1;
    Index p = 1;
    Scalar beta_Z = 0;
    std::vector<Scalar> betas;          // p - q coefficients of the direct signals
    std::vector<Scalar> sigma_zeta_sq;  // q proxy noise variances
    Scalar sigma_eps_sq = 0;
};

template <typename Scalar>
void validate(const ProxyModelParams<Scalar>& m) {
    if (m.n < 3) throw ValidationError("risk formulas need n >= 3");
    if (m.q < 1 || m.p < m.q) throw ValidationError("need 1 <= q <= p");
    if (static_cast<Index>(m.betas.size()) != m.p - m.q)
        throw ValidationError("betas must have p - q entries");
    if (static_cast<Index>(m.sigma_zeta_sq.size()) != m.q)
        throw ValidationError("sigma_zeta_sq must have q entries");
    for (Scalar v : m.sigma_zeta_sq) {
        if (!(v >= 0)) throw ValidationError("proxy noise variances must be >= 0");
    }
    if (!(m.sigma_eps_sq >= 0)) throw ValidationError("noise variance must be >= 0");
}

template <typename Scalar>
Scalar inflation(const ProxyModelParams<Scalar>& m) {
    return Scalar(m.n - 1) / Scalar(m.n - 2);
}

template <typename Scalar>
Scalar signal_energy(const ProxyModelParams<Scalar>& m) {
    Scalar s = 0;
    for (Scalar b : m.betas) s += b * b;
    return s;
}

/// Risk of regressing on Z itself.
template <typename Scalar>
Scalar e_ideal(const ProxyModelParams<Scalar>& m) {
    validate(m);
    return inflation(m) * (signal_energy(m) + m.sigma_eps_sq);
}

/// Expected out-of-sample squared error of the no-intercept OLS fit of y on feature j alone.
template <typename Scalar>
Scalar risk_single_feature(const ProxyModelParams<Scalar>& m, Index j) {
    validate(m);
    if (j < 0 || j >= m.p) throw ValidationError("feature index out of range");
    const Scalar bz2 = m.beta_Z * m.beta_Z;
    if (j < m.q) {
        const Scalar s = m.sigma_zeta_sq[static_cast<std::size_t>(j)];
        return inflation(m) * (bz2 * s / (1 + s) + signal_energy(m) + m.sigma_eps_sq);
    }
    const Scalar bj = m.betas[static_cast<std::size_t>(j - m.q)];
    return inflation(m) * (bz2 + signal_energy(m) - bj * bj + m.sigma_eps_sq);
}

/// Inverse-variance weights over the proxies; a zero variance takes all the weight
/// (split evenly among zero-variance proxies).
template <typename Scalar>
std::vector<Scalar> optimal_weights(const std::vector<Scalar>& sigma_zeta_sq) {
    if (sigma_zeta_sq.empty()) throw ValidationError("need at least one proxy");
    std::vector<Scalar> w(sigma_zeta_sq.size(), Scalar(0));
    std::size_t zeros = 0;
    for (Scalar v : sigma_zeta_sq) {
        if (!(v >= 0)) throw ValidationError("proxy noise variances must be >= 0");
        zeros += v == 0;
    }
    if (zeros > 0) {
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = sigma_zeta_sq[i] == 0 ? Scalar(1) / Scalar(zeros) : 0;
        return w;
    }
    Scalar total = 0;
    for (Scalar v : sigma_zeta_sq) total += 1 / v;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = (1 / sigma_zeta_sq[i]) / total;
    return w;
}

/// Risk of the no-intercept OLS fit on the representative sum_j w_j X_j over the proxies.
template <typename Scalar>
Scalar risk_weighted_rep(const ProxyModelParams<Scalar>& m, const std::vector<Scalar>& w) {
    validate(m);
    if (static_cast<Index>(w.size()) != m.q) throw ValidationError("need one weight per proxy");
    Scalar total = 0;
    Scalar s = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!(w[i] >= 0)) throw ValidationError("weights must be nonnegative");
        total += w[i];
        s += w[i] * w[i] * m.sigma_zeta_sq[i];
    }
    using std::abs;
    if (abs(total - 1) > Scalar(1e-9)) throw ValidationError("weights must sum to 1");
    const Scalar bz2 = m.beta_Z * m.beta_Z;
    return inflation(m) * (bz2 * s / (1 + s) + signal_energy(m) + m.sigma_eps_sq);
}

/// Risk at the optimal weights: E_ideal + (n-1)/(n-2) beta_Z^2 / (1 + sum 1/sigma^2).
template <typename Scalar>
Scalar min_weighted_risk(const ProxyModelParams<Scalar>& m) {
    validate(m);
    Scalar precision = 0;
    for (Scalar v : m.sigma_zeta_sq) {
        if (v == 0) return e_ideal(m);
        precision += 1 / v;
    }
    return e_ideal(m) + inflation(m) * m.beta_Z * m.beta_Z / (1 + precision);
}

/// Proxy j has lower risk than direct signal k exactly when beta_Z^2 / beta_k^2 > 1 + sigma_j^2.
template <typename Scalar>
bool proxy_beats_signal(const ProxyModelParams<Scalar>& m, Index j, Index k) {
    validate(m);
    const Scalar bk = m.betas[static_cast<std::size_t>(k - m.q)];
    return m.beta_Z * m.beta_Z > (1 + m.sigma_zeta_sq[static_cast<std::size_t>(j)]) * bk * bk;
}

/// The optimally weighted representative beats signal k exactly when
/// beta_Z^2 / beta_k^2 > (1 + P) / P with P = sum 1/sigma^2.
template <typename Scalar>
bool representative_beats_signal(const ProxyModelParams<Scalar>& m, Index k) {
    validate(m);
    const Scalar bk = m.betas[static_cast<std::size_t>(k - m.q)];
    Scalar precision = 0;
    for (Scalar v : m.sigma_zeta_sq) {
        if (v == 0) return m.beta_Z * m.beta_Z > bk * bk;
        precision += 1 / v;
    }
    return m.beta_Z * m.beta_Z * precision > (1 + precision) * bk * bk;
}

// ---------------------------------------------------------------------------
// Two proxies and one direct signal

template <typename Scalar = double>
Scalar default_c2() {
    const Scalar e = std::numbers::e_v<Scalar>;
    return (e - 1) / (8 * e * e);
}

/// Proxy noise variance 10 / sqrt(n log n).
template <typename Scalar = double>
Scalar theorem31_sigma_zeta_sq(Index n) {
    using std::log;
    using std::sqrt;
    const Scalar nn = static_cast<Scalar>(n);
    return Scalar(10) / sqrt(nn * log(nn));
}

template <typename Scalar = double>
struct Interval {
    Scalar lo = 0;
    Scalar hi = 0;
    bool empty() const noexcept { return !(lo < hi); }
    Scalar midpoint() const noexcept { return (lo + hi) / 2; }
};

/// Range of beta_Z for which the direct signal enters the path before the second proxy
/// while each proxy alone has lower risk:
/// lo = 1 + 10 sigma_zeta^2(n), hi = 1 + 1.9 sqrt((2 + sigma_eps^2)/c2) (log n)^{3/4} / sqrt(n).
template <typename Scalar = double>
Interval<Scalar> theorem31_interval(Index n, Scalar sigma_eps_sq, Scalar c2 = default_c2<Scalar>()) {
    if (n < 100) throw ValidationError("interval is defined for n >= 100");
    if (!(c2 > 0 && c2 <= default_c2<Scalar>() * (1 + Scalar(1e-12))))
        throw ValidationError("c2 must lie in (0, (e-1)/(8e^2)]");
    if (!(sigma_eps_sq >= 0)) throw ValidationError("noise variance must be >= 0");
    using std::log;
    using std::pow;
    using std::sqrt;
    const Scalar nn = static_cast<Scalar>(n);
    Interval<Scalar> out;
    out.lo = 1 + 10 * theorem31_sigma_zeta_sq<Scalar>(n);
    out.hi = 1 + Scalar(19) / 10 * sqrt((2 + sigma_eps_sq) / c2) * pow(log(nn), Scalar(3) / 4) / sqrt(nn);
    return out;
}

/// Population correlation matrix of (X1, X2, X3, y) in the two-proxy model.
template <typename Scalar = double>
Eigen::Matrix<Scalar, 4, 4> theorem31_correlations(Index n, Scalar sigma_eps_sq, Scalar beta_Z) {
    using std::sqrt;
    const Scalar sz = theorem31_sigma_zeta_sq<Scalar>(n);
    const Scalar var_y = beta_Z * beta_Z + 1 + sigma_eps_sq;
    const Scalar r_py = beta_Z / sqrt(var_y * (1 + sz));
    const Scalar r_3y = 1 / sqrt(var_y);
    const Scalar r_12 = 1 / (1 + sz);
    Eigen::Matrix<Scalar, 4, 4> R;
    R << 1, r_12, 0, r_py,
         r_12, 1, 0, r_py,
         0, 0, 1, r_3y,
         r_py, r_py, r_3y, 1;
    return R;
}

// ---------------------------------------------------------------------------
// Knots of the scaled lasso path from sample (uncentered) correlations

/// Uncentered correlation X_a^T X_b / (||X_a|| ||X_b||).
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
    return a.dot(b) / (a.norm() * b.norm());
}

template <typename Scalar = double>
struct FirstKnot {
    Scalar lambda = 0;
    Index feature = -1;
    std::optional<Index> tied_with;  // another feature attaining the max
};

/// lambda_1 = max_j |X_j^T y| / (n ||X_j||).
template <typename Derived, typename DerivedY>
FirstKnot<typename Derived::Scalar> first_knot_closed_form(const Eigen::MatrixBase<Derived>& X,
                                                           const Eigen::MatrixBase<DerivedY>& y,
                                                           typename Derived::Scalar tie_tol = 1e-12) {
    using Scalar = typename Derived::Scalar;
    using std::abs;
    const Scalar n = static_cast<Scalar>(X.rows());
    FirstKnot<Scalar> out;
    std::vector<Scalar> values(static_cast<std::size_t>(X.cols()));
    for (Index j = 0; j < X.cols(); ++j) {
        const Scalar norm = X.col(j).norm();
        if (norm == 0) throw ValidationError("column " + std::to_string(j) + " has zero norm");
        values[static_cast<std::size_t>(j)] = abs(X.col(j).dot(y)) / (n * norm);
        if (values[static_cast<std::size_t>(j)] > out.lambda || out.feature < 0) {
            out.lambda = values[static_cast<std::size_t>(j)];
            out.feature = j;
        }
    }
    for (Index j = 0; j < X.cols(); ++j) {
        if (j != out.feature && values[static_cast<std::size_t>(j)] >= out.lambda * (1 - tie_tol)) {
            out.tied_with = j;
            break;
        }
    }
    return out;
}

template <typename Scalar = double>
struct SecondKnotCandidate {
    Index feature = -1;
    Scalar lambda = std::numeric_limits<Scalar>::quiet_NaN();
    bool entered_positive = false;  // the first entrant has positive correlation with y
    bool nonnegative_numerator = false;  // R_jy - R_ej R_ey >= 0
    bool nonsingular = false;            // |R_ej| < 1
    bool flags_pass() const noexcept { return entered_positive && nonnegative_numerator && nonsingular; }
};

/// Knot at which each other feature would join the first entrant `entered`:
/// (||y|| / n) (R_jy - R_ej R_ey) / (1 - R_ej) on the event that the numerator is
/// nonnegative and feature `entered` has positive correlation with y. Off the event the
/// value is the general single-active-feature knot |a| / (1 - sign(a) s R_ej) and the flags say so.
template <typename Derived, typename DerivedY>
std::vector<SecondKnotCandidate<typename Derived::Scalar>> second_knot_closed_form(
    const Eigen::MatrixBase<Derived>& X, const Eigen::MatrixBase<DerivedY>& y, Index entered,
    typename Derived::Scalar singular_tol = 1e-12) {
    using Scalar = typename Derived::Scalar;
    using std::abs;
    if (entered < 0 || entered >= X.cols()) throw ValidationError("entered feature out of range");
    const Scalar n = static_cast<Scalar>(X.rows());
    const Scalar ny = y.norm();
    const Scalar r_ey = cosine(X.col(entered), y);
    const Scalar s_e = r_ey >= 0 ? 1 : -1;
    std::vector<SecondKnotCandidate<Scalar>> out;
    for (Index j = 0; j < X.cols(); ++j) {
        if (j == entered) continue;
        SecondKnotCandidate<Scalar> c;
        c.feature = j;
        const Scalar r_jy = cosine(X.col(j), y);
        const Scalar r_ej = cosine(X.col(entered), X.col(j));
        const Scalar a = ny / n * (r_jy - r_ej * r_ey);
        c.entered_positive = r_ey > 0;
        c.nonnegative_numerator = a >= 0;
        c.nonsingular = abs(r_ej) < 1 - singular_tol;
        if (c.nonsingular) {
            if (c.flags_pass()) c.lambda = a / (1 - r_ej);
            else c.lambda = abs(a) / (1 - (a >= 0 ? 1 : -1) * s_e * r_ej);
        }
        out.push_back(c);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Error control of thresholded cluster proportions

/// Right-hand side (theta / (2 tau - 1)) E for tau in (1/2, 1]; infinity once the
/// factor exceeds `cap`.
template <typename Scalar = double>
Scalar error_bound_rhs(Scalar theta, Scalar tau, Scalar e_base_low, Scalar cap = Scalar(1e12)) {
    if (!(tau > Scalar(0.5) && tau <= 1)) throw ValidationError("tau must lie in (1/2, 1]");
    if (!(theta >= 0 && theta <= 1)) throw ValidationError("theta must lie in [0, 1]");
    const Scalar factor = theta / (2 * tau - 1);
    if (factor > cap) return std::numeric_limits<Scalar>::infinity();
    return factor * e_base_low;
}

/// Companion bound ((1 - theta) / (1 - 2 tau)) E on missed high-proportion clusters, tau in [0, 1/2).
template <typename Scalar = double>
Scalar miss_bound_rhs(Scalar theta, Scalar tau, Scalar e_base_high, Scalar cap = Scalar(1e12)) {
    if (!(tau >= 0 && tau < Scalar(0.5))) throw ValidationError("tau must lie in [0, 1/2)");
    if (!(theta >= 0 && theta <= 1)) throw ValidationError("theta must lie in [0, 1]");
    const Scalar factor = (1 - theta) / (1 - 2 * tau);
    if (factor > cap) return std::numeric_limits<Scalar>::infinity();
    return factor * e_base_high;
}

}  // namespace css::theory
