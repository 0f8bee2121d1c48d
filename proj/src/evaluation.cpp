#include "css/evaluation.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

namespace css {

Matrix build_design(const Matrix& X, const ModelSpec& spec) {
    Matrix design(X.rows(), spec.columns());
    Index c = 0;
    for (Index j : spec.features) {
        if (j < 0 || j >= X.cols()) throw ValidationError("selected feature out of range");
        design.col(c++) = X.col(j);
    }
    for (const auto& rep : spec.representatives) design.col(c++) = cluster_representative(X, rep.members, rep.weights);
    return design;
}

double refit_and_mse(const DataSet& train, const ModelSpec& spec, const Matrix& test_X,
                     const Vector& test_mu) {
    if (test_X.rows() != test_mu.size()) throw ValidationError("test design and mean lengths differ");
    if (test_X.cols() != train.p()) throw ValidationError("test design has the wrong number of columns");
    if (spec.columns() >= train.n()) throw ValidationError("refit needs fewer columns than training rows");
    const OlsFit fit = ols_fit(build_design(train.X, spec), train.y, true);
    const Vector pred = (build_design(test_X, spec) * fit.coefficients).array() + fit.intercept;
    return (pred - test_mu).squaredNorm() / static_cast<double>(test_mu.size());
}

ModelSpec model_from_clusters(const CssResult& result, const ClusterSelection& selection) {
    ModelSpec spec;
    for (std::size_t i = 0; i < selection.clusters.size(); ++i) {
        const IndexList& kept = selection.kept[i];
        if (kept.size() == 1) {
            spec.features.push_back(kept.front());
            continue;
        }
        const auto k = static_cast<std::size_t>(selection.clusters[i]);
        spec.representatives.push_back({result.partition.clusters[k], result.weights[k].w});
    }
    return spec;
}

Index model_size(const ClusterSelection& selection, SizeMode mode) {
    if (mode == SizeMode::FittedCoefficients) return static_cast<Index>(selection.clusters.size());
    Index total = 0;
    for (const IndexList& kept : selection.kept) total += static_cast<Index>(kept.size());
    return total;
}

namespace {

void check_selection_matrix(const Matrix& S) {
    if ((S.array() != 0.0 && S.array() != 1.0).any())
        throw ValidationError("selection matrix entries must be 0 or 1");
}

}  // namespace

std::optional<double> nogueira_stability(const Matrix& S) {
    check_selection_matrix(S);
    const auto M = static_cast<double>(S.rows());
    const auto d = static_cast<double>(S.cols());
    if (S.rows() < 2 || S.cols() < 1) return std::nullopt;
    const Vector p_hat = S.colwise().mean().transpose();
    const double k_bar = p_hat.sum();
    const double denom = (k_bar / d) * (1.0 - k_bar / d);
    if (!(denom > 0)) return std::nullopt;
    const double spread = (p_hat.array() * (1.0 - p_hat.array())).mean();
    return 1.0 - (M / (M - 1.0)) * spread / denom;
}

std::optional<StabilityEstimate> nogueira_estimate(const Matrix& S, double z) {
    const auto phi = nogueira_stability(S);
    if (!phi) return std::nullopt;
    const auto M = static_cast<double>(S.rows());
    const auto d = static_cast<double>(S.cols());
    const Vector p_hat = S.colwise().mean().transpose();
    const double k_bar = p_hat.sum();
    const double denom = (k_bar / d) * (1.0 - k_bar / d);
    const Vector k = S.rowwise().sum();
    const Vector agree = S * p_hat / d;
    Vector phi_i(S.rows());
    for (Index i = 0; i < S.rows(); ++i) {
        phi_i[i] = (agree[i] - k[i] * k_bar / (d * d) +
                    (*phi / 2.0) * (2.0 * k[i] * k_bar / (d * d) - k[i] / d - k_bar / d + 1.0)) /
                   denom;
    }
    StabilityEstimate est;
    est.value = *phi;
    est.variance = 4.0 / (M * M) * (phi_i.array() - phi_i.mean()).square().sum();
    const double half = z * std::sqrt(est.variance);
    est.ci_lo = est.value - half;
    est.ci_hi = est.value + half;
    return est;
}

std::vector<SummaryRow> aggregate(const std::vector<Observation>& observations, Index p,
                                  const std::vector<std::string>& methods) {
    std::map<std::pair<std::string, Index>, std::vector<const Observation*>> groups;
    for (const Observation& o : observations) groups[{o.method, o.size}].push_back(&o);
    std::vector<SummaryRow> rows;
    for (const std::string& method : methods) {
        for (const auto& [key, group] : groups) {
            if (key.first != method) continue;
            SummaryRow row;
            row.method = method;
            row.size = key.second;
            row.n_defined = static_cast<Index>(group.size());
            double sum = 0.0;
            for (const Observation* o : group) sum += o->mse;
            row.mse_mean = sum / static_cast<double>(group.size());
            if (group.size() > 1) {
                double ss = 0.0;
                for (const Observation* o : group) ss += (o->mse - row.mse_mean) * (o->mse - row.mse_mean);
                row.mse_se = std::sqrt(ss / static_cast<double>(group.size() - 1) / static_cast<double>(group.size()));
            } else {
                row.mse_se = std::numeric_limits<double>::quiet_NaN();
            }
            Matrix S = Matrix::Zero(static_cast<Index>(group.size()), p);
            for (std::size_t i = 0; i < group.size(); ++i) {
                for (Index j : group[i]->selected) S(static_cast<Index>(i), j) = 1.0;
            }
            row.stability = nogueira_estimate(S);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
    std::ostringstream out;
    out << std::setprecision(10);
    auto num = [&](double v) -> std::ostream& {
        if (std::isfinite(v)) out << v;
        else out << "NA";
        return out;
    };
    out << "method,size,mse_mean,mse_se,stability,stability_ci_lo,stability_ci_hi,n_defined\n";
    for (const SummaryRow& r : rows) {
        out << r.method << ',' << r.size << ',';
        num(r.mse_mean) << ',';
        num(r.mse_se) << ',';
        if (r.stability) {
            num(r.stability->value) << ',';
            num(r.stability->ci_lo) << ',';
            num(r.stability->ci_hi) << ',';
        } else {
            out << "NA,NA,NA,";
        }
        out << r.n_defined << '\n';
    }
    return out.str();
}

}  // namespace css
