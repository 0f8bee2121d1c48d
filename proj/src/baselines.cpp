#include "css/baselines.hpp"

#include "css/parallel.hpp"

#include <cmath>

namespace css {

Vector max_per_lambda_proportions(const std::vector<std::vector<IndexList>>& per_lambda, Index p) {
    if (per_lambda.empty()) throw ValidationError("no selections");
    const std::size_t L = per_lambda.front().size();
    Matrix counts = Matrix::Zero(p, static_cast<Index>(L));
    for (const auto& record : per_lambda) {
        if (record.size() != L) throw ValidationError("inconsistent penalty grid across selections");
        for (std::size_t l = 0; l < L; ++l) {
            for (Index j : record[l]) counts(j, static_cast<Index>(l)) += 1.0;
        }
    }
    return counts.rowwise().maxCoeff() / static_cast<double>(per_lambda.size());
}

Vector stability_selection_ss(const DataSet& data, const SubsamplePlan& plan,
                              const std::vector<double>& lambdas, const BaseOptions& options) {
    return max_per_lambda_proportions(per_lambda_selections(data, plan, lambdas, options), data.p());
}

Vector stability_selection_mb(const DataSet& data, const std::vector<IndexList>& subsamples,
                              const std::vector<double>& lambdas, const BaseOptions& options) {
    if (subsamples.empty()) throw ValidationError("no subsamples");
    if (lambdas.empty()) throw ValidationError("penalty grid is empty");
    std::vector<std::vector<IndexList>> per_lambda(subsamples.size());
    parallel_for(subsamples.size(), options.threads, [&](std::size_t b) {
        per_lambda[b] = lasso_supports(restrict(data, subsamples[b]), lambdas, options.solver);
    });
    return max_per_lambda_proportions(per_lambda, data.p());
}

PrototypeMap choose_prototypes(const DataSet& data, const ClusterPartition& partition, bool centered) {
    validate(data, false);
    validate(partition, data.p());
    PrototypeMap map;
    for (const IndexList& cluster : partition.clusters) {
        Index best = -1;
        double best_corr = -1.0;
        bool tied = false;
        for (Index j : cluster) {
            double r;
            if (centered) {
                r = pearson(data.X.col(j), data.y);
            } else {
                const double nx = data.X.col(j).norm();
                const double ny = data.y.norm();
                r = nx > 0 && ny > 0 ? data.X.col(j).dot(data.y) / (nx * ny)
                                     : std::numeric_limits<double>::quiet_NaN();
            }
            if (std::isnan(r)) {
                map.skipped.push_back(j);
                continue;
            }
            r = std::abs(r);
            if (r > best_corr || (r == best_corr && j < best)) {
                tied = r == best_corr;
                best = j;
                best_corr = r;
            } else if (r == best_corr) {
                tied = true;
            }
        }
        // A cluster made only of constant columns keeps its smallest member.
        if (best < 0) best = *std::min_element(cluster.begin(), cluster.end());
        map.prototype.push_back(best);
        map.tied.push_back(tied);
    }
    return map;
}

PrototypeLasso protolasso(const DataSet& data, const ClusterPartition& partition,
                          Index max_steps, const SolverOptions& solver, bool centered) {
    PrototypeLasso out;
    out.map = choose_prototypes(data, partition, centered);
    out.path = fit_lasso_path(select_columns(data, out.map.prototype), max_steps, solver);
    return out;
}

Matrix cluster_average_design(const Matrix& X, const ClusterPartition& partition) {
    Matrix design(X.rows(), partition.K());
    for (Index k = 0; k < partition.K(); ++k) {
        const IndexList& c = partition.clusters[static_cast<std::size_t>(k)];
        design.col(k) = X(Eigen::all, c).rowwise().mean();
    }
    return design;
}

LassoPath cluster_rep_lasso(const DataSet& data, const ClusterPartition& partition,
                            Index max_steps, const SolverOptions& solver) {
    validate(data, false);
    validate(partition, data.p());
    DataSet reduced;
    reduced.X = cluster_average_design(data.X, partition);
    reduced.y = data.y;
    return fit_lasso_path(reduced, max_steps, solver);
}

}  // namespace css
