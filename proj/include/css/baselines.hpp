#pragma once

#include "css/css.hpp"

namespace css {

/// Complementary-pairs stability selection: per-feature selection proportion at each
/// penalty, maximized over the grid (a single penalty gives the plain estimator).
Vector stability_selection_ss(const DataSet& data, const SubsamplePlan& plan,
                              const std::vector<double>& lambdas, const BaseOptions& options = {});

/// Same statistic from per-lambda supports already computed ([record][lambda]).
Vector max_per_lambda_proportions(const std::vector<std::vector<IndexList>>& per_lambda, Index p);

/// Stability selection on unpaired subsamples: max over the grid of per-penalty frequencies.
Vector stability_selection_mb(const DataSet& data, const std::vector<IndexList>& subsamples,
                              const std::vector<double>& lambdas, const BaseOptions& options = {});

struct PrototypeMap {
    IndexList prototype;      // one feature per cluster
    std::vector<bool> tied;   // several members shared the top |correlation|
    IndexList skipped;        // zero-variance members left out of the argmax
};

/// argmax_{j in C} |corr(X_j, y)| per cluster, ties to the lowest index.
/// `centered` selects Pearson correlation (default) or the uncentered cosine.
PrototypeMap choose_prototypes(const DataSet& data, const ClusterPartition& partition,
                               bool centered = true);

struct PrototypeLasso {
    PrototypeMap map;
    LassoPath path;  // features of the path are cluster indices
};

PrototypeLasso protolasso(const DataSet& data, const ClusterPartition& partition,
                          Index max_steps, const SolverOptions& solver = {}, bool centered = true);

/// One simple-average column per cluster (singletons pass through), n x K.
Matrix cluster_average_design(const Matrix& X, const ClusterPartition& partition);

/// Lasso path on the simple-average cluster design; path features are cluster indices.
LassoPath cluster_rep_lasso(const DataSet& data, const ClusterPartition& partition,
                            Index max_steps, const SolverOptions& solver = {});

}  // namespace css
