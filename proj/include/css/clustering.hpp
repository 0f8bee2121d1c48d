#pragma once

#include "css/css.hpp"

namespace css {

/// D_jk = 1 - |corr(X_j, X_k)| with centered Pearson correlation.
/// Throws ConstantColumn for the first constant column.
Matrix correlation_distance_matrix(const Matrix& X, int threads = 1);

/// Connected components of {(j, k) : D_jk < cutoff}, i.e. the single-linkage tree cut at
/// `cutoff`. Canonical ordering (clusters by smallest member).
ClusterPartition single_linkage_clusters(const Matrix& D, double cutoff);

struct MafScreen {
    IndexList kept;
    IndexList screened;
};

/// Keeps binary columns whose minor-category frequency min(mean, 1 - mean) is >= threshold.
MafScreen maf_screen(const Matrix& binary, double threshold = 0.01);

}  // namespace css
