#include "css/clustering.hpp"

#include "css/parallel.hpp"

#include <cmath>
#include <limits>

namespace css {

Matrix correlation_distance_matrix(const Matrix& X, int threads) {
    if (!X.allFinite()) throw ValidationError("feature matrix has non-finite entries");
    const Index p = X.cols();
    Matrix centered = X.rowwise() - X.colwise().mean();
    for (Index j = 0; j < p; ++j) {
        const double norm = centered.col(j).norm();
        if (norm == 0.0 || norm <= 1e-12 * X.col(j).norm()) throw ConstantColumn(j);
        centered.col(j) /= norm;
    }
    Matrix D(p, p);
    parallel_for(static_cast<std::size_t>(p), threads, [&](std::size_t jj) {
        const auto j = static_cast<Index>(jj);
        D(j, j) = 0.0;
        for (Index k = j + 1; k < p; ++k) {
            const double r = std::clamp(centered.col(j).dot(centered.col(k)), -1.0, 1.0);
            D(j, k) = 1.0 - std::abs(r);
        }
    });
    D.triangularView<Eigen::StrictlyLower>() = D.transpose();
    return D;
}

ClusterPartition single_linkage_clusters(const Matrix& D, double cutoff) {
    const Index p = D.rows();
    if (D.cols() != p || p < 1) throw ValidationError("distance matrix must be square and nonempty");
    if (!(cutoff > 0 && cutoff <= 1)) throw ValidationError("cutoff must lie in (0, 1]");
    if (!D.allFinite() || (D.array() < 0).any()) throw ValidationError("distances must be finite and >= 0");
    if (D != D.transpose()) throw ValidationError("distance matrix is not symmetric");

    // Prim's minimum spanning tree; cutting its edges at `cutoff` gives the
    // single-linkage clusters.
    std::vector<bool> in_tree(static_cast<std::size_t>(p), false);
    std::vector<double> dist(static_cast<std::size_t>(p), std::numeric_limits<double>::infinity());
    IndexList parent(static_cast<std::size_t>(p), -1);
    std::vector<IndexList> children(static_cast<std::size_t>(p));
    dist[0] = 0.0;
    for (Index step = 0; step < p; ++step) {
        Index u = -1;
        for (Index j = 0; j < p; ++j) {
            if (!in_tree[static_cast<std::size_t>(j)] && (u < 0 || dist[static_cast<std::size_t>(j)] < dist[static_cast<std::size_t>(u)])) u = j;
        }
        in_tree[static_cast<std::size_t>(u)] = true;
        const Index par = parent[static_cast<std::size_t>(u)];
        if (par >= 0 && D(par, u) < cutoff) children[static_cast<std::size_t>(par)].push_back(u);
        for (Index j = 0; j < p; ++j) {
            if (!in_tree[static_cast<std::size_t>(j)] && D(u, j) < dist[static_cast<std::size_t>(j)]) {
                dist[static_cast<std::size_t>(j)] = D(u, j);
                parent[static_cast<std::size_t>(j)] = u;
            }
        }
    }

    ClusterPartition out;
    std::vector<bool> placed(static_cast<std::size_t>(p), false);
    for (Index root = 0; root < p; ++root) {
        const Index par = parent[static_cast<std::size_t>(root)];
        if (par >= 0 && D(par, root) < cutoff) continue;  // not the top of its component
        IndexList cluster;
        IndexList stack{root};
        while (!stack.empty()) {
            const Index u = stack.back();
            stack.pop_back();
            cluster.push_back(u);
            for (Index c : children[static_cast<std::size_t>(u)]) stack.push_back(c);
        }
        out.clusters.push_back(std::move(cluster));
    }
    return canonical(std::move(out));
}

MafScreen maf_screen(const Matrix& binary, double threshold) {
    if (!(threshold >= 0 && threshold <= 0.5)) throw ValidationError("MAF threshold must lie in [0, 0.5]");
    if (binary.rows() < 1) throw ValidationError("empty genotype matrix");
    MafScreen out;
    for (Index j = 0; j < binary.cols(); ++j) {
        double ones = 0.0;
        for (Index i = 0; i < binary.rows(); ++i) {
            const double v = binary(i, j);
            if (v != 0.0 && v != 1.0)
                throw ValidationError("non-binary entry " + std::to_string(v) + " at row " +
                                      std::to_string(i) + ", column " + std::to_string(j));
            ones += v;
        }
        const double freq = ones / static_cast<double>(binary.rows());
        (std::min(freq, 1.0 - freq) >= threshold ? out.kept : out.screened).push_back(j);
    }
    return out;
}

}  // namespace css
