#pragma once

#include "css/lasso.hpp"
#include "css/subsampling.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace css {

/// Disjoint, nonempty clusters covering the feature indices [0, p).
struct ClusterPartition {
    std::vector<IndexList> clusters;
    std::vector<std::string> names;  // empty or one per cluster

    Index K() const noexcept { return static_cast<Index>(clusters.size()); }
};

/// Throws ValidationError unless `partition` is a partition of [0, p).
void validate(const ClusterPartition& partition, Index p);

ClusterPartition singleton_partition(Index p);

/// Members sorted ascending, clusters ordered by their smallest member. Names follow.
ClusterPartition canonical(ClusterPartition partition);

/// cluster_of[j] = index of the cluster holding feature j.
IndexList cluster_membership(const ClusterPartition& partition, Index p);

enum class Half { A, Complement };

/// Features selected on one half-sample, already unioned over the penalty grid.
struct SelectionRecord {
    Index pair = 0;
    Half half = Half::A;
    IndexList selected;  // sorted ascending
};

/// Base selectors applied to each half-sample.
struct FixedLambdas {
    std::vector<double> lambdas;
};
struct FirstK {
    Index k = 2;
};
struct CvPerHalf {
    int folds = 10;
    int grid_size = 100;
    double ratio = 1e-3;
};
using BaseProcedure = std::variant<FixedLambdas, FirstK, CvPerHalf>;

std::string describe(const BaseProcedure& base);

struct BaseOptions {
    SolverOptions solver{};
    int threads = 1;
    std::uint64_t seed = 0;  // only used by CvPerHalf
};

/// Lasso supports at each penalty (in the order given), warm-started internally.
std::vector<IndexList> lasso_supports(const DataSet& data, const std::vector<double>& lambdas,
                                      const SolverOptions& solver = {});

/// First k distinct entrants of the path of `data`, sorted ascending.
IndexList first_k_entrants(const DataSet& data, Index k, const SolverOptions& solver = {});

/// Supports per half-sample and penalty: result[2b + h][l] for pair b, half h, lambdas[l].
std::vector<std::vector<IndexList>> per_lambda_selections(const DataSet& data,
                                                          const SubsamplePlan& plan,
                                                          const std::vector<double>& lambdas,
                                                          const BaseOptions& options = {});

/// 2B records, ordered (pair 0, A), (pair 0, complement), (pair 1, A), ...
/// Failures on a half-sample are rethrown as HalfSampleError with the original nested.
std::vector<SelectionRecord> run_base_selections(const DataSet& data, const SubsamplePlan& plan,
                                                 const BaseProcedure& base,
                                                 const BaseOptions& options = {});

/// Fraction of records selecting each feature.
Vector feature_proportions(const std::vector<SelectionRecord>& records, Index p);

/// Fraction of records selecting at least one member of each cluster.
Vector cluster_proportions(const std::vector<SelectionRecord>& records,
                           const ClusterPartition& partition);

/// Fraction of complementary pairs in which a cluster is hit in both halves.
Vector simultaneous_cluster_proportions(const std::vector<SelectionRecord>& records,
                                        const ClusterPartition& partition);

enum class WeightScheme { Weighted, Simple, Sparse };

std::string to_string(WeightScheme scheme);
WeightScheme parse_scheme(const std::string& name);

struct ClusterWeights {
    Vector w;               // aligned with the cluster's member list
    bool fallback = false;  // weighted scheme with all-zero proportions: simple weights used
};

ClusterWeights compute_weights(const Vector& feature_props, const IndexList& cluster,
                               WeightScheme scheme);

/// sum_j w_j X_j over the cluster's raw columns.
Vector cluster_representative(const Matrix& X, const IndexList& cluster, const Vector& w);

struct CssResult {
    Vector feature_props;
    Vector cluster_props;
    Vector simultaneous_props;
    ClusterPartition partition;
    WeightScheme scheme = WeightScheme::Weighted;
    std::vector<ClusterWeights> weights;  // one per cluster
    Matrix representatives;               // n x K
    Index B = 0;
    std::uint64_t seed = 0;
    std::string base;
    std::vector<double> lambdas;  // empty unless the base used a fixed grid
};

/// Assembles proportions, weights and representatives from finished selections.
CssResult summarize(const DataSet& data, const ClusterPartition& partition,
                    const std::vector<SelectionRecord>& records, WeightScheme scheme);

/// Full pipeline: base selections on every half of `plan`, then summarize.
CssResult run_css(const DataSet& data, const ClusterPartition& partition,
                  const SubsamplePlan& plan, const BaseProcedure& base, WeightScheme scheme,
                  const BaseOptions& options = {});

/// Clusters with proportion >= tau, ascending.
IndexList threshold_clusters(const Vector& cluster_props, double tau);

struct ClusterSelection {
    IndexList clusters;            // ascending
    std::vector<IndexList> kept;   // per selected cluster: members with nonzero weight
};

ClusterSelection threshold_select(const CssResult& result, double tau);

/// Kept members of an arbitrary list of clusters.
ClusterSelection kept_members(const CssResult& result, const IndexList& clusters);

/// Nested candidate cluster sets {k : prop_k >= level}, one per distinct proportion
/// level, from the highest level down. Each set is sorted ascending.
std::vector<IndexList> candidate_sets(const Vector& cluster_props);

/// The s clusters with the largest proportions, or nullopt when the s-th and
/// (s+1)-th largest proportions are equal.
std::optional<IndexList> select_top_s(const Vector& cluster_props, Index s);

}  // namespace css
