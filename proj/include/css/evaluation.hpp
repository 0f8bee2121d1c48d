#pragma once

#include "css/css.hpp"

#include <optional>
#include <string>
#include <vector>

namespace css {

/// Columns entering a refit: raw features plus weighted cluster representatives.
struct ModelSpec {
    IndexList features;
    struct Representative {
        IndexList members;
        Vector weights;  // aligned with members; fixed from training
    };
    std::vector<Representative> representatives;

    Index columns() const noexcept {
        return static_cast<Index>(features.size() + representatives.size());
    }
};

/// The refit design of `spec` built from X (representatives are rebuilt from X's columns).
Matrix build_design(const Matrix& X, const ModelSpec& spec);

/// OLS (with intercept) on the training rows, then mean over test rows of (yhat - mu)^2.
double refit_and_mse(const DataSet& train, const ModelSpec& spec, const Matrix& test_X,
                     const Vector& test_mu);

/// Refit columns for selected clusters: a cluster with one kept member contributes that
/// feature, otherwise its representative with the given weights.
ModelSpec model_from_clusters(const CssResult& result, const ClusterSelection& selection);

enum class SizeMode { FittedCoefficients, OriginalFeatures };

Index model_size(const ClusterSelection& selection, SizeMode mode);

/// Stability of M selections over p features (rows of 0/1 entries).
/// nullopt when M < 2 or the mean selected-set size is 0 or p.
std::optional<double> nogueira_stability(const Matrix& S);

struct StabilityEstimate {
    double value = 0.0;
    double variance = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

/// Stability plus its asymptotic variance and a normal-approximation interval.
std::optional<StabilityEstimate> nogueira_estimate(const Matrix& S, double z = 1.959963984540054);

/// One (method, model size) outcome of one replication.
struct Observation {
    std::string method;
    Index size = 0;
    double mse = 0.0;
    IndexList selected;  // original features kept by the model
};

struct SummaryRow {
    std::string method;
    Index size = 0;
    double mse_mean = 0.0;
    double mse_se = 0.0;
    std::optional<StabilityEstimate> stability;
    Index n_defined = 0;
};

/// Per (method, size) means over the replications where the model was defined.
/// Methods keep the given order; sizes ascend.
std::vector<SummaryRow> aggregate(const std::vector<Observation>& observations, Index p,
                                  const std::vector<std::string>& methods);

std::string summary_csv(const std::vector<SummaryRow>& rows);

}  // namespace css
