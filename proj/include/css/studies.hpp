#pragma once

#include "css/evaluation.hpp"
#include "css/simgen.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace css {

enum class Study { Sparse, Averaging, Weighted, Theorem31 };

Study parse_study(const std::string& name);
std::string to_string(Study study);

/// Methods compared by each design study, in report order.
std::vector<std::string> study_methods(Study study);

struct StudyConfig {
    Study study = Study::Sparse;
    Index reps = 100;
    std::uint64_t seed = 0;
    Index n = 200;
    Index test_n = 10000;
    Index B = 100;
    Index max_size = 11;
    int folds = 10;
    int grid_size = 100;
    double grid_ratio = 1e-3;
    int threads = 1;
    std::function<void(Index)> on_replication;  // called after each replication

    // Two-proxy study only.
    Index theorem31_n = 5000;
    double sigma_eps_sq = 1.0;
    std::optional<double> beta_Z;  // default: midpoint of the interval
    Index theorem31_B = 0;         // > 0: also run first-2 stability selection with B pairs
};

struct RepDiagnostics {
    double lambda = 0.0;    // cross-validated penalty of the base procedure
    Vector feature_props;   // per-feature proportions
    Vector cluster_props;   // per-cluster proportions on the known clusters
};

struct StudyResult {
    std::vector<std::string> methods;
    std::vector<Observation> observations;
    std::vector<SummaryRow> rows;
    std::vector<RepDiagnostics> reps;
    Index p = 0;
};

/// Runs the sparse / averaging / weighted simulation protocol.
StudyResult run_design_study(const StudyConfig& config);

struct EntrantTable {
    Index n = 0;
    double beta_Z = 0.0;
    Index reps = 0;
    std::map<std::pair<Index, Index>, Index> counts;  // (first, second) entrant -> reps
    Index ties = 0;                                   // reps whose path had a tie
    Matrix feature_props;  // reps x 3, only with theorem31_B > 0
    Matrix cluster_props;  // reps x 2 for clusters {0, 1} and {2}

    double frequency(Index first, Index second) const;
};

EntrantTable run_theorem31_study(const StudyConfig& config);

/// Pass/fail checks of a finished study written to the summary report.
struct Verdict {
    std::string name;
    bool pass = false;
    std::string detail;
};

std::vector<Verdict> study_verdicts(Study study, const StudyResult& result);
std::vector<Verdict> theorem31_verdicts(const EntrantTable& table);

/// First-two-entrants frequency table as CSV: first,second,count,frequency.
std::string entrant_csv(const EntrantTable& table);

}  // namespace css
