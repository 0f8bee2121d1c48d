#include "css/studies.hpp"

#include "css/baselines.hpp"
#include "css/parallel.hpp"

#include <cmath>
#include <sstream>

namespace css {

namespace {

constexpr std::uint64_t kTestTag = 0x7E57;
constexpr std::uint64_t kCvTag = 0xC5;
constexpr std::uint64_t kPlanTag = 0x9A17;

Design design_of(Study study) {
    return study == Study::Weighted ? Design::Weighted : Design::Sparse;
}

IndexList flatten(const std::vector<IndexList>& sets) {
    IndexList out;
    for (const IndexList& s : sets) out.insert(out.end(), s.begin(), s.end());
    std::sort(out.begin(), out.end());
    return out;
}

// Refit columns for a set of clusters where every multi-feature cluster is averaged.
ModelSpec averaged_model(const ClusterPartition& partition, const IndexList& clusters) {
    ModelSpec spec;
    for (Index k : clusters) {
        const IndexList& members = partition.clusters[static_cast<std::size_t>(k)];
        if (members.size() == 1) {
            spec.features.push_back(members.front());
        } else {
            const auto m = static_cast<Index>(members.size());
            spec.representatives.push_back({members, Vector::Constant(m, 1.0 / static_cast<double>(m))});
        }
    }
    return spec;
}

struct MethodOutcome {
    ModelSpec spec;
    IndexList selected;
};

std::vector<Observation> run_replication(const StudyConfig& cfg, Index r, RepDiagnostics& diag) {
    const Design design = design_of(cfg.study);
    const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(r));
    const SimInstance train = gen_design_sim(design, seed, cfg.n);
    const SimInstance test = draw_test_set(train, design, derive_seed(seed, kTestTag), cfg.test_n);
    const DataSet& data = train.data;
    const ClusterPartition& partition = train.truth.clusters;

    CvOptions cv;
    cv.folds = cfg.folds;
    const auto grid = default_lambda_grid(data, cfg.grid_size, cfg.grid_ratio);
    diag.lambda = cross_validate(data, grid, derive_seed(seed, kCvTag), cv).lambda;

    const SubsamplePlan plan = draw_complementary_pairs(data.n(), cfg.B, derive_seed(seed, kPlanTag));
    const auto records = run_base_selections(data, plan, FixedLambdas{{diag.lambda}});
    diag.feature_props = feature_proportions(records, data.p());
    diag.cluster_props = cluster_proportions(records, partition);

    const Index steps = 10 * cfg.max_size + 20;
    std::vector<Observation> out;
    for (const std::string& method : study_methods(cfg.study)) {
        // Each entry maps a model size to the method's model of that size, if defined.
        std::function<std::optional<MethodOutcome>(Index)> model_of;
        std::optional<LassoPath> path;
        std::optional<PrototypeLasso> proto;
        std::optional<CssResult> css;
        if (method == "lasso") {
            path = fit_lasso_path(data, steps);
            model_of = [&](Index s) -> std::optional<MethodOutcome> {
                auto set = path->first_active_set_of_size(s);
                if (!set) return std::nullopt;
                return MethodOutcome{ModelSpec{*set, {}}, *set};
            };
        } else if (method == "protolasso") {
            proto = protolasso(data, partition, steps);
            model_of = [&](Index s) -> std::optional<MethodOutcome> {
                auto set = proto->path.first_active_set_of_size(s);
                if (!set) return std::nullopt;
                IndexList features;
                for (Index k : *set) features.push_back(proto->map.prototype[static_cast<std::size_t>(k)]);
                std::sort(features.begin(), features.end());
                return MethodOutcome{ModelSpec{features, {}}, features};
            };
        } else if (method == "ss") {
            model_of = [&](Index s) -> std::optional<MethodOutcome> {
                auto set = select_top_s(diag.feature_props, s);
                if (!set) return std::nullopt;
                return MethodOutcome{ModelSpec{*set, {}}, *set};
            };
        } else if (method == "crl") {
            path = cluster_rep_lasso(data, partition, steps);
            model_of = [&](Index s) -> std::optional<MethodOutcome> {
                auto set = path->first_active_set_of_size(s);
                if (!set) return std::nullopt;
                IndexList selected;
                for (Index k : *set) {
                    const IndexList& c = partition.clusters[static_cast<std::size_t>(k)];
                    selected.insert(selected.end(), c.begin(), c.end());
                }
                std::sort(selected.begin(), selected.end());
                return MethodOutcome{averaged_model(partition, *set), selected};
            };
        } else {
            const WeightScheme scheme = parse_scheme(method.substr(4));
            css = summarize(data, partition, records, scheme);
            model_of = [&](Index s) -> std::optional<MethodOutcome> {
                auto set = select_top_s(css->cluster_props, s);
                if (!set) return std::nullopt;
                const ClusterSelection sel = kept_members(*css, *set);
                return MethodOutcome{model_from_clusters(*css, sel), flatten(sel.kept)};
            };
        }
        const Index max_size = std::min<Index>(cfg.max_size, partition.K());
        for (Index s = 1; s <= max_size; ++s) {
            auto outcome = model_of(s);
            if (!outcome) continue;
            Observation obs;
            obs.method = method;
            obs.size = s;
            obs.mse = refit_and_mse(data, outcome->spec, test.data.X, test.mu);
            obs.selected = std::move(outcome->selected);
            out.push_back(std::move(obs));
        }
    }
    return out;
}

const SummaryRow* find_row(const StudyResult& result, const std::string& method, Index size) {
    for (const SummaryRow& row : result.rows) {
        if (row.method == method && row.size == size) return &row;
    }
    return nullptr;
}

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(4);
    out << v;
    return out.str();
}

// `better` has lower mean MSE than `worse` by at least one combined standard error
// at every size in [lo, hi] where both are defined (and at least one such size).
Verdict beats_by_se(const StudyResult& result, const std::string& better, const std::string& worse,
                    Index lo, Index hi) {
    Verdict v;
    v.name = better + " MSE below " + worse + " by >= 1 SE at sizes " + std::to_string(lo) + ".." +
             std::to_string(hi);
    v.pass = true;
    Index compared = 0;
    for (Index s = lo; s <= hi; ++s) {
        const SummaryRow* a = find_row(result, better, s);
        const SummaryRow* b = find_row(result, worse, s);
        if (!a || !b || a->n_defined < 2 || b->n_defined < 2) continue;
        ++compared;
        const double se = std::hypot(a->mse_se, b->mse_se);
        const double gap = b->mse_mean - a->mse_mean;
        if (!(gap >= se)) {
            v.pass = false;
            v.detail += "size " + std::to_string(s) + ": gap " + fmt(gap) + " < se " + fmt(se) + "; ";
        }
    }
    if (compared == 0) {
        v.pass = false;
        v.detail = "no size defined for both methods";
    }
    return v;
}

}  // namespace

Study parse_study(const std::string& name) {
    if (name == "sparse") return Study::Sparse;
    if (name == "averaging") return Study::Averaging;
    if (name == "weighted") return Study::Weighted;
    if (name == "theorem31") return Study::Theorem31;
    throw ValidationError("unknown study '" + name + "' (expected sparse, averaging, weighted or theorem31)");
}

std::string to_string(Study study) {
    switch (study) {
        case Study::Sparse: return "sparse";
        case Study::Averaging: return "averaging";
        case Study::Weighted: return "weighted";
        case Study::Theorem31: return "theorem31";
    }
    return "unknown";
}

std::vector<std::string> study_methods(Study study) {
    switch (study) {
        case Study::Sparse: return {"lasso", "protolasso", "ss", "css-sparse"};
        case Study::Averaging: return {"css-sparse", "css-simple", "crl"};
        case Study::Weighted: return {"css-weighted", "css-simple", "css-sparse", "crl"};
        case Study::Theorem31: return {};
    }
    return {};
}

StudyResult run_design_study(const StudyConfig& config) {
    if (config.study == Study::Theorem31) throw ValidationError("use run_theorem31_study for the two-proxy study");
    if (config.reps < 1) throw ValidationError("reps must be at least 1");
    if (config.test_n < 1) throw ValidationError("test-n must be at least 1");
    if (config.B < 1) throw ValidationError("B must be at least 1");
    StudyResult result;
    result.methods = study_methods(config.study);
    result.p = design_features(design_of(config.study));
    result.reps.resize(static_cast<std::size_t>(config.reps));
    std::vector<std::vector<Observation>> per_rep(static_cast<std::size_t>(config.reps));
    parallel_for(per_rep.size(), config.threads, [&](std::size_t r) {
        per_rep[r] = run_replication(config, static_cast<Index>(r), result.reps[r]);
        if (config.on_replication) config.on_replication(static_cast<Index>(r));
    });
    for (auto& obs : per_rep) {
        for (auto& o : obs) result.observations.push_back(std::move(o));
    }
    result.rows = aggregate(result.observations, result.p, result.methods);
    return result;
}

double EntrantTable::frequency(Index first, Index second) const {
    const auto it = counts.find({first, second});
    if (it == counts.end() || reps == 0) return 0.0;
    return static_cast<double>(it->second) / static_cast<double>(reps);
}

EntrantTable run_theorem31_study(const StudyConfig& config) {
    if (config.reps < 1) throw ValidationError("reps must be at least 1");
    EntrantTable table;
    table.n = config.theorem31_n;
    table.beta_Z = config.beta_Z ? *config.beta_Z
                                 : theory::theorem31_interval(config.theorem31_n, config.sigma_eps_sq).midpoint();
    table.reps = config.reps;
    const auto reps = static_cast<std::size_t>(config.reps);
    std::vector<std::pair<Index, Index>> entrants(reps, {-1, -1});
    std::vector<char> tied(reps, 0);
    if (config.theorem31_B > 0) {
        table.feature_props = Matrix::Zero(config.reps, 3);
        table.cluster_props = Matrix::Zero(config.reps, 2);
    }
    ClusterPartition partition;
    partition.clusters = {{0, 1}, {2}};
    parallel_for(reps, config.threads, [&](std::size_t r) {
        const std::uint64_t seed = derive_seed(config.seed, r);
        const SimInstance sim =
            gen_theorem31_instance(config.theorem31_n, config.sigma_eps_sq, table.beta_Z, seed);
        try {
            const IndexList order = fit_lasso_path(sim.data, 2).entry_order();
            if (order.size() >= 2) entrants[r] = {order[0], order[1]};
        } catch (const PathTie&) {
            tied[r] = 1;
        }
        if (config.theorem31_B > 0) {
            const SubsamplePlan plan =
                draw_complementary_pairs(sim.data.n(), config.theorem31_B, derive_seed(seed, kPlanTag));
            const auto records = run_base_selections(sim.data, plan, FirstK{2});
            table.feature_props.row(static_cast<Index>(r)) = feature_proportions(records, 3).transpose();
            table.cluster_props.row(static_cast<Index>(r)) = cluster_proportions(records, partition).transpose();
        }
        if (config.on_replication) config.on_replication(static_cast<Index>(r));
    });
    for (std::size_t r = 0; r < reps; ++r) {
        if (tied[r]) ++table.ties;
        else ++table.counts[entrants[r]];
    }
    return table;
}

std::vector<Verdict> study_verdicts(Study study, const StudyResult& result) {
    std::vector<Verdict> out;
    if (study == Study::Sparse) {
        out.push_back(beats_by_se(result, "css-sparse", "ss", 2, 8));

        Verdict split;
        split.name = "ss proxy proportions below the top weak-signal proportion in >= 80% of reps";
        Index hits = 0;
        for (const RepDiagnostics& d : result.reps) {
            hits += d.feature_props.head(10).maxCoeff() < d.feature_props.segment(10, 10).maxCoeff();
        }
        const double frac = static_cast<double>(hits) / static_cast<double>(result.reps.size());
        split.pass = frac >= 0.8;
        split.detail = "fraction " + fmt(frac);
        out.push_back(split);

        Verdict stab;
        stab.name = "css-sparse stability >= lasso stability at sizes 2..8";
        stab.pass = true;
        Index compared = 0;
        for (Index s = 2; s <= 8; ++s) {
            const SummaryRow* a = find_row(result, "css-sparse", s);
            const SummaryRow* b = find_row(result, "lasso", s);
            if (!a || !b || !a->stability || !b->stability) continue;
            ++compared;
            if (!(a->stability->value >= b->stability->value)) {
                stab.pass = false;
                stab.detail += "size " + std::to_string(s) + ": " + fmt(a->stability->value) + " < " +
                               fmt(b->stability->value) + "; ";
            }
        }
        if (compared == 0) stab.pass = false;
        out.push_back(stab);
    } else if (study == Study::Averaging) {
        out.push_back(beats_by_se(result, "css-simple", "css-sparse", 2, 8));
        out.push_back(beats_by_se(result, "crl", "css-sparse", 2, 8));
    } else if (study == Study::Weighted) {
        Verdict mse;
        mse.name = "css-weighted MSE <= css-simple MSE at sizes 2..8, by >= 1 SE at >= 4 sizes";
        Index clear = 0;
        Index compared = 0;
        mse.pass = true;
        for (Index s = 2; s <= 8; ++s) {
            const SummaryRow* w = find_row(result, "css-weighted", s);
            const SummaryRow* u = find_row(result, "css-simple", s);
            if (!w || !u || w->n_defined < 2 || u->n_defined < 2) continue;
            ++compared;
            if (!(w->mse_mean <= u->mse_mean)) {
                mse.pass = false;
                mse.detail += "size " + std::to_string(s) + " not lower; ";
            }
            clear += u->mse_mean - w->mse_mean >= std::hypot(w->mse_se, u->mse_se);
        }
        mse.pass = mse.pass && compared > 0 && clear >= 4;
        mse.detail += std::to_string(clear) + " sizes clear by 1 SE";
        out.push_back(mse);

        Verdict stab;
        stab.name = "css-weighted and css-simple stabilities within 0.02 at sizes 2..8";
        stab.pass = true;
        Index stab_compared = 0;
        for (Index s = 2; s <= 8; ++s) {
            const SummaryRow* w = find_row(result, "css-weighted", s);
            const SummaryRow* u = find_row(result, "css-simple", s);
            if (!w || !u || !w->stability || !u->stability) continue;
            ++stab_compared;
            const double gap = std::abs(w->stability->value - u->stability->value);
            if (!(gap <= 0.02)) {
                stab.pass = false;
                stab.detail += "size " + std::to_string(s) + ": gap " + fmt(gap) + "; ";
            }
        }
        if (stab_compared == 0) stab.pass = false;
        out.push_back(stab);
    }
    return out;
}

std::vector<Verdict> theorem31_verdicts(const EntrantTable& table) {
    std::vector<Verdict> out;
    const double f13 = table.frequency(0, 2);
    const double f23 = table.frequency(1, 2);
    out.push_back({"freq(X1 then X3) in [0.33, 0.55]", f13 >= 0.33 && f13 <= 0.55, fmt(f13)});
    out.push_back({"freq(X2 then X3) within 0.05 of freq(X1 then X3)", std::abs(f13 - f23) <= 0.05,
                   fmt(f23) + " vs " + fmt(f13)});
    out.push_back({"freq((X1 or X2) then X3) >= 0.80", f13 + f23 >= 0.8, fmt(f13 + f23)});
    if (table.feature_props.rows() > 0) {
        const Vector mean = table.feature_props.colwise().mean().transpose();
        out.push_back({"mean Pi(X1), Pi(X2) <= 0.62", mean[0] <= 0.62 && mean[1] <= 0.62,
                       fmt(mean[0]) + ", " + fmt(mean[1])});
        out.push_back({"mean Pi(X3) >= 0.85", mean[2] >= 0.85, fmt(mean[2])});
        Index wins = 0;
        for (Index r = 0; r < table.cluster_props.rows(); ++r)
            wins += table.cluster_props(r, 0) >= table.cluster_props(r, 1);
        const double frac = static_cast<double>(wins) / static_cast<double>(table.cluster_props.rows());
        out.push_back({"Theta({X1,X2}) >= Theta({X3}) in >= 95% of reps", frac >= 0.95, fmt(frac)});
    }
    return out;
}

std::string entrant_csv(const EntrantTable& table) {
    std::ostringstream out;
    out.precision(10);
    out << "first,second,count,frequency\n";
    for (const auto& [key, count] : table.counts) {
        out << key.first << ',' << key.second << ',' << count << ','
            << static_cast<double>(count) / static_cast<double>(table.reps) << '\n';
    }
    if (table.ties > 0) {
        out << "tie,tie," << table.ties << ','
            << static_cast<double>(table.ties) / static_cast<double>(table.reps) << '\n';
    }
    return out.str();
}

}  // namespace css
