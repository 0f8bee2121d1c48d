#include "css/css.hpp"

#include "css/parallel.hpp"
#include "css/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace css {

namespace {

const IndexList& half_rows(const SubsamplePlan& plan, std::size_t record) {
    const HalfPair& pair = plan.pairs[record / 2];
    return record % 2 == 0 ? pair.first : pair.second;
}

template <typename Fn>
auto on_half(std::size_t record, Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        std::throw_with_nested(
            HalfSampleError(static_cast<Index>(record / 2), record % 2 == 1, e.what()));
    }
}

IndexList union_of(const std::vector<IndexList>& sets) {
    IndexList out;
    for (const IndexList& s : sets) out.insert(out.end(), s.begin(), s.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void check_records(const std::vector<SelectionRecord>& records, Index p) {
    if (records.empty()) throw ValidationError("no selection records");
    for (const SelectionRecord& r : records) {
        for (Index j : r.selected) {
            if (j < 0 || j >= p)
                throw ValidationError("selection record names feature " + std::to_string(j) +
                                      " outside [0, " + std::to_string(p) + ")");
        }
    }
}

}  // namespace

void validate(const ClusterPartition& partition, Index p) {
    if (partition.clusters.empty()) throw ValidationError("partition has no clusters");
    if (!partition.names.empty() && partition.names.size() != partition.clusters.size())
        throw ValidationError("partition names must be empty or one per cluster");
    std::vector<int> seen(static_cast<std::size_t>(p), 0);
    for (std::size_t k = 0; k < partition.clusters.size(); ++k) {
        if (partition.clusters[k].empty())
            throw ValidationError("cluster " + std::to_string(k) + " is empty");
        for (Index j : partition.clusters[k]) {
            if (j < 0 || j >= p)
                throw ValidationError("cluster " + std::to_string(k) + " names feature " +
                                      std::to_string(j) + " outside [0, " + std::to_string(p) + ")");
            if (seen[static_cast<std::size_t>(j)]++)
                throw ValidationError("feature " + std::to_string(j) + " is in more than one cluster");
        }
    }
    for (Index j = 0; j < p; ++j) {
        if (!seen[static_cast<std::size_t>(j)])
            throw ValidationError("feature " + std::to_string(j) + " is in no cluster");
    }
}

ClusterPartition singleton_partition(Index p) {
    ClusterPartition out;
    for (Index j = 0; j < p; ++j) out.clusters.push_back({j});
    return out;
}

ClusterPartition canonical(ClusterPartition partition) {
    for (IndexList& c : partition.clusters) std::sort(c.begin(), c.end());
    std::vector<std::size_t> order(partition.clusters.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ca = partition.clusters[a];
        const auto& cb = partition.clusters[b];
        if (ca.empty() || cb.empty()) return cb.empty() && !ca.empty();
        return ca.front() < cb.front();
    });
    ClusterPartition out;
    for (std::size_t k : order) {
        out.clusters.push_back(std::move(partition.clusters[k]));
        if (!partition.names.empty()) out.names.push_back(std::move(partition.names[k]));
    }
    return out;
}

IndexList cluster_membership(const ClusterPartition& partition, Index p) {
    IndexList of(static_cast<std::size_t>(p), -1);
    for (std::size_t k = 0; k < partition.clusters.size(); ++k) {
        for (Index j : partition.clusters[k]) {
            if (j >= 0 && j < p) of[static_cast<std::size_t>(j)] = static_cast<Index>(k);
        }
    }
    return of;
}

std::string describe(const BaseProcedure& base) {
    return std::visit(
        [](const auto& b) -> std::string {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, FixedLambdas>) return "fixed-lambda";
            else if constexpr (std::is_same_v<T, FirstK>) return "first-" + std::to_string(b.k);
            else return "cv-per-half";
        },
        base);
}

std::vector<IndexList> lasso_supports(const DataSet& data, const std::vector<double>& lambdas,
                                      const SolverOptions& solver) {
    std::vector<std::size_t> order(lambdas.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return lambdas[a] > lambdas[b]; });
    const LassoSolver lasso(data, solver);
    Vector state = Vector::Zero(data.p());
    std::vector<IndexList> out(lambdas.size());
    for (std::size_t i : order) out[i] = lasso.fit(lambdas[i], state).support;
    return out;
}

IndexList first_k_entrants(const DataSet& data, Index k, const SolverOptions& solver) {
    if (k < 1) throw ValidationError("first-k base procedure needs k >= 1");
    Index steps = k;
    while (true) {
        const LassoPath path = fit_lasso_path(data, steps, solver);
        const IndexList order = path.entry_order();
        const bool complete = static_cast<Index>(path.knots.size()) < steps;
        if (static_cast<Index>(order.size()) >= k || complete) {
            IndexList out = select_first_k(path, k);
            std::sort(out.begin(), out.end());
            return out;
        }
        steps *= 2;
    }
}

std::vector<std::vector<IndexList>> per_lambda_selections(const DataSet& data,
                                                          const SubsamplePlan& plan,
                                                          const std::vector<double>& lambdas,
                                                          const BaseOptions& options) {
    if (lambdas.empty()) throw ValidationError("penalty grid is empty");
    for (double l : lambdas) {
        if (!(l >= 0) || !std::isfinite(l)) throw ValidationError("penalties must be finite and >= 0");
    }
    if (plan.n != data.n()) throw ValidationError("subsample plan was drawn for a different n");
    std::vector<std::vector<IndexList>> out(2 * plan.pairs.size());
    parallel_for(out.size(), options.threads, [&](std::size_t r) {
        out[r] = on_half(r, [&] { return lasso_supports(restrict(data, half_rows(plan, r)), lambdas, options.solver); });
    });
    return out;
}

std::vector<SelectionRecord> run_base_selections(const DataSet& data, const SubsamplePlan& plan,
                                                 const BaseProcedure& base,
                                                 const BaseOptions& options) {
    validate(data, false);
    if (plan.n != data.n()) throw ValidationError("subsample plan was drawn for a different n");
    if (plan.pairs.empty()) throw ValidationError("subsample plan has no pairs");
    std::vector<SelectionRecord> records(2 * plan.pairs.size());
    for (std::size_t r = 0; r < records.size(); ++r) {
        records[r].pair = static_cast<Index>(r / 2);
        records[r].half = r % 2 == 0 ? Half::A : Half::Complement;
    }

    if (const auto* fixed = std::get_if<FixedLambdas>(&base)) {
        const auto per_lambda = per_lambda_selections(data, plan, fixed->lambdas, options);
        for (std::size_t r = 0; r < records.size(); ++r) records[r].selected = union_of(per_lambda[r]);
        return records;
    }
    if (const auto* first = std::get_if<FirstK>(&base)) {
        if (first->k < 1 || first->k > data.p())
            throw ValidationError("first-k base procedure needs 1 <= k <= p");
        parallel_for(records.size(), options.threads, [&](std::size_t r) {
            records[r].selected = on_half(r, [&] {
                return first_k_entrants(restrict(data, half_rows(plan, r)), first->k, options.solver);
            });
        });
        return records;
    }
    const auto& cv = std::get<CvPerHalf>(base);
    parallel_for(records.size(), options.threads, [&](std::size_t r) {
        records[r].selected = on_half(r, [&] {
            const DataSet half = restrict(data, half_rows(plan, r));
            const auto grid = default_lambda_grid(half, cv.grid_size, cv.ratio, options.solver.center);
            CvOptions cv_options;
            cv_options.folds = cv.folds;
            cv_options.solver = options.solver;
            const double lambda =
                cross_validate(half, grid, derive_seed(options.seed, 0xC7000000ull + r), cv_options).lambda;
            return LassoSolver(half, options.solver).fit(lambda).support;
        });
    });
    return records;
}

Vector feature_proportions(const std::vector<SelectionRecord>& records, Index p) {
    check_records(records, p);
    Vector counts = Vector::Zero(p);
    for (const SelectionRecord& r : records) {
        for (Index j : r.selected) counts[j] += 1.0;
    }
    return counts / static_cast<double>(records.size());
}

Vector cluster_proportions(const std::vector<SelectionRecord>& records,
                           const ClusterPartition& partition) {
    Index p = 0;
    for (const IndexList& c : partition.clusters) {
        for (Index j : c) p = std::max(p, j + 1);
    }
    check_records(records, p);
    const IndexList of = cluster_membership(partition, p);
    Vector counts = Vector::Zero(partition.K());
    std::vector<char> hit(partition.clusters.size());
    for (const SelectionRecord& r : records) {
        std::fill(hit.begin(), hit.end(), 0);
        for (Index j : r.selected) hit[static_cast<std::size_t>(of[static_cast<std::size_t>(j)])] = 1;
        for (std::size_t k = 0; k < hit.size(); ++k) counts[static_cast<Index>(k)] += hit[k];
    }
    return counts / static_cast<double>(records.size());
}

Vector simultaneous_cluster_proportions(const std::vector<SelectionRecord>& records,
                                        const ClusterPartition& partition) {
    Index p = 0;
    for (const IndexList& c : partition.clusters) {
        for (Index j : c) p = std::max(p, j + 1);
    }
    check_records(records, p);
    const IndexList of = cluster_membership(partition, p);
    std::map<Index, std::pair<const SelectionRecord*, const SelectionRecord*>> pairs;
    for (const SelectionRecord& r : records) {
        auto& slot = pairs[r.pair];
        auto& side = r.half == Half::A ? slot.first : slot.second;
        if (side) throw ValidationError("duplicate record for pair " + std::to_string(r.pair));
        side = &r;
    }
    const auto K = static_cast<std::size_t>(partition.K());
    Vector counts = Vector::Zero(partition.K());
    std::vector<char> hit_a(K), hit_b(K);
    for (const auto& [b, slot] : pairs) {
        if (!slot.first || !slot.second)
            throw ValidationError("pair " + std::to_string(b) + " is missing one of its halves");
        std::fill(hit_a.begin(), hit_a.end(), 0);
        std::fill(hit_b.begin(), hit_b.end(), 0);
        for (Index j : slot.first->selected) hit_a[static_cast<std::size_t>(of[static_cast<std::size_t>(j)])] = 1;
        for (Index j : slot.second->selected) hit_b[static_cast<std::size_t>(of[static_cast<std::size_t>(j)])] = 1;
        for (std::size_t k = 0; k < K; ++k) counts[static_cast<Index>(k)] += hit_a[k] && hit_b[k];
    }
    return counts / static_cast<double>(pairs.size());
}

std::string to_string(WeightScheme scheme) {
    switch (scheme) {
        case WeightScheme::Weighted: return "weighted";
        case WeightScheme::Simple: return "simple";
        case WeightScheme::Sparse: return "sparse";
    }
    return "unknown";
}

WeightScheme parse_scheme(const std::string& name) {
    if (name == "weighted") return WeightScheme::Weighted;
    if (name == "simple") return WeightScheme::Simple;
    if (name == "sparse") return WeightScheme::Sparse;
    throw ValidationError("unknown weighting scheme '" + name + "' (expected weighted, simple or sparse)");
}

ClusterWeights compute_weights(const Vector& feature_props, const IndexList& cluster,
                               WeightScheme scheme) {
    if (cluster.empty()) throw ValidationError("cannot weight an empty cluster");
    const auto m = static_cast<Index>(cluster.size());
    Vector props(m);
    for (Index i = 0; i < m; ++i) {
        const Index j = cluster[static_cast<std::size_t>(i)];
        if (j < 0 || j >= feature_props.size()) throw ValidationError("cluster member out of range");
        props[i] = feature_props[j];
    }
    ClusterWeights out;
    switch (scheme) {
        case WeightScheme::Weighted: {
            const double total = props.sum();
            if (total > 0) {
                out.w = props / total;
                return out;
            }
            out.fallback = true;
            out.w = Vector::Constant(m, 1.0 / static_cast<double>(m));
            return out;
        }
        case WeightScheme::Simple:
            out.w = Vector::Constant(m, 1.0 / static_cast<double>(m));
            return out;
        case WeightScheme::Sparse: {
            const double top = props.maxCoeff();
            const Vector mask = (props.array() == top).cast<double>().matrix();
            out.w = mask / mask.sum();
            return out;
        }
    }
    return out;
}

Vector cluster_representative(const Matrix& X, const IndexList& cluster, const Vector& w) {
    if (static_cast<Index>(cluster.size()) != w.size())
        throw ValidationError("weights do not match the cluster size");
    Vector rep = Vector::Zero(X.rows());
    for (std::size_t i = 0; i < cluster.size(); ++i) {
        const double wi = w[static_cast<Index>(i)];
        if (wi != 0.0) rep.noalias() += wi * X.col(cluster[i]);
    }
    return rep;
}

CssResult summarize(const DataSet& data, const ClusterPartition& partition,
                    const std::vector<SelectionRecord>& records, WeightScheme scheme) {
    validate(partition, data.p());
    CssResult result;
    result.partition = partition;
    result.scheme = scheme;
    result.feature_props = feature_proportions(records, data.p());
    result.cluster_props = cluster_proportions(records, partition);
    result.simultaneous_props = simultaneous_cluster_proportions(records, partition);
    result.B = static_cast<Index>(records.size() / 2);
    result.representatives.resize(data.n(), partition.K());
    for (std::size_t k = 0; k < partition.clusters.size(); ++k) {
        result.weights.push_back(compute_weights(result.feature_props, partition.clusters[k], scheme));
        result.representatives.col(static_cast<Index>(k)) =
            cluster_representative(data.X, partition.clusters[k], result.weights.back().w);
    }
    return result;
}

CssResult run_css(const DataSet& data, const ClusterPartition& partition,
                  const SubsamplePlan& plan, const BaseProcedure& base, WeightScheme scheme,
                  const BaseOptions& options) {
    validate(partition, data.p());
    CssResult result = summarize(data, partition, run_base_selections(data, plan, base, options), scheme);
    result.seed = plan.seed;
    result.base = describe(base);
    if (const auto* fixed = std::get_if<FixedLambdas>(&base)) result.lambdas = fixed->lambdas;
    return result;
}

IndexList threshold_clusters(const Vector& cluster_props, double tau) {
    if (!(tau > 0 && tau <= 1)) throw ValidationError("threshold tau must lie in (0, 1]");
    IndexList out;
    for (Index k = 0; k < cluster_props.size(); ++k) {
        if (cluster_props[k] >= tau) out.push_back(k);
    }
    return out;
}

ClusterSelection kept_members(const CssResult& result, const IndexList& clusters) {
    ClusterSelection out;
    for (Index k : clusters) {
        if (k < 0 || k >= result.partition.K()) throw ValidationError("cluster index out of range");
        const IndexList& members = result.partition.clusters[static_cast<std::size_t>(k)];
        const Vector& w = result.weights[static_cast<std::size_t>(k)].w;
        IndexList kept;
        for (std::size_t i = 0; i < members.size(); ++i) {
            if (w[static_cast<Index>(i)] != 0.0) kept.push_back(members[i]);
        }
        std::sort(kept.begin(), kept.end());
        out.clusters.push_back(k);
        out.kept.push_back(std::move(kept));
    }
    return out;
}

ClusterSelection threshold_select(const CssResult& result, double tau) {
    return kept_members(result, threshold_clusters(result.cluster_props, tau));
}

std::vector<IndexList> candidate_sets(const Vector& cluster_props) {
    std::vector<double> levels(cluster_props.data(), cluster_props.data() + cluster_props.size());
    std::sort(levels.begin(), levels.end(), std::greater<>());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    std::vector<IndexList> out;
    for (double level : levels) {
        IndexList set;
        for (Index k = 0; k < cluster_props.size(); ++k) {
            if (cluster_props[k] >= level) set.push_back(k);
        }
        out.push_back(std::move(set));
    }
    return out;
}

std::optional<IndexList> select_top_s(const Vector& cluster_props, Index s) {
    const Index K = cluster_props.size();
    if (s < 1 || s > K) throw ValidationError("model size s must lie in [1, K]");
    IndexList order(static_cast<std::size_t>(K));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return cluster_props[a] > cluster_props[b]; });
    if (s < K && cluster_props[order[static_cast<std::size_t>(s - 1)]] ==
                     cluster_props[order[static_cast<std::size_t>(s)]])
        return std::nullopt;
    IndexList top(order.begin(), order.begin() + s);
    std::sort(top.begin(), top.end());
    return top;
}

}  // namespace css
