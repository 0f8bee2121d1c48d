#include "css/cli.hpp"

#include "css/baselines.hpp"
#include "css/clustering.hpp"
#include "css/io.hpp"
#include "css/rng.hpp"
#include "css/studies.hpp"
#include "css/theory.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <mutex>

namespace css {

namespace {

constexpr std::uint64_t kCvTag = 0xC5;
constexpr std::uint64_t kPlanTag = 0x9A17;

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("CSS_SEED")) {
        std::uint64_t v = 0;
        const std::string s(env);
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
            throw ValidationError("CSS_SEED must be a nonnegative integer, got '" + s + "'");
        return v;
    }
    return 0;
}

std::filesystem::path prepare_dir(const std::string& dir) {
    std::filesystem::path path(dir);
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw ValidationError("cannot create output directory " + dir + ": " + ec.message());
    return path;
}

std::string column_label(Index j, const std::vector<std::string>& header) {
    std::string label = "column " + std::to_string(j);
    if (!header.empty()) label += " ('" + header[static_cast<std::size_t>(j)] + "')";
    return label;
}

Matrix distances_or_explain(const Matrix& X, const IndexList& columns, const std::vector<std::string>& header,
                            int threads) {
    try {
        return correlation_distance_matrix(X(Eigen::all, columns), threads);
    } catch (const ConstantColumn& e) {
        throw ValidationError(column_label(columns[static_cast<std::size_t>(e.column())], header) +
                              " is constant; screen it out first (e.g. --binary --maf)");
    }
}

// ---------------------------------------------------------------------------

struct RunFlags {
    std::string x_path;
    std::string y_path;
    std::string clusters_path;
    bool auto_cluster = false;
    double cutoff = 0.5;
    std::string scheme = "weighted";
    std::optional<double> tau;
    std::optional<Index> top;
    Index B = 100;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string mode = "css";
    std::string base = "cv";
    std::vector<double> lambdas;
    Index k = 2;
    int folds = 10;
    bool center = false;
    bool save_plan = false;
    int threads = 1;
};

int cmd_run(const RunFlags& f, std::ostream& out) {
    const CsvTable x = read_csv(f.x_path);
    DataSet data;
    data.X = x.values;
    data.y = read_csv_vector(f.y_path);
    data.feature_names = x.header;
    if (data.y.size() != data.n())
        throw ValidationError("--y has " + std::to_string(data.y.size()) + " rows but --x has " +
                              std::to_string(data.n()));
    validate(data, true);
    if (f.tau && f.top) throw ValidationError("--tau and --top are mutually exclusive");
    const WeightScheme scheme = parse_scheme(f.scheme);
    const std::uint64_t seed = resolve_seed(f.seed);

    // Partition on original column indices; screened columns are dropped from the design.
    ClusterPartition partition;
    IndexList screened;
    if (!f.clusters_path.empty()) {
        json j;
        try {
            j = json::parse(read_text(f.clusters_path));
        } catch (const json::exception& e) {
            throw ValidationError(f.clusters_path + ": " + e.what());
        }
        partition = partition_from_json(j);
        if (j.contains("screened")) screened = j["screened"].get<IndexList>();
    }
    IndexList kept;
    for (Index c = 0; c < data.p(); ++c) {
        if (std::find(screened.begin(), screened.end(), c) == screened.end()) kept.push_back(c);
    }
    if (kept.empty()) throw ValidationError("every column is screened out");
    if (f.clusters_path.empty()) {
        if (f.auto_cluster) {
            if (!(f.cutoff >= 0 && f.cutoff <= 1)) throw ValidationError("--cutoff must lie in [0, 1]");
            partition = f.cutoff == 0 ? singleton_partition(data.p())
                                      : single_linkage_clusters(distances_or_explain(data.X, kept, x.header, f.threads), f.cutoff);
        } else {
            partition = singleton_partition(data.p());
        }
    } else {
        // Map original indices onto positions among the kept columns.
        IndexList position(static_cast<std::size_t>(data.p()), -1);
        for (std::size_t i = 0; i < kept.size(); ++i) position[static_cast<std::size_t>(kept[i])] = static_cast<Index>(i);
        for (IndexList& c : partition.clusters) {
            for (Index& j : c) {
                if (j < 0 || j >= data.p()) throw ValidationError("cluster file names feature " + std::to_string(j) + " outside the data");
                if (position[static_cast<std::size_t>(j)] < 0)
                    throw ValidationError("cluster file puts screened feature " + std::to_string(j) + " in a cluster");
                j = position[static_cast<std::size_t>(j)];
            }
        }
    }
    if (kept.size() != static_cast<std::size_t>(data.p())) data = select_columns(data, kept);
    validate(partition, data.p());
    partition = canonical(std::move(partition));
    if (f.mode == "ss") partition = singleton_partition(data.p());
    else if (f.mode != "css") throw ValidationError("--mode must be css or ss");

    SolverOptions solver;
    solver.center = f.center;
    BaseOptions options;
    options.solver = solver;
    options.threads = f.threads;
    options.seed = derive_seed(seed, kCvTag);

    BaseProcedure base;
    if (!f.lambdas.empty()) {
        base = FixedLambdas{f.lambdas};
    } else if (f.base == "cv") {
        CvOptions cv;
        cv.folds = f.folds;
        cv.solver = solver;
        const auto grid = default_lambda_grid(data, 100, 1e-3, solver.center);
        base = FixedLambdas{{cross_validate(data, grid, derive_seed(seed, kCvTag), cv).lambda}};
    } else if (f.base == "first-k") {
        base = FirstK{f.k};
    } else if (f.base == "cv-per-half") {
        CvPerHalf cv;
        cv.folds = f.folds;
        base = cv;
    } else {
        throw ValidationError("--base must be cv, first-k or cv-per-half");
    }
    if (f.mode == "ss" && !std::holds_alternative<FixedLambdas>(base))
        throw ValidationError("--mode ss needs a fixed penalty (--base cv or --lambda)");

    const SubsamplePlan plan = draw_complementary_pairs(data.n(), f.B, derive_seed(seed, kPlanTag), f.threads);
    CssResult result;
    if (f.mode == "ss") {
        const auto& lambdas = std::get<FixedLambdas>(base).lambdas;
        const auto per_lambda = per_lambda_selections(data, plan, lambdas, options);
        std::vector<SelectionRecord> records(per_lambda.size());
        for (std::size_t r = 0; r < records.size(); ++r) {
            records[r].pair = static_cast<Index>(r / 2);
            records[r].half = r % 2 == 0 ? Half::A : Half::Complement;
            IndexList all;
            for (const IndexList& s : per_lambda[r]) all.insert(all.end(), s.begin(), s.end());
            std::sort(all.begin(), all.end());
            all.erase(std::unique(all.begin(), all.end()), all.end());
            records[r].selected = std::move(all);
        }
        result = summarize(data, partition, records, scheme);
        result.feature_props = max_per_lambda_proportions(per_lambda, data.p());
        result.cluster_props = result.feature_props;
        result.seed = plan.seed;
        result.base = describe(base);
        result.lambdas = lambdas;
    } else {
        result = run_css(data, partition, plan, base, scheme, options);
    }

    std::optional<ClusterSelection> selection;
    bool undefined = false;
    if (f.tau) {
        selection = threshold_select(result, *f.tau);
    } else if (f.top) {
        if (*f.top < 1 || *f.top > result.partition.K())
            throw ValidationError("--top must lie in [1, number of clusters]");
        if (auto top = select_top_s(result.cluster_props, *f.top)) selection = kept_members(result, *top);
        else undefined = true;
    }

    const IndexMap map{kept.size() == static_cast<std::size_t>(x.values.cols()) ? IndexList{} : kept};
    json doc = to_json(result, selection, map);
    if (undefined) doc["selected"] = nullptr;
    if (!screened.empty()) doc["screened"] = screened;
    const auto dir = prepare_dir(f.out_dir);
    write_text((dir / "css_result.json").string(), doc.dump(2) + "\n");
    write_text((dir / "css_result.csv").string(), css_csv(result, map));
    if (f.save_plan) write_text((dir / "plan.json").string(), to_json(plan).dump() + "\n");
    if (undefined)
        out << "top-" << *f.top << " selection is undefined (tied proportions)\n";
    out << "wrote " << (dir / "css_result.json").string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct SimulateFlags {
    std::string study;
    Index reps = 100;
    std::optional<std::uint64_t> seed;
    Index test_n = 10000;
    std::string out_dir;
    int threads = 1;
    Index n = 200;
    Index B = 100;
    Index max_size = 11;
    Index theorem31_n = 5000;
    double sigma_eps_sq = 1.0;
    std::optional<double> beta_Z;
    Index theorem31_B = 0;
    bool quiet = false;
};

json verdicts_json(const std::vector<Verdict>& verdicts) {
    json out = json::array();
    for (const Verdict& v : verdicts) out.push_back({{"check", v.name}, {"pass", v.pass}, {"detail", v.detail}});
    return out;
}

int cmd_simulate(const SimulateFlags& f, std::ostream& out, std::ostream& err) {
    StudyConfig config;
    config.study = parse_study(f.study);
    config.reps = f.reps;
    config.seed = resolve_seed(f.seed);
    config.test_n = f.test_n;
    config.threads = f.threads;
    config.n = f.n;
    config.B = f.B;
    config.max_size = f.max_size;
    config.theorem31_n = f.theorem31_n;
    config.sigma_eps_sq = f.sigma_eps_sq;
    config.beta_Z = f.beta_Z;
    config.theorem31_B = f.theorem31_B;
    if (config.reps < 1) throw ValidationError("--reps must be at least 1");
    std::mutex log_mutex;
    Index done = 0;
    if (!f.quiet) {
        config.on_replication = [&](Index) {
            std::lock_guard lock(log_mutex);
            err << "replication " << ++done << "/" << config.reps << " done\n";
        };
    }
    const auto dir = prepare_dir(f.out_dir);
    json summary = {{"study", f.study}, {"reps", config.reps}, {"seed", config.seed}};
    if (config.study == Study::Theorem31) {
        const EntrantTable table = run_theorem31_study(config);
        const auto interval = theory::theorem31_interval(config.theorem31_n, config.sigma_eps_sq);
        summary["n"] = table.n;
        summary["beta_Z"] = table.beta_Z;
        summary["interval"] = {interval.lo, interval.hi};
        summary["ties"] = table.ties;
        summary["verdicts"] = verdicts_json(theorem31_verdicts(table));
        write_text((dir / "entrants.csv").string(), entrant_csv(table));
    } else {
        const StudyResult result = run_design_study(config);
        summary["n"] = config.n;
        summary["test_n"] = config.test_n;
        summary["B"] = config.B;
        summary["methods"] = result.methods;
        summary["verdicts"] = verdicts_json(study_verdicts(config.study, result));
        write_text((dir / "report.csv").string(), summary_csv(result.rows));
    }
    write_text((dir / "summary.json").string(), summary.dump(2) + "\n");
    out << "wrote " << dir.string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct ClusterFlags {
    std::string x_path;
    double cutoff = 0.5;
    std::optional<double> maf;
    bool binary = false;
    std::string out_path;
    int threads = 1;
};

int cmd_cluster(const ClusterFlags& f, std::ostream& out) {
    if (!(f.cutoff >= 0 && f.cutoff <= 1)) throw ValidationError("--cutoff must lie in [0, 1]");
    const CsvTable x = read_csv(f.x_path);
    IndexList kept;
    IndexList screened;
    if (f.binary) {
        const MafScreen screen = maf_screen(x.values, f.maf.value_or(0.01));
        kept = screen.kept;
        screened = screen.screened;
    } else {
        if (f.maf) throw ValidationError("--maf requires --binary");
        for (Index c = 0; c < x.values.cols(); ++c) kept.push_back(c);
    }
    ClusterPartition partition;
    if (!kept.empty()) {
        if (f.cutoff == 0) {
            // Still reject constant columns, as for any other cutoff.
            distances_or_explain(x.values, kept, x.header, f.threads);
            partition = singleton_partition(static_cast<Index>(kept.size()));
        } else {
            partition = single_linkage_clusters(distances_or_explain(x.values, kept, x.header, f.threads), f.cutoff);
        }
        for (IndexList& c : partition.clusters) {
            for (Index& j : c) j = kept[static_cast<std::size_t>(j)];
        }
        if (!x.header.empty()) {
            for (const IndexList& c : partition.clusters) {
                std::string name;
                for (Index j : c) name += (name.empty() ? "" : "+") + x.header[static_cast<std::size_t>(j)];
                partition.names.push_back(name);
            }
        }
    }
    json doc = to_json(partition);
    doc["screened"] = screened;
    const std::string text = doc.dump(2) + "\n";
    if (f.out_path.empty()) {
        out << text;
    } else {
        write_text(f.out_path, text);
        out << "wrote " << f.out_path << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct OracleFlags {
    Index n = 0;
    double sigma_eps_sq = 1.0;
    double c2 = theory::default_c2();
    std::optional<double> beta_Z;
    std::vector<double> betas;
    std::vector<double> sigma_zeta_sq;
};

int cmd_oracle(const OracleFlags& f, std::ostream& out) {
    json doc;
    doc["n"] = f.n;
    doc["sigma_eps_sq"] = f.sigma_eps_sq;
    if (f.n >= 100) {
        const auto interval = theory::theorem31_interval(f.n, f.sigma_eps_sq, f.c2);
        doc["sigma_zeta_sq_n"] = theory::theorem31_sigma_zeta_sq(f.n);
        doc["interval"] = {{"lo", interval.lo}, {"hi", interval.hi}, {"empty", interval.empty()}};
        if (!interval.empty()) doc["interval"]["midpoint"] = interval.midpoint();
    }
    if (f.beta_Z && !f.sigma_zeta_sq.empty()) {
        theory::ProxyModelParams<double> m;
        m.n = f.n;
        m.q = static_cast<Index>(f.sigma_zeta_sq.size());
        m.p = m.q + static_cast<Index>(f.betas.size());
        m.beta_Z = *f.beta_Z;
        m.betas = f.betas;
        m.sigma_zeta_sq = f.sigma_zeta_sq;
        m.sigma_eps_sq = f.sigma_eps_sq;
        std::vector<double> risks;
        for (Index j = 0; j < m.p; ++j) risks.push_back(theory::risk_single_feature(m, j));
        const auto w = theory::optimal_weights(m.sigma_zeta_sq);
        doc["e_ideal"] = theory::e_ideal(m);
        doc["risk_single_feature"] = risks;
        doc["optimal_weights"] = w;
        doc["risk_optimal_representative"] = theory::risk_weighted_rep(m, w);
        doc["min_weighted_risk"] = theory::min_weighted_risk(m);
    } else if (f.beta_Z || !f.sigma_zeta_sq.empty() || !f.betas.empty()) {
        throw ValidationError("risk formulas need --beta-z and --sigma-zeta-sq (and optionally --betas)");
    }
    out << doc.dump(2) << "\n";
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cluster stability selection"};
    app.require_subcommand(1);

    RunFlags run;
    auto* run_cmd = app.add_subcommand("run", "Cluster stability selection on CSV data");
    run_cmd->add_option("--x", run.x_path, "Feature matrix CSV (rows = observations)")->required();
    run_cmd->add_option("--y", run.y_path, "Response CSV (one column)")->required();
    auto* clusters_opt = run_cmd->add_option("--clusters", run.clusters_path, "Cluster JSON");
    auto* auto_opt = run_cmd->add_flag("--auto-cluster", run.auto_cluster, "Estimate clusters by correlation");
    clusters_opt->excludes(auto_opt);
    run_cmd->add_option("--cutoff", run.cutoff, "Single-linkage cutoff on 1 - |corr|")->capture_default_str();
    run_cmd->add_option("--scheme", run.scheme, "weighted, simple or sparse")->capture_default_str();
    run_cmd->add_option("--tau", run.tau, "Select clusters with proportion >= tau");
    run_cmd->add_option("--top", run.top, "Select the top S clusters");
    run_cmd->add_option("--B", run.B, "Number of complementary pairs")->capture_default_str()->check(CLI::PositiveNumber);
    run_cmd->add_option("--seed", run.seed, "Seed (falls back to CSS_SEED, then 0)");
    run_cmd->add_option("--out", run.out_dir, "Output directory")->required();
    run_cmd->add_option("--mode", run.mode, "css, or ss for plain stability selection")->capture_default_str();
    run_cmd->add_option("--base", run.base, "cv, first-k or cv-per-half")->capture_default_str();
    run_cmd->add_option("--lambda", run.lambdas, "Fixed penalty grid (overrides --base)");
    run_cmd->add_option("--k", run.k, "k for --base first-k")->capture_default_str()->check(CLI::PositiveNumber);
    run_cmd->add_option("--folds", run.folds, "Cross-validation folds")->capture_default_str()->check(CLI::Range(2, 1000000));
    run_cmd->add_flag("--center", run.center, "Mean-center X and y inside the lasso");
    run_cmd->add_flag("--save-plan", run.save_plan, "Also write the subsample plan as plan.json");
    run_cmd->add_option("--threads", run.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

    SimulateFlags sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Run a simulation study");
    sim_cmd->add_option("--study", sim.study, "sparse, averaging, weighted or theorem31")->required();
    sim_cmd->add_option("--reps", sim.reps, "Replications")->capture_default_str();
    sim_cmd->add_option("--seed", sim.seed, "Seed (falls back to CSS_SEED, then 0)");
    sim_cmd->add_option("--test-n", sim.test_n, "Test rows per replication")->capture_default_str()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--out", sim.out_dir, "Output directory")->required();
    sim_cmd->add_option("--threads", sim.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--n", sim.n, "Training rows")->capture_default_str()->check(CLI::Range(4, 100000000));
    sim_cmd->add_option("--B", sim.B, "Complementary pairs")->capture_default_str()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--max-size", sim.max_size, "Largest model size")->capture_default_str()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--theorem31-n", sim.theorem31_n, "Rows of the two-proxy study")->capture_default_str();
    sim_cmd->add_option("--sigma-eps-sq", sim.sigma_eps_sq, "Noise variance of the two-proxy study")->capture_default_str();
    sim_cmd->add_option("--beta-z", sim.beta_Z, "Latent coefficient (default: interval midpoint)");
    sim_cmd->add_option("--theorem31-B", sim.theorem31_B, "Pairs for first-2 stability selection (0: off)")->capture_default_str();
    sim_cmd->add_flag("--quiet", sim.quiet, "No per-replication log");

    ClusterFlags cl;
    auto* cl_cmd = app.add_subcommand("cluster", "Correlation clustering of CSV features");
    cl_cmd->add_option("--x", cl.x_path, "Feature matrix CSV")->required();
    cl_cmd->add_option("--cutoff", cl.cutoff, "Single-linkage cutoff on 1 - |corr|")->capture_default_str();
    cl_cmd->add_option("--maf", cl.maf, "Minor-allele frequency threshold (with --binary)");
    cl_cmd->add_flag("--binary", cl.binary, "Features are 0/1; screen by --maf (default 0.01)");
    cl_cmd->add_option("--out", cl.out_path, "Output JSON file (default: stdout)");
    cl_cmd->add_option("--threads", cl.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

    OracleFlags orc;
    auto* orc_cmd = app.add_subcommand("oracle", "Evaluate closed-form risks and intervals as JSON");
    orc_cmd->add_option("--n", orc.n, "Sample size")->required();
    orc_cmd->add_option("--sigma-eps-sq", orc.sigma_eps_sq, "Noise variance")->capture_default_str();
    orc_cmd->add_option("--c2", orc.c2, "Concentration constant")->capture_default_str();
    orc_cmd->add_option("--beta-z", orc.beta_Z, "Latent coefficient");
    orc_cmd->add_option("--betas", orc.betas, "Direct-signal coefficients")->delimiter(',');
    orc_cmd->add_option("--sigma-zeta-sq", orc.sigma_zeta_sq, "Proxy noise variances")->delimiter(',');

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    try {
        if (*run_cmd) return cmd_run(run, out);
        if (*sim_cmd) return cmd_simulate(sim, out, err);
        if (*cl_cmd) return cmd_cluster(cl, out);
        if (*orc_cmd) return cmd_oracle(orc, out);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const ConstantColumn& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const Error& e) {
        err << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    }
    return kExitInvalid;
}

}  // namespace css
