#include "css/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace css {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::optional<double> parse_number(const std::string& field) {
    if (field.empty()) return std::nullopt;
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return v;
}

// Shortest representation that reads back to the same double.
std::string num(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    CsvTable table;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
        if (trim(line).empty()) continue;
        const auto fields = split(line);
        if (rows.empty() && table.header.empty()) {
            bool numeric = true;
            for (const auto& f : fields) numeric = numeric && parse_number(f).has_value();
            if (!numeric) {
                table.header = fields;
                width = fields.size();
                continue;
            }
        }
        if (width == 0) width = fields.size();
        if (fields.size() != width)
            throw ValidationError(path + ": row " + std::to_string(line_no) + " has " +
                                  std::to_string(fields.size()) + " fields, expected " + std::to_string(width));
        std::vector<double> row;
        row.reserve(width);
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const auto v = parse_number(fields[c]);
            if (!v || !std::isfinite(*v))
                throw ValidationError(path + ": row " + std::to_string(line_no) + ", column " +
                                      std::to_string(c + 1) + ": '" + fields[c] + "' is not a finite number");
            row.push_back(*v);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ValidationError(path + ": no data rows");
    table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < width; ++c) table.values(static_cast<Index>(i), static_cast<Index>(c)) = rows[i][c];
    }
    return table;
}

Vector read_csv_vector(const std::string& path) {
    const CsvTable t = read_csv(path);
    if (t.values.cols() != 1)
        throw ValidationError(path + ": expected a single column, found " + std::to_string(t.values.cols()));
    return t.values.col(0);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path);
    out << text;
    if (!out) throw ValidationError("failed writing " + path);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

json to_json(const SubsamplePlan& plan) {
    json pairs = json::array();
    for (const HalfPair& p : plan.pairs) pairs.push_back({{"a", p.first}, {"b", p.second}});
    return {{"n", plan.n}, {"B", plan.B()}, {"seed", plan.seed}, {"pairs", pairs}};
}

json to_json(const ClusterPartition& partition) {
    json j;
    j["clusters"] = partition.clusters;
    if (!partition.names.empty()) j["names"] = partition.names;
    return j;
}

ClusterPartition partition_from_json(const json& j) {
    if (!j.is_object() || !j.contains("clusters") || !j["clusters"].is_array())
        throw ValidationError("cluster file must be an object with a \"clusters\" array");
    ClusterPartition out;
    for (const auto& c : j["clusters"]) {
        if (!c.is_array()) throw ValidationError("each cluster must be an array of feature indices");
        IndexList members;
        for (const auto& v : c) {
            if (!v.is_number_integer()) throw ValidationError("cluster members must be integers");
            members.push_back(v.get<Index>());
        }
        out.clusters.push_back(std::move(members));
    }
    if (j.contains("names")) {
        for (const auto& v : j["names"]) out.names.push_back(v.get<std::string>());
    }
    return out;
}

json to_json(const CssResult& result, const std::optional<ClusterSelection>& selection,
             const IndexMap& map) {
    auto mapped = [&](const IndexList& list) {
        IndexList out;
        for (Index j : list) out.push_back(map(j));
        return out;
    };
    json clusters = json::array();
    for (Index k = 0; k < result.partition.K(); ++k) {
        const auto ks = static_cast<std::size_t>(k);
        const IndexList& members = result.partition.clusters[ks];
        const ClusterWeights& w = result.weights[ks];
        IndexList kept;
        std::vector<double> weights;
        for (std::size_t i = 0; i < members.size(); ++i) {
            weights.push_back(w.w[static_cast<Index>(i)]);
            if (w.w[static_cast<Index>(i)] != 0.0) kept.push_back(members[i]);
        }
        json c = {{"members", mapped(members)},
                  {"theta_hat", result.cluster_props[k]},
                  {"theta_tilde", result.simultaneous_props[k]},
                  {"weights", weights},
                  {"kept", mapped(kept)},
                  {"fallback", w.fallback}};
        if (!result.partition.names.empty()) c["name"] = result.partition.names[ks];
        clusters.push_back(std::move(c));
    }
    std::vector<double> pi(result.feature_props.data(), result.feature_props.data() + result.feature_props.size());
    IndexList features;
    for (Index j = 0; j < result.feature_props.size(); ++j) features.push_back(map(j));
    json out = {{"scheme", to_string(result.scheme)},
                {"base", result.base},
                {"B", result.B},
                {"seed", result.seed},
                {"lambdas", result.lambdas},
                {"features", features},
                {"pi_hat", pi},
                {"clusters", clusters}};
    if (selection) {
        IndexList feats;
        for (const IndexList& kept : selection->kept) feats.insert(feats.end(), kept.begin(), kept.end());
        std::sort(feats.begin(), feats.end());
        out["selected"] = {{"clusters", selection->clusters}, {"features", mapped(feats)}};
    }
    return out;
}

std::string css_csv(const CssResult& result, const IndexMap& map) {
    const Index p = result.feature_props.size();
    const IndexList of = cluster_membership(result.partition, p);
    std::vector<double> weight(static_cast<std::size_t>(p), 0.0);
    for (std::size_t k = 0; k < result.partition.clusters.size(); ++k) {
        const IndexList& members = result.partition.clusters[k];
        for (std::size_t i = 0; i < members.size(); ++i)
            weight[static_cast<std::size_t>(members[i])] = result.weights[k].w[static_cast<Index>(i)];
    }
    std::string out = "feature,cluster,pi_hat,theta_hat,weight\n";
    for (Index j = 0; j < p; ++j) {
        const Index k = of[static_cast<std::size_t>(j)];
        out += std::to_string(map(j)) + ',' + std::to_string(k) + ',' + num(result.feature_props[j]) + ',' +
               num(result.cluster_props[k]) + ',' + num(weight[static_cast<std::size_t>(j)]) + '\n';
    }
    return out;
}

std::string instance_csv(const SimInstance& sim) {
    std::string out;
    const Index p = sim.data.p();
    for (Index j = 0; j < p; ++j) out += "x" + std::to_string(j) + ',';
    out += "y,mu\n";
    for (Index i = 0; i < sim.data.n(); ++i) {
        for (Index j = 0; j < p; ++j) out += num(sim.data.X(i, j)) + ',';
        out += num(sim.data.y[i]) + ',' + num(sim.mu[i]) + '\n';
    }
    return out;
}

}  // namespace css
