#pragma once

#include "css/css.hpp"
#include "css/simgen.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace css {

using json = nlohmann::json;

struct CsvTable {
    Matrix values;
    std::vector<std::string> header;  // empty when the file has no header row
};

/// Comma-separated numbers. A first row with any non-numeric field is taken as a header.
/// Errors name the file and the 1-based line number.
CsvTable read_csv(const std::string& path);

/// Single-column CSV (header optional) as a vector.
Vector read_csv_vector(const std::string& path);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

json to_json(const SubsamplePlan& plan);

/// {"clusters": [[...], ...], "names": [...]} (names only when present).
json to_json(const ClusterPartition& partition);
ClusterPartition partition_from_json(const json& j);

/// Feature indices written to the output (identity when `original` is empty).
struct IndexMap {
    IndexList original;
    Index operator()(Index j) const { return original.empty() ? j : original[static_cast<std::size_t>(j)]; }
};

json to_json(const CssResult& result, const std::optional<ClusterSelection>& selection,
             const IndexMap& map = {});

/// feature,cluster,pi_hat,theta_hat,weight; one row per feature.
std::string css_csv(const CssResult& result, const IndexMap& map = {});

/// Columns x0..x{p-1}, y, mu.
std::string instance_csv(const SimInstance& sim);

}  // namespace css
