#include "css/dataset.hpp"

#include <algorithm>

namespace css {

void validate(const DataSet& data, bool require_nonzero_columns) {
    if (data.n() < 2) throw ValidationError("data set needs at least 2 rows");
    if (data.p() < 1) throw ValidationError("data set needs at least 1 column");
    if (data.y.size() != data.n())
        throw ValidationError("response length " + std::to_string(data.y.size()) +
                              " does not match " + std::to_string(data.n()) + " rows");
    if (!data.feature_names.empty() && static_cast<Index>(data.feature_names.size()) != data.p())
        throw ValidationError("feature_names must be empty or have one entry per column");
    if (!data.X.allFinite()) throw ValidationError("feature matrix has non-finite entries");
    if (!data.y.allFinite()) throw ValidationError("response has non-finite entries");
    if (require_nonzero_columns) {
        for (Index j = 0; j < data.p(); ++j) {
            if (data.X.col(j).squaredNorm() == 0.0)
                throw ValidationError("column " + std::to_string(j) + " is identically zero");
        }
    }
}

DataSet make_dataset(Matrix X, Vector y, std::vector<std::string> names) {
    DataSet data{std::move(X), std::move(y), std::move(names)};
    validate(data, false);
    return data;
}

DataSet restrict(const DataSet& data, std::span<const Index> indices) {
    if (indices.empty()) throw ValidationError("restrict: empty index set");
    IndexList sorted(indices.begin(), indices.end());
    std::sort(sorted.begin(), sorted.end());
    for (Index i : sorted) {
        if (i < 0 || i >= data.n())
            throw ValidationError("restrict: row index " + std::to_string(i) + " out of range");
    }
    DataSet out;
    out.X = data.X(sorted, Eigen::all);
    out.y = data.y(sorted);
    out.feature_names = data.feature_names;
    return out;
}

DataSet select_columns(const DataSet& data, std::span<const Index> columns) {
    IndexList cols(columns.begin(), columns.end());
    for (Index c : cols) {
        if (c < 0 || c >= data.p())
            throw ValidationError("column index " + std::to_string(c) + " out of range");
    }
    DataSet out;
    out.X = data.X(Eigen::all, cols);
    out.y = data.y;
    if (!data.feature_names.empty()) {
        for (Index c : cols) out.feature_names.push_back(data.feature_names[c]);
    }
    return out;
}

}  // namespace css
