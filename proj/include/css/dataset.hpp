#pragma once

#include "css/errors.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace css {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndexList = std::vector<Index>;

/// Response vector plus feature matrix; rows are observations.
struct DataSet {
    Matrix X;
    Vector y;
    std::vector<std::string> feature_names;  // empty or exactly p entries

    Index n() const noexcept { return X.rows(); }
    Index p() const noexcept { return X.cols(); }
};

/// Throws ValidationError unless n >= 2, p >= 1, shapes agree and all entries are finite.
/// With `require_nonzero_columns`, an all-zero column is also rejected (it cannot be scaled).
void validate(const DataSet& data, bool require_nonzero_columns = true);

DataSet make_dataset(Matrix X, Vector y, std::vector<std::string> names = {});

/// Rows of `data` at `indices`, in ascending index order. Column metadata is kept.
DataSet restrict(const DataSet& data, std::span<const Index> indices);

/// Columns of `data` at `columns` (in the given order), names carried along.
DataSet select_columns(const DataSet& data, std::span<const Index> columns);

/// Per-column Euclidean norms.
template <typename Derived>
Vector column_norms(const Eigen::MatrixBase<Derived>& X) {
    return X.colwise().norm().transpose();
}

/// Centered Pearson correlation of two columns; NaN when either is constant.
template <typename DerivedA, typename DerivedB>
double pearson(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
    const auto ca = (a.array() - a.mean()).matrix();
    const auto cb = (b.array() - b.mean()).matrix();
    const double na = ca.norm();
    const double nb = cb.norm();
    if (na == 0.0 || nb == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return ca.dot(cb) / (na * nb);
}

}  // namespace css
