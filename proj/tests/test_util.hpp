#pragma once

#include "momentda/common.hpp"
#include "momentda/rng.hpp"
#include "momentda/sample.hpp"

namespace momentda::testutil {

inline Matrix uniform_matrix(CounterRng& rng, Eigen::Index rows, Eigen::Index cols, double lo = 0.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(lo, hi);
    return m;
}

inline Matrix normal_matrix(CounterRng& rng, Eigen::Index rows, Eigen::Index cols, double sd = 1.0) {
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = sd * rng.normal();
    return m;
}

inline Sample column(std::initializer_list<double> values) {
    Vector v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v(i++) = x;
    return Sample::column(v);
}

/// ||a - b|| / max(||a||, ||b||), zero when both vanish.
inline double relative_error(const Vector& a, const Vector& b) {
    const double scale = std::max(a.norm(), b.norm());
    return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

}  // namespace momentda::testutil
