#pragma once

#include "momentda/common.hpp"

namespace momentda {

/// An n x d matrix of observations, one row per observation.
/// Construction rejects empty or non-finite data.
class Sample {
public:
    Sample() = default;
    explicit Sample(Matrix data);

    static Sample column(const Vector& values);

    const Matrix& data() const { return data_; }
    Eigen::Index rows() const { return data_.rows(); }
    Eigen::Index cols() const { return data_.cols(); }
    bool empty() const { return data_.size() == 0; }

    /// Rows selected by index, in the given order.
    Sample select_rows(const std::vector<Eigen::Index>& idx) const;

private:
    Matrix data_;
};

/// Stacks two samples with matching column counts.
Sample concat(const Sample& a, const Sample& b);

void require_same_dim(const Sample& a, const Sample& b);

}  // namespace momentda
