#include "momentda/sample.hpp"

namespace momentda {

Sample::Sample(Matrix data) : data_(std::move(data)) {
    require(data_.rows() >= 1 && data_.cols() >= 1, "sample must have at least one row and one column");
    require(data_.allFinite(), "sample contains non-finite entries");
}

Sample Sample::column(const Vector& values) { return Sample(Matrix(values)); }

Sample Sample::select_rows(const std::vector<Eigen::Index>& idx) const {
    Matrix out(static_cast<Eigen::Index>(idx.size()), data_.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = data_.row(idx[i]);
    return Sample(std::move(out));
}

Sample concat(const Sample& a, const Sample& b) {
    require_same_dim(a, b);
    Matrix out(a.rows() + b.rows(), a.cols());
    out << a.data(), b.data();
    return Sample(std::move(out));
}

void require_same_dim(const Sample& a, const Sample& b) {
    require(a.cols() == b.cols(), "samples have different dimensions (" + std::to_string(a.cols()) + " vs " +
                                      std::to_string(b.cols()) + ")");
}

}  // namespace momentda
