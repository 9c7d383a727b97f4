#include "rtedmd/linalg.hpp"

#include <algorithm>
#include <limits>

#include "rtedmd/errors.hpp"

namespace rtedmd {

Eigen::MatrixXd pseudo_inverse(const Eigen::Ref<const Eigen::MatrixXd>& a, double rtol) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
    const double cutoff = s.size() > 0 ? rtol * s[0] : 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > cutoff && s[i] > 0.0) inv[i] = 1.0 / s[i];
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

int numerical_rank(const Eigen::Ref<const Eigen::MatrixXd>& a, double rtol) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
    const Eigen::VectorXd& s = svd.singularValues();
    if (s.size() == 0 || s[0] == 0.0) return 0;
    return static_cast<int>((s.array() > rtol * s[0]).count());
}

double condition_number(const Eigen::Ref<const Eigen::MatrixXd>& a) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
    const Eigen::VectorXd& s = svd.singularValues();
    if (s.size() == 0) return std::numeric_limits<double>::infinity();
    const double smallest = s[s.size() - 1];
    return smallest > 0.0 ? s[0] / smallest : std::numeric_limits<double>::infinity();
}

Eigen::MatrixXd least_squares(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::MatrixXd>& b,
                              double rtol) {
    if (x.rows() != b.rows()) throw DimensionError("least squares: row counts differ");
    if (x.size() == 0 || x.isZero(0.0)) throw RankDeficientError("least squares: feature matrix is all zero");
    return pseudo_inverse(x, rtol) * b;
}

StreamingLeastSquares::StreamingLeastSquares(Eigen::Index features, Eigen::Index targets, Eigen::Index block_rows)
    : features_(features), targets_(targets), block_rows_(std::max<Eigen::Index>(block_rows, features + targets)) {
    if (features < 1 || targets < 1) throw DimensionError("streaming least squares needs positive widths");
    const Eigen::Index width = features_ + targets_;
    pending_.resize(width + block_rows_, width);
}

void StreamingLeastSquares::add_row(const double* features, const double* targets) {
    const Eigen::Index width = features_ + targets_;
    const Eigen::Index row = width + pending_rows_;
    for (Eigen::Index c = 0; c < features_; ++c) pending_(row, c) = features[c];
    for (Eigen::Index c = 0; c < targets_; ++c) pending_(row, features_ + c) = targets[c];
    ++pending_rows_;
    ++rows_;
    if (pending_rows_ == block_rows_) flush();
}

void StreamingLeastSquares::flush() {
    if (pending_rows_ == 0) return;
    const Eigen::Index width = features_ + targets_;
    // Stack the previous factor on top of the new rows and re-triangularise.
    if (have_r_) {
        pending_.topRows(width) = r_;
    } else {
        pending_.topRows(width).setZero();
    }
    const Eigen::Index used = width + pending_rows_;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(pending_.topRows(used));
    const Eigen::Index keep = std::min(used, width);
    r_ = Eigen::MatrixXd::Zero(width, width);
    r_.topRows(keep) = qr.matrixQR().topRows(keep).triangularView<Eigen::Upper>();
    have_r_ = true;
    pending_rows_ = 0;
}

Eigen::MatrixXd StreamingLeastSquares::solve(double rtol) {
    flush();
    if (!have_r_ || rows_ == 0) throw EmptyDataError("least squares: no rows were provided");
    // With [X | B] = Q R, the solution only involves the upper-left and upper-right blocks.
    const Eigen::MatrixXd r11 = r_.topLeftCorner(features_, features_);
    const Eigen::MatrixXd r12 = r_.topRightCorner(features_, targets_);
    if (r11.isZero(0.0)) throw RankDeficientError("least squares: feature matrix is all zero");
    return pseudo_inverse(r11, rtol) * r12;
}

}  // namespace rtedmd
