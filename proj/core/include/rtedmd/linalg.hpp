#pragma once

#include <Eigen/Dense>

namespace rtedmd {

/// Relative singular-value cutoff used by every least-squares solve in the library.
inline constexpr double kPinvRtol = 1e-10;

/// SVD pseudoinverse; singular values below rtol * sigma_max are treated as zero.
Eigen::MatrixXd pseudo_inverse(const Eigen::Ref<const Eigen::MatrixXd>& a, double rtol = kPinvRtol);

/// Numerical rank under the same cutoff.
int numerical_rank(const Eigen::Ref<const Eigen::MatrixXd>& a, double rtol = kPinvRtol);

/// sigma_max / sigma_min (infinity when singular).
double condition_number(const Eigen::Ref<const Eigen::MatrixXd>& a);

/// argmin_A ||B - X A||_F, minimum-norm when X is rank deficient.
Eigen::MatrixXd least_squares(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::MatrixXd>& b,
                              double rtol = kPinvRtol);

/// Row-streaming least squares: feeds rows of [X | B] in blocks and keeps only the
/// triangular factor, so memory stays O(cols^2) however many rows arrive.
class StreamingLeastSquares {
public:
    StreamingLeastSquares(Eigen::Index features, Eigen::Index targets, Eigen::Index block_rows = 4096);

    /// Appends one row of features and the matching targets.
    void add_row(const double* features, const double* targets);
    Eigen::Index rows() const noexcept { return rows_; }

    /// Minimiser of ||B - X A||_F over all rows seen.
    Eigen::MatrixXd solve(double rtol = kPinvRtol);

private:
    void flush();

    Eigen::Index features_;
    Eigen::Index targets_;
    Eigen::Index block_rows_;
    Eigen::MatrixXd r_;       // current triangular factor, (features + targets) square
    bool have_r_ = false;
    Eigen::MatrixXd pending_;
    Eigen::Index pending_rows_ = 0;
    Eigen::Index rows_ = 0;
};

}  // namespace rtedmd
