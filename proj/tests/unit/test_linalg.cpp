#include <doctest.h>

#include <random>

#include "rtedmd/errors.hpp"
#include "rtedmd/linalg.hpp"

using namespace rtedmd;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    Eigen::MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = n(rng);
    return m;
}

}  // namespace

TEST_CASE("pseudo-inverse satisfies the Penrose conditions") {
    Eigen::MatrixXd a = random_matrix(7, 3, 1);
    a.col(2) = a.col(0) + a.col(1);  // rank 2
    const Eigen::MatrixXd p = pseudo_inverse(a);
    CHECK((a * p * a - a).norm() < 1e-10);
    CHECK((p * a * p - p).norm() < 1e-10);
    CHECK(((a * p).transpose() - a * p).norm() < 1e-10);
    CHECK(numerical_rank(a) == 2);
    CHECK(condition_number(Eigen::Matrix2d::Identity() * 3.0) == doctest::Approx(1.0));
}

TEST_CASE("least squares round trip") {
    const Eigen::MatrixXd x = random_matrix(50, 6, 2);
    const Eigen::MatrixXd a0 = random_matrix(6, 6, 3);
    CHECK((least_squares(x, x * a0) - a0).cwiseAbs().maxCoeff() < 1e-10);
    // Orthonormal features return the labels.
    const Eigen::MatrixXd y = random_matrix(4, 4, 4);
    CHECK((least_squares(Eigen::MatrixXd::Identity(4, 4), y) - y).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("streaming least squares matches the dense solve") {
    const Eigen::MatrixXd x = random_matrix(1000, 5, 5);
    const Eigen::MatrixXd b = x * random_matrix(5, 5, 6) + 0.1 * random_matrix(1000, 5, 7);
    StreamingLeastSquares s(5, 5, 64);
    for (int r = 0; r < 1000; ++r) {
        const Eigen::RowVectorXd xr = x.row(r), br = b.row(r);
        s.add_row(xr.data(), br.data());
    }
    CHECK(s.rows() == 1000);
    CHECK((s.solve() - least_squares(x, b)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("all-zero features are rank deficient") {
    CHECK_THROWS_AS(least_squares(Eigen::MatrixXd::Zero(5, 2), Eigen::MatrixXd::Ones(5, 2)), RankDeficientError);
    StreamingLeastSquares s(2, 1);
    CHECK_THROWS_AS(s.solve(), Error);
}
