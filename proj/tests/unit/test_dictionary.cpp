#include <doctest.h>

#include <random>
#include <variant>

#include "rtedmd/dictionary.hpp"
#include "rtedmd/errors.hpp"
#include "rtedmd/generator.hpp"

using namespace rtedmd;

namespace {

Eigen::VectorXd v1(double x) { return Eigen::VectorXd::Constant(1, x); }

SdeModel lv_model() { return lotka_volterra({}); }

}  // namespace

TEST_CASE("monomial ordering") {
    const Dictionary d2 = monomials_up_to_degree(2, 2, false);
    REQUIRE(d2.size() == 5);
    CHECK(d2.exponent(0) == MultiIndex{1, 0});
    CHECK(d2.exponent(1) == MultiIndex{0, 1});
    CHECK(d2.exponent(2) == MultiIndex{2, 0});
    CHECK(d2.exponent(3) == MultiIndex{1, 1});
    CHECK(d2.exponent(4) == MultiIndex{0, 2});
    CHECK(d2.name(3) == "x1*x2");

    const Dictionary with_one = monomials_up_to_degree(1, 3, true);
    CHECK(with_one.size() == 4);
    CHECK(with_one.exponent(0) == MultiIndex{0});
    CHECK(with_one.name(0) == "1");
    CHECK(with_one.has_constant());
    CHECK(monomials_up_to_degree(2, 4, false).size() == 14);
    CHECK(monomials_up_to_degree(2, 4, false).max_degree() == 4);
}

TEST_CASE("evaluate") {
    const Eigen::VectorXd a = monomials_up_to_degree(1, 3, false).evaluate(v1(2.0));
    CHECK(a == Eigen::Vector3d(2, 4, 8));
    Eigen::VectorXd b(5);
    b << 1, -1, 1, -1, 1;
    CHECK(monomials_up_to_degree(2, 2, false).evaluate(Eigen::Vector2d(1, -1)) == b);
    CHECK(monomials_up_to_degree(2, 4, false).evaluate(Eigen::Vector2d(0, 0)).isZero(0.0));
    CHECK_THROWS_AS(monomials_up_to_degree(2, 2, false).evaluate(v1(1.0)), DimensionError);
}

TEST_CASE("invalid dictionaries") {
    CHECK_THROWS_AS(Dictionary(1, {{1}, {2}, {1}}), DictionaryError);
    CHECK_THROWS_AS(Dictionary(1, {{-1}}), DictionaryError);
    CHECK_THROWS_AS(Dictionary(2, {{1}}), DimensionError);
}

TEST_CASE("gradient and Hessian agree with finite differences") {
    const Dictionary dict = monomials_up_to_degree(2, 3, true);
    const Eigen::Vector2d x(0.7, -1.3);
    const Eigen::MatrixXd g = dict.gradient(x);
    const auto h = dict.hessian(x);
    const double eps = 1e-5;
    for (int i = 0; i < 2; ++i) {
        Eigen::Vector2d e = Eigen::Vector2d::Zero();
        e[i] = eps;
        const Eigen::VectorXd fd = (dict.evaluate(x + e) - dict.evaluate(x - e)) / (2 * eps);
        CHECK((fd - g.col(i)).cwiseAbs().maxCoeff() < 1e-6);
        const Eigen::MatrixXd gfd = (dict.gradient(x + e) - dict.gradient(x - e)) / (2 * eps);
        for (int n = 0; n < dict.size(); ++n)
            CHECK((gfd.row(n).transpose() - h[static_cast<std::size_t>(n)].col(i)).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("generator action by hand") {
    const SdeModel ou = ornstein_uhlenbeck(-0.5, 0.02);
    const Dictionary squares(1, {{2}});
    CHECK(analytic_generator_action(squares, ou, v1(1.0))[0] == doctest::Approx(-0.9996).epsilon(1e-14));

    const Dictionary one(2, {{0, 0}});
    CHECK(analytic_generator_action(one, lv_model(), Eigen::Vector2d(2, 3))[0] == 0.0);

    const SdeModel decay = polynomial_model("decay", {Polynomial::coordinate(1, 0, -1.0)}, {{Polynomial(1)}});
    CHECK(analytic_generator_action(Dictionary(1, {{3}}), decay, v1(2.0))[0] == doctest::Approx(-24.0));
}

TEST_CASE("OU analytic matrix") {
    const SdeModel ou = ornstein_uhlenbeck(-0.5, 0.02);
    const Dictionary dict = monomials_up_to_degree(1, 5, true);
    const auto result = analytic_generator_matrix(dict, ou);
    REQUIRE(std::holds_alternative<Eigen::MatrixXd>(result));
    const Eigen::MatrixXd& l = std::get<Eigen::MatrixXd>(result);
    for (int n = 0; n <= 5; ++n) CHECK(l(n, n) == doctest::Approx(-0.5 * n));
    // L x^3 = 3 mu x^3 + 3 sigma^2 x, so column x^3 has 0.0012 in row x.
    CHECK(l(1, 3) == doctest::Approx(0.0012).epsilon(1e-12));
    // Column x^2 picks up sigma^2 on the constant.
    CHECK(l(0, 2) == doctest::Approx(0.0004).epsilon(1e-12));
    CHECK(l.triangularView<Eigen::StrictlyLower>().toDenseMatrix().isZero(0.0));

    const auto open = analytic_generator_matrix(monomials_up_to_degree(1, 5, false), ou);
    REQUIRE(std::holds_alternative<ClosureFailure>(open));
    const auto& failure = std::get<ClosureFailure>(open);
    CHECK(failure.observable == 1);
    CHECK(failure.offending_term == MultiIndex{0});
    CHECK_THROWS_AS(analytic_generator(monomials_up_to_degree(1, 5, false), ou), DictionaryError);

    // sigma = 0 keeps the constant-free dictionary closed.
    const auto closed = analytic_generator_matrix(monomials_up_to_degree(1, 5, false), ornstein_uhlenbeck(-0.5, 0.0));
    REQUIRE(std::holds_alternative<Eigen::MatrixXd>(closed));
    CHECK(std::get<Eigen::MatrixXd>(closed).diagonal().isApprox(Eigen::VectorXd::LinSpaced(5, -0.5, -2.5)));
}

TEST_CASE("zero model gives the zero matrix") {
    const auto r = analytic_generator_matrix(monomials_up_to_degree(2, 3, true), zero_dynamics(2));
    REQUIRE(std::holds_alternative<Eigen::MatrixXd>(r));
    CHECK(std::get<Eigen::MatrixXd>(r).isZero(0.0));
}

TEST_CASE("analytic matrix reproduces the pointwise action") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    const SdeModel ou = ornstein_uhlenbeck(-0.5, 0.3);
    const Dictionary dict = monomials_up_to_degree(1, 5, true);
    const Eigen::MatrixXd l = analytic_generator(dict, ou).entries;
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::VectorXd x = v1(u(rng));
        const Eigen::VectorXd direct = analytic_generator_action(dict, ou, x);
        const Eigen::VectorXd via = l.transpose() * dict.evaluate(x);
        CHECK((direct - via).norm() <= 1e-12 * std::max(1.0, direct.norm()));
    }

    // LV never closes on a finite monomial set; compare symbolic images instead.
    const SdeModel lv = lv_model();
    const Dictionary quad = monomials_up_to_degree(2, 2, true);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Vector2d x(u(rng) + 2.0, u(rng) + 2.0);
        const Eigen::VectorXd direct = analytic_generator_action(quad, lv, x);
        for (int n = 0; n < quad.size(); ++n) {
            const double img = generator_image(Polynomial::monomial(quad.exponent(n)), *lv.polynomial).evaluate(x);
            CHECK(std::abs(img - direct[n]) <= 1e-12 * std::max(1.0, std::abs(img)));
        }
    }
}

TEST_CASE("generator image of LV quadratics") {
    const SdeModel lv = lv_model();
    const Polynomial x1 = Polynomial::coordinate(2, 0);
    // L x1 = f_1 = x1 (a1 - b1 x2 - c1 x1)
    const Polynomial img = generator_image(x1, *lv.polynomial);
    CHECK(img.coefficient({1, 0}) == doctest::Approx(1.0));
    CHECK(img.coefficient({1, 1}) == doctest::Approx(-0.5));
    CHECK(img.coefficient({2, 0}) == doctest::Approx(-0.01));
}

TEST_CASE("generator action is linear in the observable") {
    const SdeModel lv = lv_model();
    const Dictionary dict = monomials_up_to_degree(2, 3, false);
    const Eigen::Vector2d x(1.5, 0.7);
    const Eigen::VectorXd act = analytic_generator_action(dict, lv, x);
    Polynomial combo(2);
    combo += 2.0 * Polynomial::monomial(dict.exponent(2)) - 3.0 * Polynomial::monomial(dict.exponent(7));
    const double via_image = generator_image(combo, *lv.polynomial).evaluate(x);
    CHECK(via_image == doctest::Approx(2.0 * act[2] - 3.0 * act[7]).epsilon(1e-12));
}
