#include <doctest.h>

#include "rtedmd/polynomial.hpp"

using rtedmd::Polynomial;

TEST_CASE("polynomial arithmetic and evaluation") {
    const Polynomial x = Polynomial::coordinate(2, 0);
    const Polynomial y = Polynomial::coordinate(2, 1);
    const Polynomial p = 3.0 * x * y + Polynomial::constant(2, 1.5) - y;

    Eigen::Vector2d at(2.0, -1.0);
    CHECK(p.evaluate(at) == doctest::Approx(3.0 * 2.0 * -1.0 + 1.5 + 1.0));
    CHECK(p.degree() == 2);
    CHECK(p.coefficient({1, 1}) == 3.0);
    CHECK(p.coefficient({0, 0}) == 1.5);
    CHECK(p.coefficient({2, 0}) == 0.0);
}

TEST_CASE("zero coefficients are dropped") {
    Polynomial p(1);
    p.add_term({2}, 1.0);
    p.add_term({2}, -1.0);
    CHECK(p.is_zero());
    CHECK(p.terms().empty());
    CHECK((Polynomial::coordinate(1, 0) - Polynomial::coordinate(1, 0)).is_zero());
}

TEST_CASE("derivative") {
    // d/dx (x^3 y + 2 x y^2) = 3 x^2 y + 2 y^2
    Polynomial p = Polynomial::monomial({3, 1}) + Polynomial::monomial({1, 2}, 2.0);
    const Polynomial dx = p.derivative(0);
    CHECK(dx.coefficient({2, 1}) == 3.0);
    CHECK(dx.coefficient({0, 2}) == 2.0);
    CHECK(dx.terms().size() == 2);
    CHECK(Polynomial::constant(2, 4.0).derivative(1).is_zero());
}

TEST_CASE("to_string") {
    Polynomial p = Polynomial::monomial({2}, 0.5) + Polynomial::constant(1, -0.0004);
    CHECK(p.to_string() == "0.5*x1^2 - 0.0004");
    CHECK(Polynomial(1).to_string() == "0");
}
