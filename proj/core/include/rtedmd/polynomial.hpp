#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rtedmd {

/// Exponent vector of a monomial, one entry per state coordinate.
using MultiIndex = std::vector<int>;

int total_degree(const MultiIndex& alpha);

/// Sparse multivariate polynomial with real coefficients.
class Polynomial {
public:
    explicit Polynomial(int dim = 1);

    static Polynomial constant(int dim, double value);
    static Polynomial coordinate(int dim, int axis, double scale = 1.0);
    static Polynomial monomial(const MultiIndex& alpha, double coefficient = 1.0);

    int dim() const noexcept { return dim_; }
    int degree() const;
    bool is_zero() const noexcept { return terms_.empty(); }

    double coefficient(const MultiIndex& alpha) const;
    void add_term(const MultiIndex& alpha, double coefficient);
    const std::map<MultiIndex, double>& terms() const noexcept { return terms_; }

    double evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const;

    Polynomial& operator+=(const Polynomial& other);
    Polynomial& operator-=(const Polynomial& other);
    Polynomial& operator*=(double scale);

    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
    friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
    friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b);

    /// Partial derivative along one coordinate.
    Polynomial derivative(int axis) const;

    /// Human-readable form such as "-0.5*x1 + 0.0004".
    std::string to_string(int precision = 6) const;

private:
    int dim_;
    std::map<MultiIndex, double> terms_;
};

}  // namespace rtedmd
