#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "rtedmd/polynomial.hpp"
#include "rtedmd/sde.hpp"

namespace rtedmd {

/// Ordered set of monomial observables z_n(x) = prod_i x_i^alpha_i.
class Dictionary {
public:
    Dictionary(int dim, std::vector<MultiIndex> exponents);

    int dim() const noexcept { return dim_; }
    int size() const noexcept { return static_cast<int>(exponents_.size()); }
    const std::vector<MultiIndex>& exponents() const noexcept { return exponents_; }
    const MultiIndex& exponent(int n) const { return exponents_.at(static_cast<std::size_t>(n)); }
    int max_degree() const;

    std::optional<int> index_of(const MultiIndex& alpha) const;
    bool has_constant() const { return index_of(MultiIndex(dim_, 0)).has_value(); }

    Eigen::VectorXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    /// Writes z_1(x)..z_N(x) to `out` without allocating.
    void evaluate_into(const double* x, double* out) const;
    /// Row n holds the gradient of z_n (N x d).
    Eigen::MatrixXd gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    /// One d x d Hessian per observable.
    std::vector<Eigen::MatrixXd> hessian(const Eigen::Ref<const Eigen::VectorXd>& x) const;

    /// Rows Z_N(x_p) for each point.
    Eigen::MatrixXd feature_matrix(const std::vector<Eigen::VectorXd>& points) const;

    /// Observable names like "x1^2*x2".
    std::string name(int n) const;

    bool operator==(const Dictionary& other) const { return dim_ == other.dim_ && exponents_ == other.exponents_; }

private:
    int dim_;
    std::vector<MultiIndex> exponents_;
};

/// All monomials with 1 <= |alpha| <= max_degree (plus alpha = 0 if requested),
/// graded by total degree, then lexicographically descending within a degree:
/// d = 2, degree 2 gives x1, x2, x1^2, x1 x2, x2^2.
Dictionary monomials_up_to_degree(int dim, int max_degree, bool include_constant);

/// (L z_n)(x) = sum_i f_i dz_n/dx_i + 1/2 sum_ij (b b^T)_ij d2z_n/dx_i dx_j for each n.
Eigen::VectorXd analytic_generator_action(const Dictionary& dict, const SdeModel& model,
                                          const Eigen::Ref<const Eigen::VectorXd>& x);

/// Exact generator of a polynomial model on the dictionary span.
/// Column n holds the coefficients of L z_n over the dictionary, so that
/// L (Z_N theta) = Z_N (L theta) and eigenvectors are eigenfunction coefficients.
struct ClosureFailure {
    int observable = -1;        // dictionary index whose image leaves the span
    MultiIndex offending_term;  // first monomial outside the dictionary
    std::string message;
};

std::variant<Eigen::MatrixXd, ClosureFailure> analytic_generator_matrix(const Dictionary& dict, const SdeModel& model);

/// Generator image of a single polynomial under a polynomial model.
Polynomial generator_image(const Polynomial& h, const PolynomialFields& fields);

}  // namespace rtedmd
