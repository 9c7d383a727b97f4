#include "rtedmd/dictionary.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "rtedmd/errors.hpp"

namespace rtedmd {
namespace {

double ipow(double base, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

// Enumerates exponent vectors of total degree `degree` in descending lexicographic order.
void enumerate_degree(int dim, int degree, int axis, MultiIndex& current, std::vector<MultiIndex>& out) {
    if (axis == dim - 1) {
        current[axis] = degree;
        out.push_back(current);
        return;
    }
    for (int e = degree; e >= 0; --e) {
        current[axis] = e;
        enumerate_degree(dim, degree - e, axis + 1, current, out);
    }
}

}  // namespace

Dictionary::Dictionary(int dim, std::vector<MultiIndex> exponents) : dim_(dim), exponents_(std::move(exponents)) {
    if (dim_ < 1) throw DimensionError("dictionary dimension must be positive");
    if (exponents_.empty()) throw DictionaryError("dictionary must contain at least one observable");
    std::set<MultiIndex> seen;
    for (const auto& alpha : exponents_) {
        if (static_cast<int>(alpha.size()) != dim_) throw DimensionError("exponent vector length differs from dictionary dimension");
        for (int e : alpha)
            if (e < 0) throw DictionaryError("negative exponent in dictionary");
        if (!seen.insert(alpha).second) throw DictionaryError("duplicate observable " + Polynomial::monomial(alpha).to_string());
    }
}

int Dictionary::max_degree() const {
    int d = 0;
    for (const auto& alpha : exponents_) d = std::max(d, total_degree(alpha));
    return d;
}

std::optional<int> Dictionary::index_of(const MultiIndex& alpha) const {
    auto it = std::find(exponents_.begin(), exponents_.end(), alpha);
    if (it == exponents_.end()) return std::nullopt;
    return static_cast<int>(it - exponents_.begin());
}

void Dictionary::evaluate_into(const double* x, double* out) const {
    for (std::size_t n = 0; n < exponents_.size(); ++n) {
        double v = 1.0;
        const auto& alpha = exponents_[n];
        for (int i = 0; i < dim_; ++i) v *= ipow(x[i], alpha[static_cast<std::size_t>(i)]);
        out[n] = v;
    }
}

Eigen::VectorXd Dictionary::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != dim_) throw DimensionError("dictionary evaluated at point of wrong dimension");
    Eigen::VectorXd out(size());
    const Eigen::VectorXd xc = x;
    evaluate_into(xc.data(), out.data());
    return out;
}

Eigen::MatrixXd Dictionary::gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != dim_) throw DimensionError("dictionary gradient at point of wrong dimension");
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(size(), dim_);
    for (int n = 0; n < size(); ++n) {
        const auto& alpha = exponents_[static_cast<std::size_t>(n)];
        for (int a = 0; a < dim_; ++a) {
            if (alpha[a] == 0) continue;
            double v = alpha[a];
            for (int i = 0; i < dim_; ++i) v *= ipow(x[i], alpha[i] - (i == a ? 1 : 0));
            g(n, a) = v;
        }
    }
    return g;
}

std::vector<Eigen::MatrixXd> Dictionary::hessian(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != dim_) throw DimensionError("dictionary Hessian at point of wrong dimension");
    std::vector<Eigen::MatrixXd> out;
    out.reserve(exponents_.size());
    for (const auto& alpha : exponents_) {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim_, dim_);
        for (int a = 0; a < dim_; ++a) {
            for (int b = 0; b < dim_; ++b) {
                MultiIndex lowered = alpha;
                double factor = lowered[a];
                lowered[a] -= 1;
                factor *= lowered[b];
                lowered[b] -= 1;
                if (factor == 0.0) continue;
                double v = factor;
                for (int i = 0; i < dim_; ++i) v *= ipow(x[i], lowered[i]);
                h(a, b) = v;
            }
        }
        out.push_back(std::move(h));
    }
    return out;
}

Eigen::MatrixXd Dictionary::feature_matrix(const std::vector<Eigen::VectorXd>& points) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(points.size()), size());
    Eigen::VectorXd row(size());
    for (std::size_t p = 0; p < points.size(); ++p) {
        if (points[p].size() != dim_) throw DimensionError("feature point of wrong dimension");
        evaluate_into(points[p].data(), row.data());
        out.row(static_cast<Eigen::Index>(p)) = row.transpose();
    }
    return out;
}

std::string Dictionary::name(int n) const {
    const auto& alpha = exponent(n);
    std::ostringstream os;
    bool first = true;
    for (int i = 0; i < dim_; ++i) {
        if (alpha[i] == 0) continue;
        if (!first) os << "*";
        os << "x" << (i + 1);
        if (alpha[i] > 1) os << "^" << alpha[i];
        first = false;
    }
    return first ? std::string("1") : os.str();
}

Dictionary monomials_up_to_degree(int dim, int max_degree, bool include_constant) {
    if (dim < 1) throw DimensionError("dictionary dimension must be positive");
    if (max_degree < 1) throw DictionaryError("max_degree must be >= 1");
    std::vector<MultiIndex> exps;
    if (include_constant) exps.emplace_back(dim, 0);
    MultiIndex current(dim, 0);
    for (int deg = 1; deg <= max_degree; ++deg) enumerate_degree(dim, deg, 0, current, exps);
    return Dictionary(dim, std::move(exps));
}

Eigen::VectorXd analytic_generator_action(const Dictionary& dict, const SdeModel& model,
                                          const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (x.size() != dict.dim() || model.dim != dict.dim()) throw DimensionError("generator action dimension mismatch");
    const Eigen::VectorXd xc = x;
    const Eigen::VectorXd f = model.drift_at(xc);
    const Eigen::MatrixXd cov = model.covariance_at(xc);
    const Eigen::MatrixXd grad = dict.gradient(xc);
    const auto hess = dict.hessian(xc);
    Eigen::VectorXd out = grad * f;
    for (int n = 0; n < dict.size(); ++n) out[n] += 0.5 * (cov.array() * hess[static_cast<std::size_t>(n)].array()).sum();
    return out;
}

Polynomial generator_image(const Polynomial& h, const PolynomialFields& fields) {
    const int d = h.dim();
    if (static_cast<int>(fields.drift.size()) != d) throw DimensionError("polynomial fields dimension mismatch");
    Polynomial out(d);
    for (int i = 0; i < d; ++i) {
        const Polynomial di = h.derivative(i);
        out += fields.drift[static_cast<std::size_t>(i)] * di;
        for (int j = 0; j < d; ++j) {
            const auto& cij = fields.covariance[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            if (cij.is_zero()) continue;
            out += 0.5 * (cij * di.derivative(j));
        }
    }
    return out;
}

std::variant<Eigen::MatrixXd, ClosureFailure> analytic_generator_matrix(const Dictionary& dict, const SdeModel& model) {
    if (!model.polynomial) {
        return ClosureFailure{-1, {}, "model '" + model.name + "' has no polynomial description"};
    }
    if (model.dim != dict.dim()) throw DimensionError("model and dictionary dimensions differ");
    const int n_obs = dict.size();
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n_obs, n_obs);
    for (int n = 0; n < n_obs; ++n) {
        const Polynomial image = generator_image(Polynomial::monomial(dict.exponent(n)), *model.polynomial);
        for (const auto& [alpha, c] : image.terms()) {
            const auto idx = dict.index_of(alpha);
            if (!idx) {
                return ClosureFailure{n, alpha,
                                      "generator image of " + dict.name(n) + " contains " +
                                          Polynomial::monomial(alpha).to_string() + ", which is outside the dictionary"};
            }
            L(*idx, n) = c;
        }
    }
    return L;
}

}  // namespace rtedmd
