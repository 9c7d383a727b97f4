#include "rtedmd/polynomial.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "rtedmd/errors.hpp"

namespace rtedmd {

int total_degree(const MultiIndex& alpha) { return std::accumulate(alpha.begin(), alpha.end(), 0); }

Polynomial::Polynomial(int dim) : dim_(dim) {
    if (dim < 1) throw DimensionError("polynomial dimension must be positive");
}

Polynomial Polynomial::constant(int dim, double value) {
    Polynomial p(dim);
    p.add_term(MultiIndex(dim, 0), value);
    return p;
}

Polynomial Polynomial::coordinate(int dim, int axis, double scale) {
    MultiIndex alpha(dim, 0);
    alpha.at(axis) = 1;
    return monomial(alpha, scale);
}

Polynomial Polynomial::monomial(const MultiIndex& alpha, double coefficient) {
    Polynomial p(static_cast<int>(alpha.size()));
    p.add_term(alpha, coefficient);
    return p;
}

int Polynomial::degree() const {
    int d = 0;
    for (const auto& [alpha, c] : terms_) d = std::max(d, total_degree(alpha));
    return d;
}

double Polynomial::coefficient(const MultiIndex& alpha) const {
    auto it = terms_.find(alpha);
    return it == terms_.end() ? 0.0 : it->second;
}

void Polynomial::add_term(const MultiIndex& alpha, double coefficient) {
    if (static_cast<int>(alpha.size()) != dim_) throw DimensionError("multi-index dimension mismatch");
    for (int e : alpha)
        if (e < 0) throw DimensionError("negative exponent in multi-index");
    if (coefficient == 0.0) return;
    auto [it, inserted] = terms_.emplace(alpha, coefficient);
    if (!inserted) {
        it->second += coefficient;
        if (it->second == 0.0) terms_.erase(it);
    }
}

double Polynomial::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != dim_) throw DimensionError("polynomial evaluated at point of wrong dimension");
    double sum = 0.0;
    for (const auto& [alpha, c] : terms_) {
        double term = c;
        for (int i = 0; i < dim_; ++i)
            for (int e = 0; e < alpha[i]; ++e) term *= x[i];
        sum += term;
    }
    return sum;
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
    if (other.dim_ != dim_) throw DimensionError("polynomial dimension mismatch");
    for (const auto& [alpha, c] : other.terms_) add_term(alpha, c);
    return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
    if (other.dim_ != dim_) throw DimensionError("polynomial dimension mismatch");
    for (const auto& [alpha, c] : other.terms_) add_term(alpha, -c);
    return *this;
}

Polynomial& Polynomial::operator*=(double scale) {
    if (scale == 0.0) {
        terms_.clear();
        return *this;
    }
    for (auto& [alpha, c] : terms_) c *= scale;
    return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.dim_ != b.dim_) throw DimensionError("polynomial dimension mismatch");
    Polynomial out(a.dim_);
    for (const auto& [alpha, ca] : a.terms_) {
        for (const auto& [beta, cb] : b.terms_) {
            MultiIndex sum(alpha.size());
            for (std::size_t i = 0; i < alpha.size(); ++i) sum[i] = alpha[i] + beta[i];
            out.add_term(sum, ca * cb);
        }
    }
    return out;
}

Polynomial Polynomial::derivative(int axis) const {
    if (axis < 0 || axis >= dim_) throw DimensionError("derivative axis out of range");
    Polynomial out(dim_);
    for (const auto& [alpha, c] : terms_) {
        if (alpha[axis] == 0) continue;
        MultiIndex lowered = alpha;
        lowered[axis] -= 1;
        out.add_term(lowered, c * alpha[axis]);
    }
    return out;
}

std::string Polynomial::to_string(int precision) const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    os.precision(precision);
    bool first = true;
    // Highest degree first reads more naturally.
    std::vector<std::pair<MultiIndex, double>> ordered(terms_.begin(), terms_.end());
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto& l, const auto& r) {
        return total_degree(l.first) > total_degree(r.first);
    });
    for (const auto& [alpha, c] : ordered) {
        double shown = c;
        if (first) {
            if (c < 0) os << "-";
        } else {
            os << (c < 0 ? " - " : " + ");
        }
        shown = std::abs(c);
        os << shown;
        for (int i = 0; i < dim_; ++i) {
            if (alpha[i] == 0) continue;
            os << "*x" << (i + 1);
            if (alpha[i] > 1) os << "^" << alpha[i];
        }
        first = false;
    }
    return os.str();
}

}  // namespace rtedmd
