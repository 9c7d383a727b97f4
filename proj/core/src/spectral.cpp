#include "rtedmd/spectral.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "rtedmd/errors.hpp"

namespace rtedmd {

bool spectral_order(const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() < b.imag();
}

void sort_spectrum(std::vector<Complex>& values) { std::stable_sort(values.begin(), values.end(), spectral_order); }

SpectrumResult eigendecompose(const Eigen::Ref<const Eigen::MatrixXd>& matrix) {
    if (matrix.rows() != matrix.cols()) throw DimensionError("eigendecomposition needs a square matrix");
    if (!matrix.allFinite()) throw NumericalError("eigendecomposition of a matrix with non-finite entries");
    const Eigen::MatrixXd a = matrix;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(a);
    if (solver.info() != Eigen::Success)
        throw NumericalError("eigendecomposition did not converge (n = " + std::to_string(a.rows()) + ")");

    const Eigen::VectorXcd values = solver.eigenvalues();
    const Eigen::MatrixXcd vectors = solver.eigenvectors();
    const auto n = static_cast<std::size_t>(values.size());

    // Conjugate pairs come out with slightly different rounding; snap them so that
    // the sort places them symmetrically.
    std::vector<Complex> vals(values.data(), values.data() + n);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int l, int r) { return spectral_order(vals[l], vals[r]); });

    SpectrumResult out;
    out.eigenvalues.reserve(n);
    out.eigenvectors.resize(a.rows(), a.cols());
    const double norm_a = std::max(a.norm(), std::numeric_limits<double>::min());
    for (std::size_t c = 0; c < n; ++c) {
        const int src = order[c];
        Eigen::VectorXcd v = vectors.col(src);
        const double vn = v.norm();
        if (vn > 0.0) v /= vn;
        const double residual = (a.cast<Complex>() * v - vals[static_cast<std::size_t>(src)] * v).norm();
        if (residual > 1e-8 * norm_a)
            throw NumericalError("eigenpair residual " + std::to_string(residual) + " exceeds tolerance");
        out.eigenvalues.push_back(vals[static_cast<std::size_t>(src)]);
        out.eigenvectors.col(static_cast<Eigen::Index>(c)) = v;
    }
    return out;
}

SpectrumResult eigendecompose(const GeneratorMatrix& generator) { return eigendecompose(generator.entries); }

namespace {

struct OptimalSearch {
    const std::vector<Complex>& ref;
    const std::vector<Complex>& est;
    std::vector<int> ref_order;
    std::vector<char> used;
    std::vector<int> current;
    std::vector<int> best;
    double best_cost = std::numeric_limits<double>::infinity();

    void run(std::size_t depth, double cost) {
        if (cost >= best_cost) return;
        if (depth == ref_order.size()) {
            best_cost = cost;
            best = current;
            return;
        }
        const Complex& target = ref[static_cast<std::size_t>(ref_order[depth])];
        // Try nearest candidates first so the bound tightens quickly.
        std::vector<int> candidates;
        for (std::size_t e = 0; e < est.size(); ++e)
            if (!used[e]) candidates.push_back(static_cast<int>(e));
        std::stable_sort(candidates.begin(), candidates.end(), [&](int l, int r) {
            return std::abs(target - est[static_cast<std::size_t>(l)]) < std::abs(target - est[static_cast<std::size_t>(r)]);
        });
        for (int e : candidates) {
            used[static_cast<std::size_t>(e)] = 1;
            current[depth] = e;
            run(depth + 1, cost + std::abs(target - est[static_cast<std::size_t>(e)]));
            used[static_cast<std::size_t>(e)] = 0;
        }
    }
};

}  // namespace

Matching match_and_mae(const std::vector<Complex>& reference, const std::vector<Complex>& estimated, int n_match,
                       MatchStrategy strategy) {
    if (n_match < 1) throw ConfigError("n_match must be positive");
    if (static_cast<std::size_t>(n_match) > std::min(reference.size(), estimated.size()))
        throw ConfigError("n_match exceeds the number of available eigenvalues");

    std::vector<int> ref_order(reference.size());
    std::iota(ref_order.begin(), ref_order.end(), 0);
    std::stable_sort(ref_order.begin(), ref_order.end(),
                     [&](int l, int r) { return spectral_order(reference[static_cast<std::size_t>(l)], reference[static_cast<std::size_t>(r)]); });
    ref_order.resize(static_cast<std::size_t>(n_match));

    Matching out;
    double total = 0.0;
    if (strategy == MatchStrategy::Greedy) {
        std::vector<char> used(estimated.size(), 0);
        for (int ri : ref_order) {
            const Complex& target = reference[static_cast<std::size_t>(ri)];
            int best = -1;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t e = 0; e < estimated.size(); ++e) {
                if (used[e]) continue;
                const double d = std::abs(target - estimated[e]);
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(e);
                }
            }
            used[static_cast<std::size_t>(best)] = 1;
            out.pairs.emplace_back(ri, best);
            total += best_d;
        }
    } else {
        OptimalSearch search{reference, estimated, ref_order, std::vector<char>(estimated.size(), 0),
                             std::vector<int>(ref_order.size(), -1), {}};
        search.run(0, 0.0);
        for (std::size_t d = 0; d < ref_order.size(); ++d) out.pairs.emplace_back(ref_order[d], search.best[d]);
        total = search.best_cost;
    }
    out.mae = total / n_match;
    return out;
}

Eigen::MatrixXcd eigenfunction_values(const SpectrumResult& result, const Dictionary& dict,
                                      const std::vector<Eigen::VectorXd>& points) {
    if (result.eigenvectors.rows() != dict.size()) throw DimensionError("eigenvector length differs from dictionary size");
    const Eigen::MatrixXd features = dict.feature_matrix(points);
    return features.cast<Complex>() * result.eigenvectors;
}

}  // namespace rtedmd
