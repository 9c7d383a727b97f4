#include "rtedmd/sysid.hpp"

#include <algorithm>
#include <cmath>

#include "rtedmd/errors.hpp"
#include "rtedmd/log.hpp"

namespace rtedmd {

namespace {

MultiIndex unit(int dim, int axis) {
    MultiIndex a(static_cast<std::size_t>(dim), 0);
    a[static_cast<std::size_t>(axis)] = 1;
    return a;
}

MultiIndex pair_index(int dim, int i, int j) {
    MultiIndex a(static_cast<std::size_t>(dim), 0);
    ++a[static_cast<std::size_t>(i)];
    ++a[static_cast<std::size_t>(j)];
    return a;
}

Polynomial as_polynomial(const Dictionary& dict, const Eigen::Ref<const Eigen::VectorXd>& coeffs) {
    Polynomial p(dict.dim());
    for (int n = 0; n < dict.size(); ++n) p.add_term(dict.exponent(n), coeffs[n]);
    return p;
}

}  // namespace

Eigen::VectorXd IdentifiedModel::drift_at(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return drift * dictionary.evaluate(x);
}

Eigen::MatrixXd IdentifiedModel::covariance_at(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    const int d = dim();
    const Eigen::VectorXd z = dictionary.evaluate(x);
    Eigen::MatrixXd out(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out(i, j) = covariance_coeffs(i, j).dot(z);
    return out;
}

std::vector<Polynomial> IdentifiedModel::drift_polynomials() const {
    std::vector<Polynomial> out;
    for (int i = 0; i < dim(); ++i) out.push_back(as_polynomial(dictionary, drift.row(i).transpose()));
    return out;
}

std::vector<std::vector<Polynomial>> IdentifiedModel::covariance_polynomials() const {
    std::vector<std::vector<Polynomial>> out(static_cast<std::size_t>(dim()));
    for (int i = 0; i < dim(); ++i)
        for (int j = 0; j < dim(); ++j) out[static_cast<std::size_t>(i)].push_back(as_polynomial(dictionary, covariance_coeffs(i, j)));
    return out;
}

Eigen::MatrixXd recover_drift(const GeneratorMatrix& generator) {
    const Dictionary& dict = generator.dictionary;
    const int d = dict.dim();
    Eigen::MatrixXd drift(d, dict.size());
    for (int i = 0; i < d; ++i) {
        const auto idx = dict.index_of(unit(d, i));
        if (!idx) throw DictionaryError("dictionary lacks the observable x" + std::to_string(i + 1));
        drift.row(i) = generator.image_of(*idx).transpose();
    }
    return drift;
}

std::vector<Eigen::VectorXd> recover_diffusion(const GeneratorMatrix& generator,
                                               const Eigen::Ref<const Eigen::MatrixXd>& drift) {
    const Dictionary& dict = generator.dictionary;
    const int d = dict.dim();
    const int n_obs = dict.size();
    if (drift.rows() != d || drift.cols() != n_obs) throw DimensionError("drift coefficients do not match the dictionary");

    // Coefficients of f_a * x_b over the dictionary.
    auto shifted = [&](int a, int b, double& dropped) {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(n_obs);
        for (int n = 0; n < n_obs; ++n) {
            const double c = drift(a, n);
            if (c == 0.0) continue;
            MultiIndex alpha = dict.exponent(n);
            ++alpha[static_cast<std::size_t>(b)];
            if (const auto idx = dict.index_of(alpha)) out[*idx] += c;
            else dropped = std::max(dropped, std::abs(c));
        }
        return out;
    };

    std::vector<Eigen::VectorXd> out(static_cast<std::size_t>(d * d));
    for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
            const auto idx = dict.index_of(pair_index(d, i, j));
            if (!idx)
                throw DictionaryError("dictionary lacks the quadratic observable x" + std::to_string(i + 1) + "*x" +
                                      std::to_string(j + 1));
            double dropped = 0.0;
            Eigen::VectorXd c = generator.image_of(*idx) - shifted(i, j, dropped) - shifted(j, i, dropped);
            if (dropped > 0.0)
                log_warning("diffusion (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                            "): drift products leave the dictionary; dropped terms up to " + std::to_string(dropped));
            out[static_cast<std::size_t>(i * d + j)] = c;
            out[static_cast<std::size_t>(j * d + i)] = c;
        }
    }
    return out;
}

IdentifiedModel identify(const GeneratorMatrix& generator) {
    IdentifiedModel model{generator.dictionary, recover_drift(generator), {}, generator.provenance};
    model.diffusion = recover_diffusion(generator, model.drift);
    return model;
}

PsdReport check_covariance(const IdentifiedModel& model, const std::vector<Eigen::VectorXd>& points, double tolerance) {
    PsdReport report;
    report.min_eigenvalue = std::numeric_limits<double>::infinity();
    for (const auto& x : points) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.covariance_at(x), Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues().minCoeff();
        report.min_eigenvalue = std::min(report.min_eigenvalue, lo);
        if (lo < tolerance) ++report.failing_points;
    }
    if (points.empty()) report.min_eigenvalue = 0.0;
    return report;
}

Eigen::MatrixXd covariance_sqrt(const Eigen::Ref<const Eigen::MatrixXd>& covariance, double* clamped) {
    const Eigen::MatrixXd sym = 0.5 * (covariance + covariance.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    Eigen::VectorXd ev = es.eigenvalues();
    double worst = 0.0;
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
        if (ev[k] < 0.0) {
            worst = std::max(worst, -ev[k]);
            ev[k] = 0.0;
        }
        ev[k] = std::sqrt(ev[k]);
    }
    if (clamped) *clamped = worst;
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

SdeModel to_sde_model(const IdentifiedModel& model) {
    SdeModel out;
    out.name = "identified";
    out.dim = model.dim();
    out.noise_dim = model.dim();
    out.drift = [model](const Eigen::VectorXd& x, Eigen::VectorXd& f) { f = model.drift_at(x); };
    out.diffusion = [model](const Eigen::VectorXd& x, Eigen::MatrixXd& b) { b = covariance_sqrt(model.covariance_at(x)); };
    return out;
}

TrajectoryEnsemble reconstruct_paths(const IdentifiedModel& model, const Domain& domain,
                                     const std::vector<Eigen::VectorXd>& initial_states, int paths_per_state,
                                     const SimConfig& config) {
    return simulate_paths(to_sde_model(model), domain, initial_states, paths_per_state, config);
}

PathwiseError pathwise_error(const TrajectoryEnsemble& reference, const TrajectoryEnsemble& reconstructed) {
    if (reference.dim() != reconstructed.dim() || reference.num_initial() != reconstructed.num_initial() ||
        reference.paths_per_state() != reconstructed.paths_per_state() ||
        reference.snapshots() != reconstructed.snapshots())
        throw DimensionError("ensembles differ in shape");
    const int m = reference.num_initial();
    const int paths = reference.paths_per_state();
    const int snaps = reference.snapshots();
    PathwiseError out;
    out.mean_abs_by_time = Eigen::VectorXd::Zero(snaps);
    double total = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < paths; ++j)
            for (int k = 0; k < snaps; ++k) {
                const Eigen::VectorXd diff = (reference.state(i, j, k) - reconstructed.state(i, j, k)).cwiseAbs();
                total += diff.sum();
                out.mean_abs_by_time[k] += diff.sum();
                out.max_abs = std::max(out.max_abs, diff.maxCoeff());
            }
    const double per_time = static_cast<double>(m) * paths * reference.dim();
    out.mean_abs_by_time /= per_time;
    out.mean_abs = total / (per_time * snaps);
    return out;
}

}  // namespace rtedmd
