#include "rtedmd/estimator_rt.hpp"

#include <cmath>

#include "rtedmd/errors.hpp"
#include "rtedmd/linalg.hpp"
#include "rtedmd/log.hpp"

namespace rtedmd {

double RtConfig::truncation_weight() const { return std::exp(-lambda * horizon); }

void RtConfig::validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("rt: lambda must be positive");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("rt: horizon must be positive");
    if (use_modification && !(mu > 0.0 && mu < lambda))
        throw ConfigError("rt: the modified estimator requires 0 < mu < lambda");
}

PathMeans mean_observables(const TrajectoryEnsemble& ensemble, const Dictionary& dict) {
    if (ensemble.dim() != dict.dim()) throw DimensionError("ensemble and dictionary dimensions differ");
    const int m = ensemble.num_initial();
    const int paths = ensemble.paths_per_state();
    const int snaps = ensemble.snapshots();
    const int n_obs = dict.size();
    PathMeans means(static_cast<std::size_t>(m), Eigen::MatrixXd::Zero(snaps, n_obs));
    Eigen::VectorXd z(n_obs);
    Eigen::VectorXd x(ensemble.dim());
    for (int i = 0; i < m; ++i) {
        Eigen::MatrixXd& acc = means[static_cast<std::size_t>(i)];
        for (int j = 0; j < paths; ++j) {
            for (int k = 0; k < snaps; ++k) {
                x = ensemble.state(i, j, k);
                dict.evaluate_into(x.data(), z.data());
                acc.row(k) += z.transpose();
            }
        }
        acc /= static_cast<double>(paths);
    }
    return means;
}

PathMeans integrand_matrix(const PathMeans& means, double lambda, double rate) {
    if (!(lambda > 0.0)) throw ConfigError("integrand weight requires lambda > 0");
    PathMeans out = means;
    for (auto& block : out) {
        for (Eigen::Index k = 0; k < block.rows(); ++k) {
            const double t = static_cast<double>(k) / rate;
            block.row(k) *= lambda * lambda * std::exp(-lambda * t);
        }
    }
    return out;
}

double trapezoid_integrate(std::span<const double> samples, double dt) {
    if (samples.size() < 2) throw ConfigError("trapezoid rule needs at least two samples");
    double interior = 0.0;
    for (std::size_t k = 1; k + 1 < samples.size(); ++k) interior += samples[k];
    return dt * (0.5 * samples.front() + interior + 0.5 * samples.back());
}

Eigen::RowVectorXd trapezoid_integrate(const Eigen::Ref<const Eigen::MatrixXd>& samples, double dt) {
    if (samples.rows() < 2) throw ConfigError("trapezoid rule needs at least two samples");
    const Eigen::Index last = samples.rows() - 1;
    Eigen::RowVectorXd sum = 0.5 * (samples.row(0) + samples.row(last));
    if (last > 1) sum += samples.middleRows(1, last - 1).colwise().sum();
    return dt * sum;
}

RtMatrices assemble_rt_matrices(const Eigen::Ref<const Eigen::MatrixXd>& features, const PathMeans& means,
                                double lambda, double rate) {
    const auto m = static_cast<std::size_t>(features.rows());
    if (means.size() != m) throw DimensionError("one mean block per initial state is required");
    RtMatrices out;
    out.features = features;
    out.integral.resize(features.rows(), features.cols());
    const PathMeans integrand = integrand_matrix(means, lambda, rate);
    const double dt = 1.0 / rate;
    for (std::size_t i = 0; i < m; ++i) {
        if (integrand[i].cols() != features.cols()) throw DimensionError("mean block width differs from dictionary size");
        out.integral.row(static_cast<Eigen::Index>(i)) = trapezoid_integrate(integrand[i], dt);
    }
    out.labels = out.integral - lambda * out.features;
    return out;
}

namespace {

// Means restricted to the first rt.horizon * rate intervals.
PathMeans means_up_to(const TrajectoryEnsemble& ensemble, const Dictionary& dict, double horizon) {
    SimConfig truncated = ensemble.config();
    truncated.horizon = horizon;
    const int intervals = truncated.intervals();
    if (intervals > ensemble.intervals()) throw ConfigError("rt horizon exceeds the simulated horizon");
    PathMeans means = mean_observables(ensemble, dict);
    if (intervals < ensemble.intervals())
        for (auto& block : means) block.conservativeResize(intervals + 1, Eigen::NoChange);
    return means;
}

}  // namespace

RtMatrices build_matrices(const TrajectoryEnsemble& ensemble, const Dictionary& dict, const RtConfig& rt) {
    rt.validate();
    const Eigen::MatrixXd features = dict.feature_matrix(ensemble.initial_states());
    return assemble_rt_matrices(features, means_up_to(ensemble, dict, rt.horizon), rt.lambda, ensemble.config().rate);
}

GeneratorMatrix fit_generator(const Eigen::Ref<const Eigen::MatrixXd>& features,
                              const Eigen::Ref<const Eigen::MatrixXd>& labels, const Dictionary& dict) {
    if (features.cols() != dict.size() || labels.cols() != dict.size())
        throw DimensionError("feature/label widths must equal the dictionary size");
    if (features.rows() < features.cols())
        log_warning("fewer initial states (" + std::to_string(features.rows()) + ") than observables (" +
                    std::to_string(features.cols()) + "); returning the minimum-norm solution");
    return GeneratorMatrix(least_squares(features, labels), dict, Provenance::RtEdmd);
}

GeneratorMatrix fit_generator_modified(const Eigen::Ref<const Eigen::MatrixXd>& features,
                                       const Eigen::Ref<const Eigen::MatrixXd>& integral_mu, double lambda, double mu,
                                       const Dictionary& dict) {
    if (!(mu > 0.0 && mu < lambda)) throw ConfigError("modified estimator requires 0 < mu < lambda");
    if (features.rows() != integral_mu.rows() || features.cols() != integral_mu.cols())
        throw DimensionError("features and I_mu must have identical shapes");
    const Eigen::MatrixXd a = ((lambda - mu) / (mu * mu)) * integral_mu + features;
    const Eigen::MatrixXd b = (lambda / mu) * integral_mu - lambda * features;
    if (numerical_rank(a) < a.cols())
        throw ConditioningError("modified estimator: A is rank deficient", condition_number(a));
    return GeneratorMatrix(pseudo_inverse(a) * b, dict, Provenance::RtEdmdModified);
}

GeneratorMatrix fit_generator_modified(const TrajectoryEnsemble& ensemble, const Dictionary& dict, const RtConfig& rt) {
    RtConfig at_mu = rt;
    at_mu.use_modification = true;
    at_mu.validate();
    const Eigen::MatrixXd features = dict.feature_matrix(ensemble.initial_states());
    const RtMatrices mats =
        assemble_rt_matrices(features, means_up_to(ensemble, dict, rt.horizon), rt.mu, ensemble.config().rate);
    return fit_generator_modified(mats.features, mats.integral, rt.lambda, rt.mu, dict);
}

Eigen::MatrixXd invert_yosida(const Eigen::Ref<const Eigen::MatrixXd>& yosida, double lambda) {
    if (yosida.rows() != yosida.cols()) throw DimensionError("Yosida inversion needs a square matrix");
    const Eigen::Index n = yosida.rows();
    const Eigen::MatrixXd shifted = lambda * Eigen::MatrixXd::Identity(n, n) + yosida;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(shifted);
    if (!lu.isInvertible() || lu.rcond() < 1e-14)
        throw ConditioningError("Yosida inversion: lambda I + L_lambda is singular", 1.0 / lu.rcond());
    // L_lambda commutes with (lambda I + L_lambda)^-1, so either order is exact.
    return lambda * lu.solve(yosida);
}

namespace {

GeneratorMatrix finish(GeneratorMatrix fitted, const RtConfig& rt, double rate) {
    if (rt.invert_yosida) fitted.entries = invert_yosida(fitted.entries, rt.lambda);
    fitted.validate();
    fitted.metadata["lambda"] = rt.lambda;
    fitted.metadata["horizon"] = rt.horizon;
    fitted.metadata["rate"] = rate;
    fitted.metadata["invert_yosida"] = rt.invert_yosida;
    fitted.metadata["truncation_weight"] = rt.truncation_weight();
    if (rt.use_modification) fitted.metadata["mu"] = rt.mu;
    return fitted;
}

}  // namespace

GeneratorMatrix estimate_rt_from_means(const Eigen::Ref<const Eigen::MatrixXd>& features, const PathMeans& means,
                                       double rate, const Dictionary& dict, const RtConfig& rt) {
    rt.validate();
    if (rt.use_modification) {
        const RtMatrices mats = assemble_rt_matrices(features, means, rt.mu, rate);
        return finish(fit_generator_modified(mats.features, mats.integral, rt.lambda, rt.mu, dict), rt, rate);
    }
    const RtMatrices mats = assemble_rt_matrices(features, means, rt.lambda, rate);
    return finish(fit_generator(mats.features, mats.labels, dict), rt, rate);
}

GeneratorMatrix estimate_rt(const TrajectoryEnsemble& ensemble, const Dictionary& dict, const RtConfig& rt) {
    rt.validate();
    const Eigen::MatrixXd features = dict.feature_matrix(ensemble.initial_states());
    return estimate_rt_from_means(features, means_up_to(ensemble, dict, rt.horizon), ensemble.config().rate, dict, rt);
}

}  // namespace rtedmd
