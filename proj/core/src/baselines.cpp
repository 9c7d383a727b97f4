#include "rtedmd/baselines.hpp"

#include <cmath>
#include <complex>

#include "rtedmd/errors.hpp"
#include "rtedmd/linalg.hpp"
#include "rtedmd/log.hpp"

namespace rtedmd {
namespace {

constexpr double kImagStripTol = 1e-8;

// Visits every admissible (k, k + lag) pair of features.
template <typename Visitor>
std::size_t for_each_pair(const TrajectoryEnsemble& ensemble, const Dictionary& dict, int lag_steps, Visitor&& visit) {
    if (ensemble.dim() != dict.dim()) throw DimensionError("ensemble and dictionary dimensions differ");
    if (lag_steps < 1) throw ConfigError("lag_steps must be >= 1");
    if (lag_steps > ensemble.intervals()) throw ConfigError("lag_steps exceeds the number of observation intervals");
    const int n_obs = dict.size();
    Eigen::VectorXd now(n_obs), later(n_obs);
    Eigen::VectorXd x(ensemble.dim());
    std::size_t count = 0;
    for (int i = 0; i < ensemble.num_initial(); ++i) {
        for (int j = 0; j < ensemble.paths_per_state(); ++j) {
            // Snapshots from stop_index on are boundary values of an exited path.
            const int usable = ensemble.exited(i, j) ? ensemble.stop_index(i, j) : ensemble.snapshots();
            for (int k = 0; k + lag_steps < usable; ++k) {
                x = ensemble.state(i, j, k);
                dict.evaluate_into(x.data(), now.data());
                x = ensemble.state(i, j, k + lag_steps);
                dict.evaluate_into(x.data(), later.data());
                visit(now, later);
                ++count;
            }
        }
    }
    if (count == 0) throw EmptyDataError("no snapshot pairs available for the requested lag");
    return count;
}

}  // namespace

KoopmanMatrix fit_koopman(const TrajectoryEnsemble& ensemble, const Dictionary& dict, int lag_steps) {
    const int n_obs = dict.size();
    StreamingLeastSquares solver(n_obs, n_obs);
    for_each_pair(ensemble, dict, lag_steps,
                  [&](const Eigen::VectorXd& now, const Eigen::VectorXd& later) { solver.add_row(now.data(), later.data()); });
    return KoopmanMatrix{solver.solve(), lag_steps / ensemble.config().rate, dict};
}

GeneratorMatrix generator_from_log(const KoopmanMatrix& koopman) {
    const Eigen::MatrixXd& k = koopman.entries;
    if (k.rows() != k.cols() || k.rows() != koopman.dictionary.size()) throw DimensionError("Koopman matrix shape mismatch");
    if (!(koopman.lag > 0.0)) throw ConfigError("Koopman lag must be positive");
    if (!k.allFinite()) throw NumericalError("Koopman matrix has non-finite entries");

    Eigen::EigenSolver<Eigen::MatrixXd> eig(k);
    if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of the Koopman matrix failed");
    const Eigen::VectorXcd beta = eig.eigenvalues();
    const Eigen::MatrixXcd v = eig.eigenvectors();

    const double scale = std::max(1.0, k.cwiseAbs().maxCoeff());
    Eigen::VectorXcd log_beta(beta.size());
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
        const std::complex<double> b = beta[i];
        if (std::abs(b) <= 1e-12)
            throw LogBranchError("Koopman eigenvalue " + std::to_string(b.real()) + " is numerically zero");
        if (b.real() < 0.0 && std::abs(b.imag()) <= 1e-12 * scale)
            throw LogBranchError("Koopman eigenvalue " + std::to_string(b.real()) +
                                 " lies on the negative real axis; principal logarithm undefined");
        log_beta[i] = std::log(b);
    }

    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(v);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-13)) throw NumericalError("Koopman matrix is defective or nearly so (eigenvector rcond " +
                                               std::to_string(rcond) + ")");
    const Eigen::MatrixXcd logk = v * log_beta.asDiagonal() * lu.inverse();

    const double residue = logk.imag().cwiseAbs().maxCoeff() / koopman.lag;
    GeneratorMatrix out(logk.real() / koopman.lag, koopman.dictionary, Provenance::EdmdKlm);
    out.imaginary_residue = residue;
    if (residue > kImagStripTol) {
        out.metadata["imaginary_residue_flag"] = true;
        log_warning("matrix logarithm left an imaginary residue of " + std::to_string(residue));
    }
    out.metadata["lag"] = koopman.lag;
    return out;
}

GeneratorMatrix gedmd_fdm(const TrajectoryEnsemble& ensemble, const Dictionary& dict, int lag_steps) {
    const int n_obs = dict.size();
    const double lag = lag_steps / ensemble.config().rate;
    StreamingLeastSquares solver(n_obs, n_obs);
    Eigen::VectorXd diff(n_obs);
    for_each_pair(ensemble, dict, lag_steps, [&](const Eigen::VectorXd& now, const Eigen::VectorXd& later) {
        diff = (later - now) / lag;
        solver.add_row(now.data(), diff.data());
    });
    GeneratorMatrix out(solver.solve(), dict, Provenance::GedmdFdm);
    out.metadata["lag"] = lag;
    return out;
}

}  // namespace rtedmd
