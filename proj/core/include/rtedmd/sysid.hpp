#pragma once

#include <vector>

#include <Eigen/Dense>

#include "rtedmd/dictionary.hpp"
#include "rtedmd/generator.hpp"
#include "rtedmd/polynomial.hpp"
#include "rtedmd/sde.hpp"

namespace rtedmd {

/// Drift and diffusion recovered from a generator matrix, as coefficients over its dictionary.
struct IdentifiedModel {
    Dictionary dictionary;
    Eigen::MatrixXd drift;                    // d x N, row i = coefficients of f_i
    std::vector<Eigen::VectorXd> diffusion;   // d*d entries, [i*d + j] = coefficients of (b b^T)_ij
    Provenance source = Provenance::Analytic;

    int dim() const { return dictionary.dim(); }
    const Eigen::VectorXd& covariance_coeffs(int i, int j) const {
        return diffusion[static_cast<std::size_t>(i * dim() + j)];
    }

    Eigen::VectorXd drift_at(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    Eigen::MatrixXd covariance_at(const Eigen::Ref<const Eigen::VectorXd>& x) const;

    std::vector<Polynomial> drift_polynomials() const;
    std::vector<std::vector<Polynomial>> covariance_polynomials() const;
};

/// Row i is the image of x_i, the generator column for that observable.
Eigen::MatrixXd recover_drift(const GeneratorMatrix& generator);

/// (b b^T)_ij = L(x_i x_j) - (f_i x_j + f_j x_i). Product terms that fall outside the
/// dictionary are dropped with a warning. Result is symmetrised.
std::vector<Eigen::VectorXd> recover_diffusion(const GeneratorMatrix& generator, const Eigen::Ref<const Eigen::MatrixXd>& drift);

IdentifiedModel identify(const GeneratorMatrix& generator);

struct PsdReport {
    double min_eigenvalue = 0.0;
    int failing_points = 0;     // points with an eigenvalue below the tolerance
    bool ok() const { return failing_points == 0; }
};

/// Checks b b^T for positive semi-definiteness at the given points.
PsdReport check_covariance(const IdentifiedModel& model, const std::vector<Eigen::VectorXd>& points,
                           double tolerance = -1e-6);

/// Symmetric square root with negative eigenvalues clamped to zero. `clamped` receives
/// the magnitude of the most negative eigenvalue that was removed.
Eigen::MatrixXd covariance_sqrt(const Eigen::Ref<const Eigen::MatrixXd>& covariance, double* clamped = nullptr);

/// SDE with drift Z_N(x) f and diffusion sqrt(b b^T); noise dimension equals d.
SdeModel to_sde_model(const IdentifiedModel& model);

/// Euler-Maruyama under the identified model. With the seed of a reference run the
/// Wiener increments are identical whenever both models share the noise dimension.
TrajectoryEnsemble reconstruct_paths(const IdentifiedModel& model, const Domain& domain,
                                     const std::vector<Eigen::VectorXd>& initial_states, int paths_per_state,
                                     const SimConfig& config);

struct PathwiseError {
    double mean_abs = 0.0;
    double max_abs = 0.0;
    Eigen::VectorXd mean_abs_by_time;  // averaged over paths and coordinates
};

PathwiseError pathwise_error(const TrajectoryEnsemble& reference, const TrajectoryEnsemble& reconstructed);

}  // namespace rtedmd
