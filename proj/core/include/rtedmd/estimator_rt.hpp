#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rtedmd/dictionary.hpp"
#include "rtedmd/generator.hpp"
#include "rtedmd/sde.hpp"

namespace rtedmd {

/// Resolvent-type EDMD settings.
struct RtConfig {
    double lambda = 1.0;            // resolvent parameter, 1/time
    double mu = 0.0;                // second parameter for the resolvent-identity variant, 0 < mu < lambda
    double horizon = 5.0;           // truncation time T
    bool use_modification = false;
    /// Map the Yosida approximant L_lambda = lambda L (lambda - L)^-1 back to L.
    bool invert_yosida = true;

    /// e^{-lambda T}, the weight of the truncated tail.
    double truncation_weight() const;
    void validate() const;
};

/// Per initial state, a (Gamma + 1) x N matrix of snapshot means.
using PathMeans = std::vector<Eigen::MatrixXd>;

/// Entry [i](k, n): mean over j of z_n at the stopped state X_ij(t_k ^ tau).
PathMeans mean_observables(const TrajectoryEnsemble& ensemble, const Dictionary& dict);

/// Entry [i](k, n) = lambda^2 e^{-lambda t_k} means[i](k, n) with t_k = k / rate.
PathMeans integrand_matrix(const PathMeans& means, double lambda, double rate);

/// dt (s_0/2 + s_1 + ... + s_{G-1} + s_G/2).
double trapezoid_integrate(std::span<const double> samples, double dt);
/// Column-wise trapezoid of a (G + 1) x N block.
Eigen::RowVectorXd trapezoid_integrate(const Eigen::Ref<const Eigen::MatrixXd>& samples, double dt);

struct RtMatrices {
    Eigen::MatrixXd features;   // X, row i = Z_N(x_i)
    Eigen::MatrixXd integral;   // I_lambda, trapezoid of the integrand rows
    Eigen::MatrixXd labels;     // Y_lambda = I_lambda - lambda X
};

/// Builds X, I_lambda and Y_lambda from precomputed means (m entries of (G + 1) x N).
RtMatrices assemble_rt_matrices(const Eigen::Ref<const Eigen::MatrixXd>& features, const PathMeans& means,
                                double lambda, double rate);

RtMatrices build_matrices(const TrajectoryEnsemble& ensemble, const Dictionary& dict, const RtConfig& rt);

/// Closed-form least squares (X^T X)^+ X^T Y via the SVD pseudoinverse.
/// Returns the Yosida approximant; warns when m < N.
GeneratorMatrix fit_generator(const Eigen::Ref<const Eigen::MatrixXd>& features,
                              const Eigen::Ref<const Eigen::MatrixXd>& labels, const Dictionary& dict);

/// Resolvent-identity variant A^+ B with A = ((lambda - mu)/mu^2) I_mu + X and
/// B = (lambda/mu) I_mu - lambda X, where I_mu is built at parameter mu.
GeneratorMatrix fit_generator_modified(const Eigen::Ref<const Eigen::MatrixXd>& features,
                                       const Eigen::Ref<const Eigen::MatrixXd>& integral_mu, double lambda, double mu,
                                       const Dictionary& dict);
GeneratorMatrix fit_generator_modified(const TrajectoryEnsemble& ensemble, const Dictionary& dict, const RtConfig& rt);

/// Inverse of the Yosida map: given L_lambda = lambda L (lambda I - L)^-1 returns
/// L = lambda L_lambda (lambda I + L_lambda)^-1.
Eigen::MatrixXd invert_yosida(const Eigen::Ref<const Eigen::MatrixXd>& yosida, double lambda);

/// Full pipeline: means, trapezoid, least squares, and the optional Yosida inversion.
GeneratorMatrix estimate_rt(const TrajectoryEnsemble& ensemble, const Dictionary& dict, const RtConfig& rt);

/// Same pipeline on externally supplied means (used with exact conditional expectations).
GeneratorMatrix estimate_rt_from_means(const Eigen::Ref<const Eigen::MatrixXd>& features, const PathMeans& means,
                                       double rate, const Dictionary& dict, const RtConfig& rt);

}  // namespace rtedmd
