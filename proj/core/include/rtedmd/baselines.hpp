#pragma once

#include <Eigen/Dense>

#include "rtedmd/dictionary.hpp"
#include "rtedmd/generator.hpp"
#include "rtedmd/sde.hpp"

namespace rtedmd {

/// Finite-time Koopman matrix in the same column convention as GeneratorMatrix:
/// Z_N(X(t + lag)) ~ Z_N(X(t)) K.
struct KoopmanMatrix {
    Eigen::MatrixXd entries;
    double lag = 0.0;  // time
    Dictionary dictionary;
};

/// Least squares over all snapshot pairs (k, k + lag_steps) of every path. Pairs whose
/// later snapshot is at or after the path's exit are dropped.
KoopmanMatrix fit_koopman(const TrajectoryEnsemble& ensemble, const Dictionary& dict, int lag_steps);

/// (1/t) V diag(log beta) V^-1 with the principal branch.
GeneratorMatrix generator_from_log(const KoopmanMatrix& koopman);

/// Least-squares fit of (Z(t + lag) - Z(t)) / lag against Z(t) on the same pairs as fit_koopman.
GeneratorMatrix gedmd_fdm(const TrajectoryEnsemble& ensemble, const Dictionary& dict, int lag_steps);

}  // namespace rtedmd
