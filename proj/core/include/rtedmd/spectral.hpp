#pragma once

#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rtedmd/dictionary.hpp"
#include "rtedmd/generator.hpp"

namespace rtedmd {

using Complex = std::complex<double>;

struct SpectrumResult {
    std::vector<Complex> eigenvalues;
    /// Column i holds the unit-norm coefficient vector of eigenfunction i.
    Eigen::MatrixXcd eigenvectors;
    /// (true index, estimated index) pairs, when matched against a reference spectrum.
    std::vector<std::pair<int, int>> matching;
    std::optional<double> mae;
};

/// Real part descending, then imaginary part ascending.
bool spectral_order(const Complex& a, const Complex& b);
void sort_spectrum(std::vector<Complex>& values);

/// Full eigendecomposition, sorted by spectral_order.
SpectrumResult eigendecompose(const Eigen::Ref<const Eigen::MatrixXd>& matrix);
SpectrumResult eigendecompose(const GeneratorMatrix& generator);

enum class MatchStrategy { Greedy, Optimal };

struct Matching {
    std::vector<std::pair<int, int>> pairs;  // indices into the caller's lists
    double mae = 0.0;
};

/// Matches the first n_match reference eigenvalues (in spectral order) to distinct estimates.
/// Greedy takes each reference in turn and claims its nearest unclaimed estimate; Optimal
/// minimises the summed distance over all injective assignments.
Matching match_and_mae(const std::vector<Complex>& reference, const std::vector<Complex>& estimated, int n_match,
                       MatchStrategy strategy = MatchStrategy::Greedy);

/// Entry (p, i) = Z_N(points[p]) . phi_i.
Eigen::MatrixXcd eigenfunction_values(const SpectrumResult& result, const Dictionary& dict,
                                      const std::vector<Eigen::VectorXd>& points);

}  // namespace rtedmd
