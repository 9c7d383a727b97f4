#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rtedmd/polynomial.hpp"

namespace rtedmd {

/// Writes f(x) into `out` (length d).
using DriftFn = std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& out)>;
/// Writes b(x) into `out` (d x l).
using DiffusionFn = std::function<void(const Eigen::VectorXd& x, Eigen::MatrixXd& out)>;

/// Polynomial description of a model, required by the analytic generator-matrix oracle.
struct PolynomialFields {
    std::vector<Polynomial> drift;                     // d entries
    std::vector<std::vector<Polynomial>> covariance;   // d x d entries of b b^T
};

/// dX = f(X) dt + b(X) dW with X in R^d and W in R^l.
struct SdeModel {
    std::string name;
    int dim = 1;
    int noise_dim = 1;
    DriftFn drift;
    DiffusionFn diffusion;
    std::optional<std::vector<std::complex<double>>> analytic_spectrum;
    std::optional<PolynomialFields> polynomial;

    Eigen::VectorXd drift_at(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd diffusion_at(const Eigen::VectorXd& x) const;
    /// b(x) b(x)^T.
    Eigen::MatrixXd covariance_at(const Eigen::VectorXd& x) const;
};

/// dX = mu X dt + sigma dW. Koopman spectrum {n mu : n >= 1} (plus 0 for constants).
SdeModel ornstein_uhlenbeck(double mu, double sigma);

struct LotkaVolterraParams {
    double a1 = 1.0, b1 = 0.5, c1 = 0.01;
    double a2 = 0.75, b2 = 0.25, c2 = 0.01;
    double sigma1 = 0.05, sigma2 = 0.05;
};

/// Competitive predator-prey system with multiplicative noise sigma_i X_i dW_i.
/// The analytic spectrum holds the principal pair only when `principal_pair` is given.
SdeModel lotka_volterra(const LotkaVolterraParams& params,
                        std::optional<std::vector<std::complex<double>>> principal_pair = std::nullopt);

/// f = 0, b = 0: every path stays at its initial state.
SdeModel zero_dynamics(int dim);

/// Builds drift/diffusion closures from polynomial fields; b is given entrywise (d x l).
SdeModel polynomial_model(std::string name, std::vector<Polynomial> drift,
                          std::vector<std::vector<Polynomial>> diffusion);

/// Bounded state space. Interior means strictly inside.
class Domain {
public:
    enum class Kind { Ball, Box };

    static Domain ball(int dim, double radius);
    static Domain box(Eigen::VectorXd lo, Eigen::VectorXd hi);

    Kind kind() const noexcept { return kind_; }
    int dim() const noexcept { return dim_; }
    double radius() const noexcept { return radius_; }
    const Eigen::VectorXd& lower() const noexcept { return lo_; }
    const Eigen::VectorXd& upper() const noexcept { return hi_; }

    bool is_interior(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    bool on_boundary(const Eigen::Ref<const Eigen::VectorXd>& x, double tol = 1e-12) const;

    /// Intersection of segment p -> q with the boundary, for interior p and exterior q.
    /// Falls back to projecting q onto the boundary when no crossing is found numerically.
    Eigen::VectorXd boundary_crossing(const Eigen::Ref<const Eigen::VectorXd>& p,
                                      const Eigen::Ref<const Eigen::VectorXd>& q) const;

private:
    Domain() = default;

    Kind kind_ = Kind::Ball;
    int dim_ = 1;
    double radius_ = 1.0;
    Eigen::VectorXd lo_;
    Eigen::VectorXd hi_;
};

struct SimConfig {
    double horizon = 1.0;          // T
    double rate = 100.0;           // gamma, snapshots per unit time
    int substeps_per_observation = 1;
    std::uint64_t seed = 0;

    /// Number of observation intervals gamma*T; throws ConfigError unless integral.
    int intervals() const;
    double observation_step() const { return 1.0 / rate; }
    double integration_step() const { return 1.0 / (rate * substeps_per_observation); }
    double time_at(int k) const { return k / rate; }
    void validate() const;
};

/// m initial states x J paths x (Gamma + 1) snapshots of the stopped process.
/// Snapshot k >= stop_index(i, j) of an exited path equals stopped_value(i, j).
class TrajectoryEnsemble {
public:
    TrajectoryEnsemble(int dim, SimConfig config, std::vector<Eigen::VectorXd> initial_states, int paths_per_state);

    int dim() const noexcept { return dim_; }
    int num_initial() const noexcept { return static_cast<int>(initial_states_.size()); }
    int paths_per_state() const noexcept { return paths_; }
    int intervals() const noexcept { return intervals_; }
    int snapshots() const noexcept { return intervals_ + 1; }
    const SimConfig& config() const noexcept { return config_; }
    const std::vector<Eigen::VectorXd>& initial_states() const noexcept { return initial_states_; }

    Eigen::Map<const Eigen::VectorXd> state(int i, int j, int k) const;
    int stop_index(int i, int j) const { return stop_index_[path_slot(i, j)]; }
    bool exited(int i, int j) const { return exited_[path_slot(i, j)] != 0; }
    Eigen::Map<const Eigen::VectorXd> stopped_value(int i, int j) const;

    /// Fraction of paths that hit the boundary within the horizon.
    double exit_fraction() const;

    // Writers used by the simulator and the loaders.
    void set_state(int i, int j, int k, const Eigen::Ref<const Eigen::VectorXd>& x);
    void set_stop(int i, int j, int stop_index, bool exited, const Eigen::Ref<const Eigen::VectorXd>& value);

    bool operator==(const TrajectoryEnsemble& other) const;

private:
    std::size_t path_slot(int i, int j) const { return static_cast<std::size_t>(i) * paths_ + j; }
    std::size_t offset(int i, int j, int k) const {
        return (path_slot(i, j) * snapshots() + k) * static_cast<std::size_t>(dim_);
    }

    int dim_;
    SimConfig config_;
    std::vector<Eigen::VectorXd> initial_states_;
    int paths_;
    int intervals_;
    std::vector<double> data_;
    std::vector<int> stop_index_;
    std::vector<unsigned char> exited_;
    std::vector<double> stopped_value_;
};

struct StopResult {
    int stop_index = 0;
    bool exited = false;
    Eigen::VectorXd stopped_value;
};

/// First snapshot outside the domain and the interpolated boundary point.
/// stop_index equals raw_path.size() - 1 when the path never leaves.
StopResult apply_stopping(std::span<const Eigen::VectorXd> raw_path, const Domain& domain);

/// Euler-Maruyama sample paths of the stopped process. Path (i, j) draws its Wiener
/// increments from a generator seeded by (seed, i, j), so output does not depend on `threads`.
TrajectoryEnsemble simulate_paths(const SdeModel& model, const Domain& domain,
                                  const std::vector<Eigen::VectorXd>& initial_states, int paths_per_state,
                                  const SimConfig& config, int threads = 1);

/// Keeps every `factor`-th snapshot. The result equals a direct simulation at rate / factor
/// with factor times as many substeps, since both consume the same Wiener increments.
TrajectoryEnsemble subsample(const TrajectoryEnsemble& ensemble, int factor);

/// Seeds the per-path generator; exposed so tests can replay increments.
std::uint64_t path_stream_seed(std::uint64_t seed, std::uint64_t i, std::uint64_t j);

}  // namespace rtedmd
