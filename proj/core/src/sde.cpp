#include "rtedmd/sde.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <thread>

#include "rtedmd/errors.hpp"

namespace rtedmd {

Eigen::VectorXd SdeModel::drift_at(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out(dim);
    drift(x, out);
    return out;
}

Eigen::MatrixXd SdeModel::diffusion_at(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd out(dim, noise_dim);
    diffusion(x, out);
    return out;
}

Eigen::MatrixXd SdeModel::covariance_at(const Eigen::VectorXd& x) const {
    const Eigen::MatrixXd b = diffusion_at(x);
    return b * b.transpose();
}

SdeModel ornstein_uhlenbeck(double mu, double sigma) {
    SdeModel model;
    model.name = "ou";
    model.dim = 1;
    model.noise_dim = 1;
    model.drift = [mu](const Eigen::VectorXd& x, Eigen::VectorXd& out) { out[0] = mu * x[0]; };
    model.diffusion = [sigma](const Eigen::VectorXd&, Eigen::MatrixXd& out) { out(0, 0) = sigma; };

    std::vector<std::complex<double>> spectrum;
    for (int n = 1; n <= 16; ++n) spectrum.emplace_back(n * mu, 0.0);
    model.analytic_spectrum = std::move(spectrum);

    PolynomialFields fields;
    fields.drift.push_back(Polynomial::coordinate(1, 0, mu));
    fields.covariance = {{Polynomial::constant(1, sigma * sigma)}};
    model.polynomial = std::move(fields);
    return model;
}

SdeModel lotka_volterra(const LotkaVolterraParams& p, std::optional<std::vector<std::complex<double>>> principal_pair) {
    SdeModel model;
    model.name = "lv";
    model.dim = 2;
    model.noise_dim = 2;
    model.drift = [p](const Eigen::VectorXd& x, Eigen::VectorXd& out) {
        out[0] = (p.a1 - p.b1 * x[1] - p.c1 * x[0]) * x[0];
        out[1] = (-p.a2 + p.b2 * x[0] - p.c2 * x[1]) * x[1];
    };
    model.diffusion = [p](const Eigen::VectorXd& x, Eigen::MatrixXd& out) {
        out(0, 0) = p.sigma1 * x[0];
        out(0, 1) = 0.0;
        out(1, 0) = 0.0;
        out(1, 1) = p.sigma2 * x[1];
    };
    model.analytic_spectrum = std::move(principal_pair);

    PolynomialFields fields;
    Polynomial f1(2), f2(2);
    f1.add_term({1, 0}, p.a1);
    f1.add_term({1, 1}, -p.b1);
    f1.add_term({2, 0}, -p.c1);
    f2.add_term({0, 1}, -p.a2);
    f2.add_term({1, 1}, p.b2);
    f2.add_term({0, 2}, -p.c2);
    fields.drift = {f1, f2};
    fields.covariance = {{Polynomial::monomial({2, 0}, p.sigma1 * p.sigma1), Polynomial(2)},
                         {Polynomial(2), Polynomial::monomial({0, 2}, p.sigma2 * p.sigma2)}};
    model.polynomial = std::move(fields);
    return model;
}

SdeModel zero_dynamics(int dim) {
    SdeModel model;
    model.name = "zero";
    model.dim = dim;
    model.noise_dim = dim;
    model.drift = [](const Eigen::VectorXd&, Eigen::VectorXd& out) { out.setZero(); };
    model.diffusion = [](const Eigen::VectorXd&, Eigen::MatrixXd& out) { out.setZero(); };
    PolynomialFields fields;
    fields.drift.assign(dim, Polynomial(dim));
    fields.covariance.assign(dim, std::vector<Polynomial>(dim, Polynomial(dim)));
    model.polynomial = std::move(fields);
    return model;
}

SdeModel polynomial_model(std::string name, std::vector<Polynomial> drift, std::vector<std::vector<Polynomial>> diffusion) {
    if (drift.empty() || diffusion.size() != drift.size() || diffusion.front().empty())
        throw DimensionError("polynomial model needs d drift entries and a d x l diffusion");
    const int d = static_cast<int>(drift.size());
    const int l = static_cast<int>(diffusion.front().size());
    for (const auto& row : diffusion)
        if (static_cast<int>(row.size()) != l) throw DimensionError("ragged diffusion matrix");

    SdeModel model;
    model.name = std::move(name);
    model.dim = d;
    model.noise_dim = l;

    PolynomialFields fields;
    fields.drift = drift;
    fields.covariance.assign(d, std::vector<Polynomial>(d, Polynomial(d)));
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c)
            for (int k = 0; k < l; ++k) fields.covariance[r][c] += diffusion[r][k] * diffusion[c][k];
    model.polynomial = std::move(fields);

    model.drift = [drift = std::move(drift)](const Eigen::VectorXd& x, Eigen::VectorXd& out) {
        for (std::size_t r = 0; r < drift.size(); ++r) out[static_cast<Eigen::Index>(r)] = drift[r].evaluate(x);
    };
    model.diffusion = [diffusion = std::move(diffusion)](const Eigen::VectorXd& x, Eigen::MatrixXd& out) {
        for (std::size_t r = 0; r < diffusion.size(); ++r)
            for (std::size_t c = 0; c < diffusion[r].size(); ++c)
                out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = diffusion[r][c].evaluate(x);
    };
    return model;
}

// ---------------------------------------------------------------------------
// Domain

Domain Domain::ball(int dim, double radius) {
    if (dim < 1) throw ConfigError("domain dimension must be positive");
    if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("ball radius must be positive and finite");
    Domain d;
    d.kind_ = Kind::Ball;
    d.dim_ = dim;
    d.radius_ = radius;
    return d;
}

Domain Domain::box(Eigen::VectorXd lo, Eigen::VectorXd hi) {
    if (lo.size() == 0 || lo.size() != hi.size()) throw ConfigError("box bounds must be non-empty and of equal length");
    for (Eigen::Index i = 0; i < lo.size(); ++i)
        if (!(lo[i] < hi[i])) throw ConfigError("box bounds require lo < hi in every dimension");
    Domain d;
    d.kind_ = Kind::Box;
    d.dim_ = static_cast<int>(lo.size());
    d.lo_ = std::move(lo);
    d.hi_ = std::move(hi);
    return d;
}

bool Domain::is_interior(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != dim_) throw DimensionError("domain membership test with wrong dimension");
    if (kind_ == Kind::Ball) return x.squaredNorm() < radius_ * radius_;
    return (x.array() > lo_.array()).all() && (x.array() < hi_.array()).all();
}

bool Domain::on_boundary(const Eigen::Ref<const Eigen::VectorXd>& x, double tol) const {
    if (kind_ == Kind::Ball) return std::abs(x.norm() - radius_) <= tol;
    bool touching = false;
    for (int i = 0; i < dim_; ++i) {
        if (x[i] < lo_[i] - tol || x[i] > hi_[i] + tol) return false;
        if (std::abs(x[i] - lo_[i]) <= tol || std::abs(x[i] - hi_[i]) <= tol) touching = true;
    }
    return touching;
}

Eigen::VectorXd Domain::boundary_crossing(const Eigen::Ref<const Eigen::VectorXd>& p,
                                          const Eigen::Ref<const Eigen::VectorXd>& q) const {
    const Eigen::VectorXd step = q - p;
    if (kind_ == Kind::Ball) {
        // |p + s (q - p)|^2 = R^2  <=>  a s^2 + 2 b s + c = 0 with c < 0 for interior p.
        const double a = step.squaredNorm();
        const double b = p.dot(step);
        const double c = p.squaredNorm() - radius_ * radius_;
        const double disc = b * b - a * c;
        if (a > 0.0 && disc >= 0.0) {
            const double root = std::sqrt(disc);
            // Stable form of the larger root (-b + root) / a.
            const double s = b <= 0.0 ? (-b + root) / a : -c / (b + root);
            if (s >= 0.0 && s <= 1.0) return p + s * step;
        }
        const double qn = q.norm();
        if (qn == 0.0) return p;
        return q * (radius_ / qn);
    }

    double s_min = 1.0;
    int axis = -1;
    double bound = 0.0;
    for (int i = 0; i < dim_; ++i) {
        if (q[i] <= lo_[i] && step[i] < 0.0) {
            const double s = (lo_[i] - p[i]) / step[i];
            if (s <= s_min) { s_min = s; axis = i; bound = lo_[i]; }
        } else if (q[i] >= hi_[i] && step[i] > 0.0) {
            const double s = (hi_[i] - p[i]) / step[i];
            if (s <= s_min) { s_min = s; axis = i; bound = hi_[i]; }
        }
    }
    if (axis < 0) {
        Eigen::VectorXd clamped = q.cwiseMax(lo_).cwiseMin(hi_);
        return clamped;
    }
    s_min = std::clamp(s_min, 0.0, 1.0);
    Eigen::VectorXd hit = p + s_min * step;
    hit = hit.cwiseMax(lo_).cwiseMin(hi_);
    hit[axis] = bound;
    return hit;
}

// ---------------------------------------------------------------------------
// SimConfig

int SimConfig::intervals() const {
    const double g = rate * horizon;
    const double rounded = std::round(g);
    if (!(rounded >= 1.0) || std::abs(g - rounded) > 1e-9 * std::max(1.0, g))
        throw ConfigError("rate * horizon must be a positive integer (got " + std::to_string(g) + ")");
    return static_cast<int>(rounded);
}

void SimConfig::validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be positive");
    if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("observation rate must be positive");
    if (substeps_per_observation < 1) throw ConfigError("substeps_per_observation must be >= 1");
    (void)intervals();
}

// ---------------------------------------------------------------------------
// TrajectoryEnsemble

TrajectoryEnsemble::TrajectoryEnsemble(int dim, SimConfig config, std::vector<Eigen::VectorXd> initial_states,
                                       int paths_per_state)
    : dim_(dim), config_(config), initial_states_(std::move(initial_states)), paths_(paths_per_state) {
    config_.validate();
    intervals_ = config_.intervals();
    if (dim_ < 1) throw DimensionError("ensemble dimension must be positive");
    if (paths_ < 1) throw ConfigError("paths per initial state must be >= 1");
    if (initial_states_.empty()) throw ConfigError("at least one initial state is required");
    for (const auto& x : initial_states_)
        if (x.size() != dim_) throw DimensionError("initial state dimension mismatch");
    const std::size_t n_paths = initial_states_.size() * static_cast<std::size_t>(paths_);
    data_.assign(n_paths * snapshots() * static_cast<std::size_t>(dim_), 0.0);
    stop_index_.assign(n_paths, intervals_);
    exited_.assign(n_paths, 0);
    stopped_value_.assign(n_paths * static_cast<std::size_t>(dim_), 0.0);
}

Eigen::Map<const Eigen::VectorXd> TrajectoryEnsemble::state(int i, int j, int k) const {
    return Eigen::Map<const Eigen::VectorXd>(data_.data() + offset(i, j, k), dim_);
}

Eigen::Map<const Eigen::VectorXd> TrajectoryEnsemble::stopped_value(int i, int j) const {
    return Eigen::Map<const Eigen::VectorXd>(stopped_value_.data() + path_slot(i, j) * dim_, dim_);
}

double TrajectoryEnsemble::exit_fraction() const {
    std::size_t count = 0;
    for (unsigned char e : exited_) count += e;
    return static_cast<double>(count) / static_cast<double>(exited_.size());
}

void TrajectoryEnsemble::set_state(int i, int j, int k, const Eigen::Ref<const Eigen::VectorXd>& x) {
    std::copy(x.data(), x.data() + dim_, data_.begin() + static_cast<std::ptrdiff_t>(offset(i, j, k)));
}

void TrajectoryEnsemble::set_stop(int i, int j, int stop_index, bool exited, const Eigen::Ref<const Eigen::VectorXd>& value) {
    const auto slot = path_slot(i, j);
    stop_index_[slot] = stop_index;
    exited_[slot] = exited ? 1 : 0;
    std::copy(value.data(), value.data() + dim_, stopped_value_.begin() + static_cast<std::ptrdiff_t>(slot * dim_));
}

bool TrajectoryEnsemble::operator==(const TrajectoryEnsemble& other) const {
    if (dim_ != other.dim_ || paths_ != other.paths_ || intervals_ != other.intervals_) return false;
    if (initial_states_.size() != other.initial_states_.size()) return false;
    for (std::size_t i = 0; i < initial_states_.size(); ++i)
        if (initial_states_[i] != other.initial_states_[i]) return false;
    return data_ == other.data_ && stop_index_ == other.stop_index_ && exited_ == other.exited_ &&
           stopped_value_ == other.stopped_value_;
}

// ---------------------------------------------------------------------------
// Stopping and simulation

StopResult apply_stopping(std::span<const Eigen::VectorXd> raw_path, const Domain& domain) {
    if (raw_path.empty()) throw ConfigError("cannot stop an empty path");
    if (!domain.is_interior(raw_path.front())) throw ConfigError("path must start in the domain interior");
    const int last = static_cast<int>(raw_path.size()) - 1;
    StopResult result;
    result.stop_index = last;
    result.stopped_value = raw_path.back();
    for (int k = 1; k <= last; ++k) {
        if (!domain.is_interior(raw_path[k])) {
            result.stop_index = k;
            result.exited = true;
            result.stopped_value = domain.boundary_crossing(raw_path[k - 1], raw_path[k]);
            break;
        }
    }
    return result;
}

std::uint64_t path_stream_seed(std::uint64_t seed, std::uint64_t i, std::uint64_t j) {
    // splitmix64 finaliser applied to a combination of the three keys.
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(seed) ^ i) ^ (j + 0x632be59bd9b4e019ULL));
}

namespace {

void simulate_one(const SdeModel& model, const Domain& domain, const SimConfig& config, int i, int j,
                  TrajectoryEnsemble& out) {
    const int d = model.dim;
    const int l = model.noise_dim;
    const int intervals = out.intervals();
    const int sub = config.substeps_per_observation;
    const double dt = config.integration_step();
    const double sqrt_dt = std::sqrt(dt);

    std::mt19937_64 rng(path_stream_seed(config.seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)));
    std::normal_distribution<double> normal(0.0, 1.0);

    Eigen::VectorXd x = out.initial_states()[static_cast<std::size_t>(i)];
    Eigen::VectorXd next(d), f(d), dw(l);
    Eigen::MatrixXd b(d, l);
    out.set_state(i, j, 0, x);

    for (int k = 1; k <= intervals; ++k) {
        for (int s = 0; s < sub; ++s) {
            model.drift(x, f);
            model.diffusion(x, b);
            for (int r = 0; r < l; ++r) dw[r] = normal(rng) * sqrt_dt;
            next.noalias() = x + f * dt;
            next.noalias() += b * dw;
            if (!next.allFinite())
                throw IntegrationDiverged(static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                                          static_cast<std::size_t>((k - 1) * sub + s + 1));
            if (!domain.is_interior(next)) {
                const Eigen::VectorXd hit = domain.boundary_crossing(x, next);
                for (int kk = k; kk <= intervals; ++kk) out.set_state(i, j, kk, hit);
                out.set_stop(i, j, k, true, hit);
                return;
            }
            x.swap(next);
        }
        out.set_state(i, j, k, x);
    }
    out.set_stop(i, j, intervals, false, x);
}

}  // namespace

TrajectoryEnsemble simulate_paths(const SdeModel& model, const Domain& domain,
                                  const std::vector<Eigen::VectorXd>& initial_states, int paths_per_state,
                                  const SimConfig& config, int threads) {
    if (domain.dim() != model.dim) throw DimensionError("model and domain dimensions differ");
    if (!model.drift || !model.diffusion) throw ConfigError("model '" + model.name + "' lacks drift or diffusion");
    for (const auto& x : initial_states) {
        if (x.size() != model.dim) throw DimensionError("initial state dimension mismatch");
        if (!domain.is_interior(x)) throw ConfigError("initial states must lie strictly inside the domain");
    }
    TrajectoryEnsemble ensemble(model.dim, config, initial_states, paths_per_state);
    const int m = ensemble.num_initial();
    const int workers = std::clamp(threads, 1, m);

    if (workers == 1) {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < paths_per_state; ++j) simulate_one(model, domain, config, i, j, ensemble);
        return ensemble;
    }

    // Each worker owns a contiguous block of initial states; the first failure by index wins.
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(workers));
    {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                const int begin = static_cast<int>(static_cast<long long>(m) * w / workers);
                const int end = static_cast<int>(static_cast<long long>(m) * (w + 1) / workers);
                try {
                    for (int i = begin; i < end; ++i)
                        for (int j = 0; j < paths_per_state; ++j) simulate_one(model, domain, config, i, j, ensemble);
                } catch (...) {
                    failures[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        }
    }
    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);
    return ensemble;
}

TrajectoryEnsemble subsample(const TrajectoryEnsemble& ensemble, int factor) {
    if (factor < 1 || ensemble.intervals() % factor != 0)
        throw ConfigError("subsampling factor must divide the number of intervals");
    SimConfig cfg = ensemble.config();
    cfg.rate /= factor;
    cfg.substeps_per_observation *= factor;
    TrajectoryEnsemble out(ensemble.dim(), cfg, ensemble.initial_states(), ensemble.paths_per_state());
    const int intervals = ensemble.intervals() / factor;
    for (int i = 0; i < ensemble.num_initial(); ++i)
        for (int j = 0; j < ensemble.paths_per_state(); ++j) {
            for (int k = 0; k <= intervals; ++k) out.set_state(i, j, k, ensemble.state(i, j, k * factor));
            const int stop = (ensemble.stop_index(i, j) + factor - 1) / factor;
            out.set_stop(i, j, stop, ensemble.exited(i, j), ensemble.stopped_value(i, j));
        }
    return out;
}

}  // namespace rtedmd
