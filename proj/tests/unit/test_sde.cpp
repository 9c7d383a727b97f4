#include <doctest.h>

#include <cmath>
#include <vector>

#include "rtedmd/errors.hpp"
#include "rtedmd/sde.hpp"

using namespace rtedmd;

namespace {

Eigen::VectorXd v1(double x) { return Eigen::VectorXd::Constant(1, x); }

SimConfig config(double horizon, double rate, int substeps = 1, std::uint64_t seed = 3) {
    SimConfig c;
    c.horizon = horizon;
    c.rate = rate;
    c.substeps_per_observation = substeps;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("zero dynamics stay put") {
    const auto ens = simulate_paths(zero_dynamics(1), Domain::ball(1, 2.0), {v1(0.3)}, 4, config(1.0, 10.0));
    for (int j = 0; j < 4; ++j) {
        CHECK(ens.stop_index(0, j) == 10);
        CHECK_FALSE(ens.exited(0, j));
        for (int k = 0; k <= 10; ++k) CHECK(ens.state(0, j, k)[0] == 0.3);
    }
}

TEST_CASE("one explicit Euler step of f(x) = -x") {
    const SdeModel decay = polynomial_model("decay", {Polynomial::coordinate(1, 0, -1.0)}, {{Polynomial(1)}});
    const auto ens = simulate_paths(decay, Domain::ball(1, 2.0), {v1(1.0)}, 1, config(0.01, 100.0));
    CHECK(ens.state(0, 0, 1)[0] == 0.99);
}

TEST_CASE("OU ensemble mean matches the exact and the Euler-Maruyama means") {
    const double mu = -0.5, sigma = 0.02;
    const int paths = 10000;
    const double var = sigma * sigma * std::expm1(2 * mu) / (2 * mu);
    const double se = std::sqrt(var / paths);

    auto mean_at_end = [&](int substeps) {
        const auto ens = simulate_paths(ornstein_uhlenbeck(mu, sigma), Domain::ball(1, 2.0), {v1(1.0)}, paths,
                                        config(1.0, 100.0, substeps, 11));
        double s = 0.0;
        for (int j = 0; j < paths; ++j) s += ens.state(0, j, 100)[0];
        return s / paths;
    };

    // One step per observation: the scheme's own mean (1 + mu h)^100 is the oracle.
    CHECK(std::abs(mean_at_end(1) - std::pow(1.0 + mu * 0.01, 100)) <= 3 * se);
    // Ten substeps shrink the scheme bias below the Monte-Carlo error.
    CHECK(std::abs(mean_at_end(10) - std::exp(-0.5)) <= 3 * se);
}

TEST_CASE("apply_stopping on hand-made paths") {
    const Domain line = Domain::ball(1, 2.0);
    std::vector<Eigen::VectorXd> path{v1(1.9), v1(2.1)};
    StopResult r = apply_stopping(path, line);
    CHECK(r.stop_index == 1);
    CHECK(r.exited);
    CHECK(r.stopped_value[0] == doctest::Approx(2.0).epsilon(1e-12));

    std::vector<Eigen::VectorXd> inside{v1(0.0), v1(0.5), v1(-1.0)};
    r = apply_stopping(inside, line);
    CHECK(r.stop_index == 2);
    CHECK_FALSE(r.exited);

    const Domain disc = Domain::ball(2, 1.0);
    std::vector<Eigen::VectorXd> seg{Eigen::Vector2d(0.8, 0.0), Eigen::Vector2d(1.2, 0.0)};
    r = apply_stopping(seg, disc);
    CHECK(r.stop_index == 1);
    CHECK(r.stopped_value[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(r.stopped_value[1]) < 1e-15);
    CHECK(disc.on_boundary(r.stopped_value));
}

TEST_CASE("box crossing takes the first face hit") {
    const Domain box = Domain::box(Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(1.0, 1.0));
    const Eigen::VectorXd hit = box.boundary_crossing(Eigen::Vector2d(0.5, 0.9), Eigen::Vector2d(1.5, 1.3));
    // Leaves through y = 1 at s = 0.25 before reaching x = 1 at s = 0.5.
    CHECK(hit[0] == doctest::Approx(0.75));
    CHECK(hit[1] == doctest::Approx(1.0));
    CHECK(box.on_boundary(hit));
}

TEST_CASE("stopped paths are constant after the stop and sit on the boundary") {
    const Domain d = Domain::ball(1, 1.0);
    const auto ens = simulate_paths(ornstein_uhlenbeck(-0.1, 0.8), d, {v1(0.9), v1(-0.8)}, 50, config(2.0, 50.0, 4));
    int exits = 0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 50; ++j) {
            CHECK(ens.state(i, j, 0)[0] == ens.initial_states()[static_cast<std::size_t>(i)][0]);
            if (!ens.exited(i, j)) continue;
            ++exits;
            CHECK(d.on_boundary(ens.stopped_value(i, j), 1e-9));
            for (int k = ens.stop_index(i, j); k < ens.snapshots(); ++k)
                CHECK(ens.state(i, j, k)[0] == ens.stopped_value(i, j)[0]);
        }
    CHECK(exits > 0);
    CHECK(ens.exit_fraction() == doctest::Approx(exits / 100.0));
}

TEST_CASE("weak-order consistency: halving the step halves the deterministic error") {
    const SdeModel ode = ornstein_uhlenbeck(-0.5, 0.0);
    auto max_error = [&](int substeps) {
        const auto ens = simulate_paths(ode, Domain::ball(1, 2.0), {v1(1.0)}, 1, config(2.0, 10.0, substeps));
        double e = 0.0;
        for (int k = 0; k < ens.snapshots(); ++k)
            e = std::max(e, std::abs(ens.state(0, 0, k)[0] - std::exp(-0.5 * k / 10.0)));
        return e;
    };
    const double ratio = max_error(4) / max_error(8);
    CHECK(ratio >= 1.7);
    CHECK(ratio <= 2.3);
}

TEST_CASE("Monte-Carlo mean error decays like J^-1/2") {
    const double mu = -0.5, sigma = 0.02, h = 0.01;
    std::vector<Eigen::VectorXd> starts;
    for (int i = 0; i < 40; ++i) starts.push_back(v1(-0.9 + 1.8 * i / 39.0));
    std::vector<double> log_j, log_err;
    for (int paths : {100, 1000, 10000}) {
        const auto ens = simulate_paths(ornstein_uhlenbeck(mu, sigma), Domain::ball(1, 2.0), starts, paths,
                                        config(1.0, 100.0, 1, 5));
        double sq = 0.0;
        for (int i = 0; i < 40; ++i) {
            double s = 0.0;
            for (int j = 0; j < paths; ++j) s += ens.state(i, j, 100)[0];
            const double exact = starts[static_cast<std::size_t>(i)][0] * std::pow(1.0 + mu * h, 100);
            sq += std::pow(s / paths - exact, 2);
        }
        log_j.push_back(std::log(paths));
        log_err.push_back(0.5 * std::log(sq / 40));
    }
    const double mx = (log_j[0] + log_j[1] + log_j[2]) / 3, my = (log_err[0] + log_err[1] + log_err[2]) / 3;
    double num = 0, den = 0;
    for (int k = 0; k < 3; ++k) {
        num += (log_j[k] - mx) * (log_err[k] - my);
        den += (log_j[k] - mx) * (log_j[k] - mx);
    }
    const double slope = num / den;
    CHECK(slope >= -0.7);
    CHECK(slope <= -0.3);
}

TEST_CASE("simulation is deterministic and independent of the thread count") {
    const SdeModel lv = lotka_volterra({});
    const Domain box = Domain::box(Eigen::Vector2d(0.01, 0.01), Eigen::Vector2d(10, 10));
    std::vector<Eigen::VectorXd> starts{Eigen::Vector2d(2, 1), Eigen::Vector2d(3, 2), Eigen::Vector2d(4, 3)};
    const auto a = simulate_paths(lv, box, starts, 5, config(1.0, 20.0, 5, 9));
    const auto b = simulate_paths(lv, box, starts, 5, config(1.0, 20.0, 5, 9));
    const auto c = simulate_paths(lv, box, starts, 5, config(1.0, 20.0, 5, 9), 3);
    const auto d = simulate_paths(lv, box, starts, 5, config(1.0, 20.0, 5, 10));
    CHECK(a == b);
    CHECK(a == c);
    CHECK_FALSE(a == d);
}

TEST_CASE("subsampling equals direct simulation at the coarser rate") {
    const SdeModel ou = ornstein_uhlenbeck(-0.5, 0.6);
    const Domain d = Domain::ball(1, 1.0);
    const auto fine = simulate_paths(ou, d, {v1(0.8)}, 30, config(2.0, 100.0, 2));
    const auto direct = simulate_paths(ou, d, {v1(0.8)}, 30, config(2.0, 20.0, 10));
    CHECK(subsample(fine, 5) == direct);
    CHECK_THROWS_AS(subsample(fine, 3), ConfigError);
}

TEST_CASE("configuration errors") {
    CHECK_THROWS_AS(config(1.05, 10.0).intervals(), ConfigError);
    CHECK(config(0.3, 10.0).intervals() == 3);
    CHECK_THROWS_AS(simulate_paths(zero_dynamics(1), Domain::ball(1, 1.0), {v1(1.5)}, 1, config(1, 10)), ConfigError);
    CHECK_THROWS_AS(Domain::ball(1, -1.0), ConfigError);
}

TEST_CASE("divergence is reported with its coordinates") {
    const SdeModel blowup = polynomial_model("blowup", {Polynomial::monomial({5}, 50.0)}, {{Polynomial(1)}});
    try {
        simulate_paths(blowup, Domain::ball(1, 1e300), {v1(0.5), v1(1.5)}, 2, config(1.0, 100.0));
        FAIL("expected divergence");
    } catch (const IntegrationDiverged& e) {
        CHECK(e.initial_index() == 0);
        CHECK(e.path_index() == 0);
        CHECK(e.step() > 0);
    }
}
