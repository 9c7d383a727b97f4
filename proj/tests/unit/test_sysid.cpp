#include <doctest.h>

#include <cmath>

#include "rtedmd/errors.hpp"
#include "rtedmd/sysid.hpp"

using namespace rtedmd;

namespace {

// Generator columns built from symbolic images; terms outside the dictionary are cut.
GeneratorMatrix symbolic_generator(const Dictionary& dict, const SdeModel& model) {
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(dict.size(), dict.size());
    for (int n = 0; n < dict.size(); ++n) {
        const Polynomial img = generator_image(Polynomial::monomial(dict.exponent(n)), *model.polynomial);
        for (const auto& [alpha, c] : img.terms())
            if (auto m = dict.index_of(alpha)) l(*m, n) = c;
    }
    return GeneratorMatrix(l, dict, Provenance::Analytic);
}

IdentifiedModel ou_identified(double mu, double sigma) {
    return identify(analytic_generator(monomials_up_to_degree(1, 2, true), ornstein_uhlenbeck(mu, sigma)));
}

SimConfig sim(std::uint64_t seed) { return SimConfig{2.0, 100.0, 10, seed}; }

}  // namespace

TEST_CASE("OU drift and diffusion from the analytic generator") {
    const IdentifiedModel m = ou_identified(-0.5, 0.02);
    CHECK(m.drift.rows() == 1);
    CHECK(m.drift(0, 1) == doctest::Approx(-0.5));
    CHECK(m.drift(0, 0) == 0.0);
    CHECK(m.drift(0, 2) == 0.0);
    CHECK(m.covariance_coeffs(0, 0)[0] == doctest::Approx(4e-4).epsilon(1e-12));
    CHECK(std::abs(m.covariance_coeffs(0, 0)[1]) < 1e-15);
    CHECK(std::abs(m.covariance_coeffs(0, 0)[2]) < 1e-15);
    CHECK(m.drift_at(Eigen::VectorXd::Constant(1, 2.0))[0] == doctest::Approx(-1.0));
}

TEST_CASE("LV drift and diffusion from symbolic images") {
    const SdeModel lv = lotka_volterra({});
    const IdentifiedModel m = identify(symbolic_generator(monomials_up_to_degree(2, 4, false), lv));
    const auto f = m.drift_polynomials();
    const auto& truth = lv.polynomial->drift;
    for (int i = 0; i < 2; ++i) {
        CHECK((f[static_cast<std::size_t>(i)] - truth[static_cast<std::size_t>(i)]).terms().size() == 0);
    }
    const auto cov = m.covariance_polynomials();
    CHECK(cov[0][0].coefficient({2, 0}) == doctest::Approx(0.0025));
    CHECK(cov[1][1].coefficient({0, 2}) == doctest::Approx(0.0025));
    for (const auto& [alpha, c] : cov[0][1].terms()) CHECK(std::abs(c) < 1e-14);
    const Eigen::Vector2d x(2.0, 3.0);
    CHECK((m.covariance_at(x) - lv.covariance_at(x)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((m.drift_at(x) - lv.drift_at(x)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("missing observables") {
    const SdeModel ou = ornstein_uhlenbeck(-0.5, 0.0);
    // No x: the drift cannot be read off.
    CHECK_THROWS_AS(identify(GeneratorMatrix(Eigen::MatrixXd::Zero(2, 2), Dictionary(1, {{2}, {3}}), Provenance::Analytic)),
                    DictionaryError);
    // No x^2: the diffusion cannot be read off.
    CHECK_THROWS_AS(identify(analytic_generator(Dictionary(1, {{1}, {3}}), ou)), DictionaryError);
}

TEST_CASE("covariance checks and square roots") {
    IdentifiedModel m = ou_identified(-0.5, 0.02);
    CHECK(check_covariance(m, {Eigen::VectorXd::Constant(1, 0.5)}).ok());
    m.diffusion[0][0] = -0.1;
    const PsdReport bad = check_covariance(m, {Eigen::VectorXd::Constant(1, 0.5), Eigen::VectorXd::Constant(1, 1.0)});
    CHECK_FALSE(bad.ok());
    CHECK(bad.failing_points == 2);
    CHECK(bad.min_eigenvalue == doctest::Approx(-0.1));

    double clamped = 0.0;
    const Eigen::MatrixXd root = covariance_sqrt(Eigen::Matrix2d(Eigen::Vector2d(4.0, -1.0).asDiagonal()), &clamped);
    CHECK(root(0, 0) == doctest::Approx(2.0));
    CHECK(root(1, 1) == 0.0);
    CHECK(clamped == doctest::Approx(1.0));
    Eigen::Matrix2d spd;
    spd << 2, 1, 1, 2;
    const Eigen::MatrixXd s = covariance_sqrt(spd);
    CHECK((s * s - spd).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("reconstruction under the same noise") {
    const Domain d = Domain::ball(1, 2.0);
    const std::vector<Eigen::VectorXd> starts{Eigen::VectorXd::Constant(1, 1.0)};
    const auto reference = simulate_paths(ornstein_uhlenbeck(-0.5, 0.02), d, starts, 200, sim(31));

    const PathwiseError same = pathwise_error(reference, reconstruct_paths(ou_identified(-0.5, 0.02), d, starts, 200, sim(31)));
    CHECK(same.max_abs <= 1e-12);

    // With shared increments the mean gap is the deterministic one, x0 |e^{-0.49 t} - e^{-0.5 t}|.
    const PathwiseError off = pathwise_error(reference, reconstruct_paths(ou_identified(-0.49, 0.02), d, starts, 200, sim(31)));
    REQUIRE(off.mean_abs_by_time.size() == 201);
    for (int k = 0; k <= 200; k += 20) {
        const double t = k / 100.0;
        CHECK(std::abs(off.mean_abs_by_time[k] - std::abs(std::exp(-0.49 * t) - std::exp(-0.5 * t))) < 1e-4);
    }
    const PathwiseError twice = pathwise_error(reference, reconstruct_paths(ou_identified(-0.48, 0.02), d, starts, 200, sim(31)));
    const double ratio = twice.mean_abs / off.mean_abs;
    CHECK(ratio >= 1.9);
    CHECK(ratio <= 2.1);

    const auto other = simulate_paths(ornstein_uhlenbeck(-0.5, 0.02), d, starts, 100, sim(31));
    CHECK_THROWS_AS(pathwise_error(reference, other), DimensionError);
}
