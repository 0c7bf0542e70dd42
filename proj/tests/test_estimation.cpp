#include "doctest.h"

#include "volrec/error.hpp"
#include "volrec/estimation.hpp"

#include <cmath>

using namespace volrec;
using namespace volrec::models;

TEST_CASE("persistence transform round trip") {
    const auto [u1, u2] = from_persistence(0.15, 0.8);
    const auto [a, b] = to_persistence(u1, u2);
    CHECK(a == doctest::Approx(0.15).epsilon(1e-14));
    CHECK(b == doctest::Approx(0.8).epsilon(1e-14));
    const auto [x, y] = to_persistence(800.0, -800.0);
    CHECK(x + y < 1.0 + 1e-15);
    CHECK(std::isfinite(x));
    CHECK_THROWS_AS(from_persistence(0.5, 0.5), InvalidInput);
}

TEST_CASE("GARCH(1,1) QML recovers the generating parameters") {
    const Garch11Params truth{0.1, 0.1, 0.8};
    Rng rng(101);
    const Vector r = simulate(truth, 20000, rng).returns.col(0);
    const auto fit = garch11_fit(r);
    CHECK(std::abs(fit.params.alpha - truth.alpha) < 0.05);
    CHECK(std::abs(fit.params.beta - truth.beta) < 0.05);
    CHECK(fit.params.alpha + fit.params.beta < 1.0);
    const double v0 = r.squaredNorm() / static_cast<double>(r.size());
    CHECK(fit.loglik >= garch11_filter(truth, r, v0).loglik);

    // Gradient of the average log-likelihood vanishes at the optimum.
    auto ll = [&](const Vector& x) { return garch11_filter({x(0), x(1), x(2)}, r, v0).loglik / 20000.0; };
    const Vector g = optim::numerical_gradient(ll, Vector{{fit.params.omega, fit.params.alpha, fit.params.beta}});
    CHECK(g.cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("GARCH(1,1) fit rejects degenerate data") {
    CHECK_THROWS_AS(garch11_fit(Vector::Zero(200)), EstimationFailure);
    CHECK_THROWS_AS(garch11_fit(Vector::Ones(10)), InvalidInput);
}

TEST_CASE("scalar BEKK QML") {
    SBekkParams truth;
    truth.c = Matrix{{0.3, 0, 0}, {0.05, 0.25, 0}, {-0.02, 0.04, 0.2}};
    truth.alpha = 0.15;
    truth.beta = 0.8;
    Rng rng(202);
    const Matrix r = simulate(truth, 20000, rng).returns;
    const auto fit = sbekk_fit(r);
    CHECK(std::abs(fit.params.alpha - 0.15) < 0.05);
    CHECK(std::abs(fit.params.beta - 0.8) < 0.05);
    CHECK(fit.params.alpha + fit.params.beta < 1.0);
}

TEST_CASE("scalar BEKK with one asset agrees with GARCH(1,1)") {
    Rng rng(203);
    const Matrix r = simulate(Garch11Params{0.05, 0.1, 0.85}, 5000, rng).returns;
    const auto b = sbekk_fit(r);
    const auto g = garch11_fit(r.col(0));
    // Targeting ties the BEKK intercept to the sample moment, so agreement is
    // within sampling error rather than optimizer tolerance.
    CHECK(std::abs(b.params.alpha - g.params.alpha) < 0.02);
    CHECK(std::abs(b.params.beta - g.params.beta) < 0.03);
}

TEST_CASE("DCC QML") {
    DccParams truth;
    truth.marginals = {{0.05, 0.1, 0.85}, {0.1, 0.05, 0.9}, {0.02, 0.15, 0.8}};
    truth.gamma = Matrix{{1, 0.4, 0.2}, {0.4, 1, 0.3}, {0.2, 0.3, 1}};
    truth.theta1 = 0.15;
    truth.theta2 = 0.8;
    Rng rng(303);
    const Matrix r = simulate(truth, 20000, rng).returns;
    const auto fit = dcc_fit(r);
    CHECK(std::abs(fit.params.theta1 - 0.15) < 0.05);
    CHECK(std::abs(fit.params.theta2 - 0.8) < 0.05);
    CHECK((fit.params.gamma.diagonal().array() == 1.0).all());
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::abs(fit.params.marginals[i].alpha - truth.marginals[i].alpha) < 0.05);
        CHECK(std::abs(fit.params.marginals[i].beta - truth.marginals[i].beta) < 0.05);
    }
}

TEST_CASE("DCC on i.i.d. data finds no correlation dynamics") {
    Rng rng(304);
    Matrix r(3000, 3);
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        r.data()[i] = rng.normal();
    }
    const auto fit = dcc_fit(r);
    CHECK(fit.params.theta1 < 0.03);
}

TEST_CASE("DCC fit tags the failing asset") {
    Rng rng(305);
    Matrix r(300, 3);
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        r.data()[i] = rng.normal();
    }
    r.col(1).setZero();
    try {
        (void)dcc_fit(r);
        FAIL("expected EstimationFailure");
    } catch (const EstimationFailure& e) {
        CHECK(e.asset() == 1);
        CHECK(e.stage() == "marginal");
    }
}

TEST_CASE("EDCC QML") {
    EdccParams truth;
    truth.nu = Vector{{0.05, 0.08, 0.03}};
    truth.a = Matrix{{0.10, 0.02, 0.01}, {0.015, 0.08, 0.0}, {0.0, 0.02, 0.12}};
    truth.b = Vector{{0.82, 0.85, 0.8}};
    truth.gamma = Matrix{{1, 0.4, 0.2}, {0.4, 1, 0.3}, {0.2, 0.3, 1}};
    truth.theta1 = 0.1;
    truth.theta2 = 0.85;
    Rng rng(404);
    const Matrix r = simulate(truth, 20000, rng).returns;
    const auto fit = edcc_fit(r);
    for (Eigen::Index i = 0; i < 3; ++i) {
        CHECK(std::abs(fit.params.a(i, i) - truth.a(i, i)) < 0.05);
        CHECK(std::abs(fit.params.b(i) - truth.b(i)) < 0.05);
        for (Eigen::Index j = 0; j < 3; ++j) {
            CHECK(fit.params.a(i, j) >= 0.0);
            if (i != j) {
                CHECK(std::abs(fit.params.a(i, j) - truth.a(i, j)) < 0.02);
            }
        }
    }
    CHECK(std::abs(fit.params.theta1 - 0.1) < 0.05);
    CHECK(std::abs(fit.params.theta2 - 0.85) < 0.05);
    CHECK((fit.params.nu.array() > 0.0).all());

    // The stage-one objective evaluated directly agrees with the filter.
    const Vector v0 = r.cwiseAbs2().colwise().mean().transpose();
    const double ll = edcc_variance_loglik(fit.params.nu, fit.params.a, fit.params.b, r, v0);
    double oracle = 0.0;
    const auto f = edcc_filter(fit.params, r, DccInit{v0, fit.params.gamma});
    for (Eigen::Index t = 0; t < r.rows(); ++t) {
        for (Eigen::Index i = 0; i < 3; ++i) {
            const double h = f.variances(t, i);
            oracle += -0.5 * (std::log(2.0 * M_PI) + std::log(h) + r(t, i) * r(t, i) / h);
        }
    }
    CHECK(ll == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("FBEKK estimation is not offered") {
    CHECK_THROWS_AS(fit_multivariate(ModelClass::FBekk, Matrix::Ones(200, 2)), InvalidInput);
}
