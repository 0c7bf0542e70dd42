#include "doctest.h"

#include "volrec/error.hpp"
#include "volrec/qp.hpp"
#include "volrec/rng.hpp"

using namespace volrec;

namespace {

Matrix draw(Eigen::Index r, Eigen::Index c, Rng& rng) {
    Matrix x(r, c);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        x.data()[i] = rng.normal();
    }
    return x;
}

/// KKT oracle: feasibility, dual feasibility, complementary slackness and
/// stationarity G x + g = E lambda + I u.
double kkt_error(const qp::Problem& p, const qp::Solution& s) {
    double e = 0.0;
    if (p.eq.cols() > 0) {
        e = std::max(e, (p.eq.transpose() * s.x + p.eq0).cwiseAbs().maxCoeff());
    }
    if (p.ineq.cols() > 0) {
        const Vector slack = p.ineq.transpose() * s.x + p.ineq0;
        e = std::max(e, std::max(0.0, -slack.minCoeff()));
        e = std::max(e, std::max(0.0, -s.ineq_multipliers.minCoeff()));
        e = std::max(e, slack.cwiseProduct(s.ineq_multipliers).cwiseAbs().maxCoeff());
    }
    Vector stat = p.g_mat * s.x + p.g_vec;
    if (p.eq.cols() > 0) {
        stat -= p.eq * s.eq_multipliers;
    }
    if (p.ineq.cols() > 0) {
        stat -= p.ineq * s.ineq_multipliers;
    }
    return std::max(e, stat.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("qp: unconstrained and box cases by hand") {
    qp::Problem p;
    p.g_mat = 2.0 * Matrix::Identity(2, 2);
    p.g_vec = Vector{{-2.0, -8.0}};  // minimum at (1, 4)
    p.eq.resize(2, 0);
    p.eq0.resize(0);
    p.ineq.resize(2, 0);
    p.ineq0.resize(0);
    CHECK((qp::solve(p).x - Vector{{1.0, 4.0}}).cwiseAbs().maxCoeff() < 1e-14);

    // x2 <= 2 becomes active.
    p.ineq = Matrix{{0.0}, {-1.0}};
    p.ineq0 = Vector{{2.0}};
    const auto s = qp::solve(p);
    CHECK(s.x(0) == doctest::Approx(1.0));
    CHECK(s.x(1) == doctest::Approx(2.0));
    CHECK(s.ineq_multipliers(0) == doctest::Approx(4.0));

    // Equality x1 + x2 = 1 on top.
    p.eq = Matrix{{1.0}, {1.0}};
    p.eq0 = Vector{{-1.0}};
    const auto e = qp::solve(p);
    CHECK(e.x.sum() == doctest::Approx(1.0));
    CHECK(kkt_error(p, e) < 1e-12);

    // Contradictory bounds.
    p.eq.resize(2, 0);
    p.eq0.resize(0);
    p.ineq = Matrix{{1.0, -1.0}, {0.0, 0.0}};
    p.ineq0 = Vector{{-3.0, 2.0}};  // x1 >= 3 and x1 <= 2
    CHECK_THROWS_AS(qp::solve(p), InfeasibleReconciliation);
}

TEST_CASE("qp: random strictly convex problems satisfy KKT") {
    Rng rng(77);
    for (int rep = 0; rep < 300; ++rep) {
        const auto n = static_cast<Eigen::Index>(2 + rng.index(12));
        const auto me = static_cast<Eigen::Index>(rng.index(3));
        const auto mi = static_cast<Eigen::Index>(rng.index(2 * static_cast<std::uint64_t>(n)));
        const Matrix a = draw(n, n, rng);
        qp::Problem p;
        p.g_mat = a * a.transpose() + 0.1 * Matrix::Identity(n, n);
        p.g_vec = draw(n, 1, rng);
        p.eq = draw(n, me, rng);
        p.eq0 = draw(me, 1, rng);
        p.ineq = draw(n, mi, rng);
        // Keep the feasible set non-empty: slack >= 0.5 at a known point x0.
        const Vector x0 = draw(n, 1, rng);
        p.eq0 = -p.eq.transpose() * x0;
        p.ineq0 = -p.ineq.transpose() * x0 + Vector::Constant(mi, 0.5);
        const auto s = qp::solve(p);
        const double scale = 1.0 + s.x.lpNorm<Eigen::Infinity>() + s.ineq_multipliers.lpNorm<Eigen::Infinity>() +
                             s.eq_multipliers.lpNorm<Eigen::Infinity>();
        REQUIRE(kkt_error(p, s) < 1e-9 * scale * p.g_mat.norm());
    }
}

TEST_CASE("qp: rejects an indefinite Hessian") {
    qp::Problem p;
    p.g_mat = Matrix{{1.0, 0.0}, {0.0, -1.0}};
    p.g_vec = Vector::Zero(2);
    p.eq.resize(2, 0);
    p.eq0.resize(0);
    p.ineq.resize(2, 0);
    p.ineq0.resize(0);
    CHECK_THROWS_AS(qp::solve(p), NumericalFailure);
}
