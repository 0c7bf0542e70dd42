#include "doctest.h"

#include "volrec/dgp.hpp"
#include "volrec/error.hpp"

#include <Eigen/Eigenvalues>

using namespace volrec;
using namespace volrec::dgp;

namespace {

double mean_offdiag(const Matrix& g) {
    double s = 0.0;
    const auto n = g.rows();
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j + 1; i < n; ++i) {
            s += g(i, j);
        }
    }
    return s / static_cast<double>(n * (n - 1) / 2);
}

// Vectorized fourth-order companion for the full BEKK recursion written out
// directly on vec(Sigma) without the duplication matrices.
double fbekk_vec_radius(const Matrix& a, const Matrix& b) {
    return Eigen::EigenSolver<Matrix>(mat::kron(a, a) + mat::kron(b, b), false).eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("sbekk sampler ranges and positive CC'") {
    Rng rng(11);
    for (int k = 0; k < 1000; ++k) {
        const auto p = sample_sbekk_params(9, rng);
        CHECK(p.alpha >= 0.05);
        CHECK(p.alpha <= 0.20);
        CHECK(p.beta >= 0.70);
        CHECK(p.beta <= 0.95);
        CHECK(p.alpha + p.beta < 1.0);
        CHECK(mat::min_eigenvalue(p.c * p.c.transpose()) > 0.0);
        CHECK(p.c.isLowerTriangular());
        CHECK(p.c.diagonal().minCoeff() >= 0.05);
    }
}

TEST_CASE("samplers are seed deterministic") {
    Rng a(5, 3), b(5, 3);
    const auto p = sample_sbekk_params(9, a);
    const auto q = sample_sbekk_params(9, b);
    CHECK(p.alpha == q.alpha);
    CHECK(p.c == q.c);

    Rng c(5, 3), d(5, 3);
    CHECK(sample_fbekk_params(9, c).a == sample_fbekk_params(9, d).a);
    CHECK(sample_dcc_params(9, c).gamma == sample_dcc_params(9, d).gamma);
    CHECK(sample_edcc_params(9, c).a == sample_edcc_params(9, d).a);
}

TEST_CASE("fbekk sampler: block diagonal B and eigen test") {
    Rng rng(12);
    for (int k = 0; k < 200; ++k) {
        const auto p = sample_fbekk_params(9, rng);
        CHECK(models::stationarity_check(p).ok);
        // The vec form has the same nonzero spectrum as the vech form.
        CHECK(fbekk_vec_radius(p.a, p.b) < 1.0);
        CHECK(p.a.minCoeff() >= 0.0);
        CHECK(p.a.maxCoeff() <= 0.10);
        for (Eigen::Index j = 0; j < 9; ++j) {
            for (Eigen::Index i = 0; i < 9; ++i) {
                if (i / 3 != j / 3) {
                    CHECK(p.b(i, j) == 0.0);
                } else if (i == j) {
                    CHECK(p.b(i, j) >= 0.70);
                    CHECK(p.b(i, j) <= 0.95);
                } else {
                    CHECK(p.b(i, j) <= 0.10);
                }
            }
        }
    }
    CHECK_THROWS_AS(sample_fbekk_params(8, rng), InvalidInput);
}

TEST_CASE("dcc sampler ranges") {
    Rng rng(13);
    for (int k = 0; k < 1000; ++k) {
        const auto p = sample_dcc_params(9, rng);
        CHECK(p.theta1 >= 0.05);
        CHECK(p.theta1 <= 0.30);
        CHECK(p.theta2 >= 0.70);
        CHECK(p.theta2 <= 0.85);
        CHECK(p.theta1 + p.theta2 < 1.0);
        for (const auto& m : p.marginals) {
            CHECK(m.alpha >= 0.05);
            CHECK(m.alpha <= 0.15);
            CHECK(m.beta >= 0.70);
            CHECK(m.beta <= 0.85);
            CHECK(m.omega > 0.0);
            CHECK(m.stationary());
        }
    }
}

TEST_CASE("gen_gamma properties") {
    Rng rng(14);
    double total = 0.0;
    constexpr int draws = 1000;
    for (int k = 0; k < draws; ++k) {
        const Matrix g = gen_gamma(9, rng);
        CHECK((g.diagonal().array() == 1.0).all());
        CHECK(mat::max_asymmetry(g) == 0.0);
        CHECK(mat::min_eigenvalue(g) > 1e-10);
        CHECK(g.cwiseAbs().maxCoeff() <= 1.0);
        total += mean_offdiag(g);
    }
    // Monte Carlo oracle for the recipe (numpy, 20000 draws): mean 0.0568,
    // per-draw sd 0.0726, so the 1000-draw mean has sd 0.0023.
    CHECK(std::abs(total / draws - 0.0568) < 0.01);
}

TEST_CASE("edcc sampler ranges and eigen test") {
    Rng rng(15);
    for (int k = 0; k < 1000; ++k) {
        const auto p = sample_edcc_params(9, rng);
        const Matrix ab = p.a + p.b_matrix();
        CHECK(Eigen::EigenSolver<Matrix>(ab, false).eigenvalues().cwiseAbs().maxCoeff() < 1.0);
        CHECK(models::stationarity_check(p).ok);
        for (Eigen::Index j = 0; j < 9; ++j) {
            CHECK(p.b(j) >= 0.70);
            CHECK(p.b(j) <= 0.85);
            CHECK(p.nu(j) > 0.0);
            for (Eigen::Index i = 0; i < 9; ++i) {
                CHECK(p.a(i, j) >= 0.0);
                CHECK(p.a(i, j) <= (i == j ? 0.2 : 0.02));
            }
        }
    }
}

TEST_CASE("fixed 24-asset designs") {
    Rng rng(16);
    const auto sb = std::get<models::SBekkParams>(fixed_params_24(models::ModelClass::SBekk, rng));
    CHECK(sb.alpha == 0.15);
    CHECK(sb.beta == 0.80);
    CHECK(sb.dim() == 24);

    const auto fb = std::get<models::FBekkParams>(fixed_params_24(models::ModelClass::FBekk, rng));
    CHECK(fb.b(0, 1) == 0.05);
    CHECK(fb.b(0, 0) == 0.80);
    CHECK(fb.b(0, 3) == 0.0);
    CHECK(fb.b(23, 23) == 0.80);
    CHECK(fb.a(0, 0) == 0.025);
    CHECK(fb.a(7, 8) == 0.0125);
    CHECK(fb.a(0, 16) == 0.0);
    CHECK(fb.a(16, 0) == 0.0187);
    CHECK(fb.a(23, 23) == 0.0312);
    CHECK(models::stationarity_check(fb).ok);

    const auto dc = std::get<models::DccParams>(fixed_params_24(models::ModelClass::Dcc, rng));
    CHECK(dc.theta1 == 0.15);
    CHECK(dc.theta2 == 0.80);
    CHECK(dc.marginals.size() == 24);
    CHECK(dc.marginals[5].alpha == 0.15);
    CHECK(dc.marginals[5].beta == 0.80);

    const auto ed = std::get<models::EdccParams>(fixed_params_24(models::ModelClass::Edcc, rng));
    CHECK(ed.a(0, 0) == 0.08);
    CHECK(ed.a(3, 7) == 0.05);
    CHECK(ed.b(2) == 0.80);
    // As displayed this design has spectral radius 0.08 + 0.80 + 23 * 0.05.
    const auto report = models::stationarity_check(ed);
    CHECK_FALSE(report.ok);
    CHECK(report.value == doctest::Approx(2.03));
}

TEST_CASE("weights") {
    Rng rng(17);
    const Vector eq = make_weights(WeightScheme::Equal, 4, rng);
    CHECK(eq == Vector::Constant(4, 0.25));
    const Vector nine = make_weights(WeightScheme::Equal, 9, rng);
    CHECK((nine.array() == 1.0 / 9.0).all());
    for (int k = 0; k < 100; ++k) {
        const Vector w = make_weights(WeightScheme::Random, 9, rng);
        CHECK(std::abs(w.sum() - 1.0) < 1e-12);
        CHECK(w.minCoeff() > 0.0);
    }
    CHECK_THROWS_AS(make_weights(WeightScheme::Equal, 0, rng), InvalidInput);
    CHECK(weight_scheme_from_string("random") == WeightScheme::Random);
}

TEST_CASE("build_dataset splits and portfolio returns") {
    DgpSpec spec;
    spec.model = models::ModelClass::Dcc;
    spec.weights = WeightScheme::Random;
    Rng a(99, 1);
    const auto ds = build_dataset(spec, a);
    CHECK(ds.train_returns.rows() == 500);
    CHECK(ds.test_returns.rows() == 250);
    CHECK(ds.train_cov.size() == 500);
    CHECK(ds.test_cov.size() == 250);
    CHECK(std::abs(ds.weights.sum() - 1.0) < 1e-12);
    for (Eigen::Index t = 0; t < 250; ++t) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < 9; ++i) {
            s += ds.weights(i) * ds.test_returns(t, i);
        }
        CHECK(std::abs(ds.portfolio_test(t) - s) < 1e-12);
    }

    // Same stream reproduces the dataset bit for bit.
    Rng b(99, 1);
    const auto again = build_dataset(spec, b);
    CHECK(again.train_returns == ds.train_returns);
    CHECK(again.test_cov.back() == ds.test_cov.back());

    // Burn-in rows are dropped: with no burn-in the draws shift.
    spec.burn_in = 0;
    Rng c(99, 1);
    const auto noburn = build_dataset(spec, c);
    CHECK(noburn.train_returns.row(100) == ds.train_returns.row(0));

    spec.burn_in = 100;
    spec.model = models::ModelClass::Edcc;
    spec.n_assets = 24;
    Rng d(1);
    CHECK_THROWS_AS(build_dataset(spec, d), ConfigurationError);
}
