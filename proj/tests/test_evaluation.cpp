#include "doctest.h"

#include "volrec/error.hpp"
#include "volrec/evaluation.hpp"
#include "volrec/rng.hpp"

#include <algorithm>
#include <cmath>

using namespace volrec;
using namespace volrec::eval;

TEST_CASE("loss points") {
    for (Loss l : kAllLosses) {
        CHECK(loss_series(Vector::Constant(5, 1.3), Vector::Constant(5, 1.3), l).isZero(0.0));
    }
    CHECK(loss_point(2.0, 1.0, Loss::Mse) == 1.0);
    CHECK(loss_point(2.0, 1.0, Loss::Mae) == 1.0);
    CHECK(loss_point(2.0, 1.0, Loss::Qlike) == doctest::Approx(2.0 - std::log(2.0) - 1.0));
    CHECK(loss_point(2.0, 1.0, Loss::Qlike) == doctest::Approx(0.3069).epsilon(1e-3));
    const double over = loss_point(1.0, 2.0, Loss::Qlike);
    const double under = loss_point(1.0, 0.5, Loss::Qlike);
    CHECK(over == doctest::Approx(0.1931).epsilon(1e-3));
    CHECK(over < under);
    CHECK_THROWS_AS(loss_point(1.0, 0.0, Loss::Qlike), InvalidInput);
    CHECK_THROWS_AS(loss_point(0.0, 1.0, Loss::Mse), InvalidInput);
    CHECK(loss_from_string("QLIKE") == Loss::Qlike);
}

TEST_CASE("qlike is nonnegative with equality only at the truth") {
    Rng rng(3);
    for (int k = 0; k < 10000; ++k) {
        const double s = std::exp(rng.normal(0.0, 2.0));
        const double h = std::exp(rng.normal(0.0, 2.0));
        CHECK(loss_point(s, h, Loss::Qlike) >= 0.0);
        CHECK(loss_point(s, s, Loss::Qlike) == 0.0);
    }
}

TEST_CASE("avg_rel") {
    Matrix one(1, 3);
    one << 2.0, 1.0, 0.5;
    const auto r1 = avg_rel(one, 0);
    CHECK(r1.values(0) == 1.0);
    CHECK(r1.values(1) == doctest::Approx(0.5));
    CHECK(r1.values(2) == doctest::Approx(0.25));

    Matrix constant_ratio(4, 2);
    constant_ratio << 1, 3, 2, 6, 0.5, 1.5, 10, 30;
    CHECK(avg_rel(constant_ratio, 0).values(1) == doctest::Approx(3.0));

    Rng rng(4);
    Matrix ind(50, 5);
    for (auto& x : ind.reshaped()) x = std::exp(rng.normal());
    const auto base = avg_rel(ind, 0);
    for (Eigen::Index x = 0; x < 5; ++x) {
        const auto rel = avg_rel(ind, x);
        CHECK(rel.values(x) == 1.0);
        for (Eigen::Index j = 0; j < 5; ++j) {
            CHECK(std::abs(rel.values(j) - base.values(j) / base.values(x)) < 1e-12);
        }
    }

    Matrix zero(2, 2);
    zero << 1, 0, 1, 1;
    const auto z = avg_rel(zero, 0);
    CHECK(z.floored == 1);
    CHECK(z.values(1) < 1e-100);
}

TEST_CASE("bartlett long-run variance by hand") {
    Vector d(4);
    d << 1, -1, 2, 0;  // mean 0.5, deviations 0.5 -1.5 1.5 -0.5
    const double g0 = (0.25 + 2.25 + 2.25 + 0.25) / 4;
    const double g1 = (-0.75 - 2.25 - 0.75) / 4;
    CHECK(bartlett_lrv(d, 0) == doctest::Approx(g0));
    CHECK(bartlett_lrv(d, 1) == doctest::Approx(g0 + 2 * 0.5 * g1));
}

TEST_CASE("dm test") {
    Rng rng(5);
    Vector a(250), b = Vector::Zero(250);
    for (auto& x : a) x = 1.0 + rng.normal(0.0, 1e-3);
    const auto r = dm_test(a, b, 0, 10);
    CHECK(r.pvalue_raw < 1e-10);
    CHECK(r.stat > 0.0);
    const auto rev = dm_test(b, a, 0, 10);
    CHECK(rev.stat == -r.stat);
    CHECK_THROWS_AS(dm_test(a, a, 0), DegenerateVariance);
    CHECK_THROWS_AS(dm_test(a.head(9), b.head(9), 0), InvalidInput);

    // Direct formula on a small series.
    Vector x(10), y = Vector::Zero(10);
    x << 0.3, -0.1, 0.4, 0.2, -0.5, 0.9, 0.1, 0.0, 0.6, -0.2;
    const double mean = x.mean();
    const double lrv = bartlett_lrv(x, 2);
    const auto f = dm_test(x, y, 2, 3);
    CHECK(f.stat == doctest::Approx(mean / std::sqrt(lrv / 10.0)));
    CHECK(f.pvalue_raw == doctest::Approx(std::erfc(std::abs(f.stat) / std::sqrt(2.0))));
    CHECK(f.pvalue_bonferroni == doctest::Approx(std::min(1.0, 3 * f.pvalue_raw)));
    CHECK(f.pvalue_bonferroni >= f.pvalue_raw);
}

TEST_CASE("dm test size under the null") {
    Rng rng(6);
    int rejections = 0;
    constexpr int runs = 10000;
    Vector a(250), b = Vector::Zero(250);
    for (int k = 0; k < runs; ++k) {
        for (auto& v : a) v = rng.normal();
        if (dm_test(a, b, 0).pvalue_raw < 0.05) ++rejections;
    }
    const double rate = static_cast<double>(rejections) / runs;
    CHECK(rate >= 0.035);
    CHECK(rate <= 0.065);
}

TEST_CASE("mcs: identical and constant losses") {
    Rng rng(7);
    Matrix l(250, 2);
    for (Eigen::Index t = 0; t < 250; ++t) l(t, 0) = l(t, 1) = std::abs(rng.normal());
    const auto r = mcs(l);
    CHECK(r.pvalues(0) == 1.0);
    CHECK(r.pvalues(1) == 1.0);
    for (const auto& inc : r.included) {
        CHECK(inc[0]);
        CHECK(inc[1]);
    }
    const auto c = mcs(Matrix::Constant(100, 4, 2.5));
    CHECK((c.pvalues.array() == 1.0).all());
}

TEST_CASE("mcs: shifted model is excluded, order invariance, nesting") {
    Rng rng(8);
    Matrix l(250, 4);
    for (Eigen::Index t = 0; t < 250; ++t) {
        const double base = std::abs(rng.normal());
        l(t, 0) = base + std::abs(rng.normal(0.0, 0.1));
        l(t, 1) = base + std::abs(rng.normal(0.0, 0.1));
        l(t, 2) = base + 10.0;
        l(t, 3) = base + std::abs(rng.normal(0.0, 0.3));
    }
    McsOptions o;
    o.seed = 42;
    const auto r = mcs(l, o);
    CHECK(r.pvalues(2) < 0.05);
    CHECK(r.pvalues.maxCoeff() == 1.0);
    CHECK(r.elimination.front() == 2);
    // p-values never decrease along the elimination order.
    for (std::size_t k = 1; k < r.elimination.size(); ++k) {
        CHECK(r.pvalues(r.elimination[k]) >= r.pvalues(r.elimination[k - 1]));
    }
    // A higher confidence level keeps every model a lower one keeps.
    for (std::size_t lv = 0; lv + 1 < r.levels.size(); ++lv) {
        for (std::size_t k = 0; k < 4; ++k) {
            if (r.included[lv][k]) CHECK(r.included[lv + 1][k]);
        }
    }

    const std::vector<Eigen::Index> perm{3, 0, 2, 1};
    Matrix lp(250, 4);
    for (Eigen::Index k = 0; k < 4; ++k) lp.col(k) = l.col(perm[static_cast<std::size_t>(k)]);
    const auto rp = mcs(lp, o);
    for (Eigen::Index k = 0; k < 4; ++k) {
        CHECK(rp.pvalues(k) == doctest::Approx(r.pvalues(perm[static_cast<std::size_t>(k)])).epsilon(1e-12));
    }
    CHECK_THROWS_AS(mcs(l.topRows(20), o), InvalidInput);
    CHECK_THROWS_AS(mcs(l.leftCols(1), o), InvalidInput);
}

TEST_CASE("noisy proxy") {
    Matrix sigma(2, 2);
    sigma << 2.0, 0.3, 0.3, 1.0;
    Vector r(2);
    r << 0.5, -1.0;
    CHECK(noisy_proxy(r, sigma, 0.0) == sigma);
    CHECK(noisy_proxy(r, sigma, 1.0) == r * r.transpose());
    Vector e1(2);
    e1 << 1.0, 0.0;
    const Matrix half = noisy_proxy(e1, Matrix::Identity(2, 2), 0.5);
    CHECK(half(0, 0) == 1.0);
    CHECK(half(1, 1) == 0.5);
    CHECK_THROWS_AS(noisy_proxy(r, sigma, 1.5), InvalidInput);

    const Matrix chol = mat::cholesky_lower(sigma);
    Rng rng(9);
    Matrix acc = Matrix::Zero(2, 2);
    constexpr int draws = 100000;
    for (int k = 0; k < draws; ++k) {
        Vector z(2);
        z << rng.normal(), rng.normal();
        acc += noisy_proxy(chol * z, sigma, 1.0);
    }
    acc /= draws;
    CHECK(std::abs(acc(0, 0) / sigma(0, 0) - 1.0) < 0.02);
    CHECK(std::abs(acc(1, 1) / sigma(1, 1) - 1.0) < 0.02);
    CHECK(std::abs(acc(1, 0) - sigma(1, 0)) < 0.02 * std::sqrt(sigma(0, 0) * sigma(1, 1)));
}
