#include "volrec/dgp.hpp"
#include "volrec/error.hpp"
#include "volrec/estimation.hpp"
#include "volrec/evaluation.hpp"
#include "volrec/harness.hpp"
#include "volrec/reconcile.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>

using namespace volrec;
namespace fs = std::filesystem;

namespace {

// Tolerances and bands.
constexpr double kShrCoherence = 1e-10;
constexpr double kShrACoherence = 1e-8;
constexpr double kShrBCoherence = 1e-8;
constexpr double kOracleRel = 1e-10;
constexpr double kAggregationRel = 1e-10;
constexpr double kBuLo = 0.25, kBuHi = 0.60, kShrLo = 0.08, kShrHi = 0.30;
constexpr double kMisspecBu = 3.0;
constexpr double kGapRatio = 2.0;
constexpr double kDynTol = 0.05, kSpillTol = 0.02;
constexpr double kSizeLo = 0.035, kSizeHi = 0.065;

struct Outcome {
    bool pass = false;
    std::string detail;
};

Matrix random_spd(Eigen::Index n, Rng& rng, double ridge) {
    Matrix a(n, n);
    for (auto& x : a.reshaped()) x = rng.normal();
    return a * a.transpose() / static_cast<double>(n) + ridge * Matrix::Identity(n, n);
}

Vector random_weights(Eigen::Index n, Rng& rng) {
    Vector w(n);
    for (auto& x : w) x = rng.uniform(0.05, 1.0);
    return w / w.sum();
}

double coherence_gap(const reconcile::Result& r, const Vector& c) {
    return std::abs(c.dot(r.y_tilde)) / (1.0 + r.y_tilde.cwiseAbs().maxCoeff());
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

Outcome criterion1() {
    using namespace reconcile;
    Rng rng(1001);
    const Eigen::Index sizes[] = {2, 5, 9};
    double worst_shr = 0.0, worst_a = 0.0, worst_b = 0.0;
    int invalid_a = 0, invalid_b = 0, errors = 0, violating = 0;
    constexpr int total = 10000;
    for (int k = 0; k < total; ++k) {
        const Eigen::Index n = sizes[k % 3];
        const auto m = static_cast<Eigen::Index>(mat::vech_size(static_cast<std::size_t>(n)));
        const Vector w = random_weights(n, rng);
        const Matrix s = random_spd(n, rng, 0.02);
        const Vector y_hat = stack(rng.uniform(0.2, 6.0) * w.dot(s * w), s);
        const Matrix om = random_spd(m + 1, rng, 0.1);
        const Vector c = build_constraint(w);
        try {
            const Result shr = reconcile_shr(y_hat, om, c);
            worst_shr = std::max(worst_shr, coherence_gap(shr, c));
            const bool diag_ok = (shr.sigma_tilde.diagonal().array() > 0.0).all();
            if (!diag_ok || !correlation_valid(shr.sigma_tilde)) ++violating;

            const Result a = reconcile_shr_a(y_hat, om, c);
            worst_a = std::max(worst_a, coherence_gap(a, c));
            if (!correlation_valid(a.sigma_tilde)) ++invalid_a;

            const Result b = diag_ok ? reconcile_shr_b(y_hat(0), mat::vech(mat::cov_to_cor(s).correlation),
                                                       shr.sigma_tilde, default_shr_b_weights(om, n), w)
                                     : algorithm1(y_hat(0), s, om, w, Option::B);
            worst_b = std::max(worst_b, coherence_gap(b, c));
            if (!correlation_valid(b.sigma_tilde)) ++invalid_b;
        } catch (const Error& e) {
            if (errors++ == 0) std::fprintf(stderr, "criterion 1 instance %d: %s\n", k, e.what());
        }
    }
    Outcome o;
    o.pass = worst_shr <= kShrCoherence && worst_a <= kShrACoherence && worst_b <= kShrBCoherence && invalid_a == 0 &&
             invalid_b == 0 && errors == 0;
    std::ostringstream d;
    d << total << " instances (" << violating << " with invalid shr correlations); max coherence gap shr "
      << worst_shr << ", shr_A " << worst_a << ", shr_B " << worst_b << "; invalid correlations A " << invalid_a
      << ", B " << invalid_b << "; errors " << errors;
    o.detail = d.str();
    return o;
}

Outcome criterion2() {
    using namespace reconcile;
    Rng rng(1002);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.index(8));
        const auto m = static_cast<Eigen::Index>(mat::vech_size(static_cast<std::size_t>(n)));
        const Vector w = random_weights(n, rng);
        const Vector y_hat = stack(rng.uniform(0.5, 2.0), random_spd(n, rng, 0.1));
        const Matrix om = random_spd(m + 1, rng, 0.1);
        const Vector c = build_constraint(w);
        // Generic KKT system for min (y - y_hat)' Omega^-1 (y - y_hat) s.t. c'y = 0.
        const Eigen::Index dim = m + 1;
        const Matrix oi = om.inverse();
        Matrix kkt = Matrix::Zero(dim + 1, dim + 1);
        kkt.topLeftCorner(dim, dim) = 2.0 * oi;
        kkt.topRightCorner(dim, 1) = c;
        kkt.bottomLeftCorner(1, dim) = c.transpose();
        Vector rhs = Vector::Zero(dim + 1);
        rhs.head(dim) = 2.0 * oi * y_hat;
        const Vector oracle = kkt.fullPivLu().solve(rhs).head(dim);
        const Vector y = reconcile_shr(y_hat, om, c).y_tilde;
        worst = std::max(worst, (y - oracle).norm() / oracle.norm());
    }
    return {worst <= kOracleRel, "max relative error vs KKT solve over 1000 instances: " + fmt("%.3g", worst)};
}

Outcome criterion3() {
    Rng rng(1003);
    const auto p = dgp::sample_sbekk_params(9, rng);
    const Vector w = dgp::make_weights(dgp::WeightScheme::Random, 9, rng);
    const auto path = models::simulate(p, 10000, rng);
    const double nu = w.dot(p.c * p.c.transpose() * w);
    double s = w.dot(path.cov[0] * w);
    double worst = 0.0;
    for (std::size_t t = 0; t < path.cov.size(); ++t) {
        if (t > 0) {
            const double rp = path.returns.row(static_cast<Eigen::Index>(t - 1)).dot(w);
            s = nu + p.alpha * rp * rp + p.beta * s;
        }
        const double agg = w.dot(path.cov[t] * w);
        worst = std::max(worst, std::abs(agg - s) / s);
    }
    return {worst <= kAggregationRel, "max relative gap over 10000 steps: " + fmt("%.3g", worst)};
}

harness::StudySummary run_study(models::ModelClass dgp_model, models::ModelClass fit, Eigen::Index t_train, int q,
                                 std::vector<double> deltas, int& failures) {
    harness::StudyConfig cfg;
    cfg.dgp.model = dgp_model;
    cfg.dgp.n_assets = 9;
    cfg.dgp.t_train = t_train;
    cfg.fitted_models = {fit};
    cfg.approaches = {harness::Approach::Base, harness::Approach::Bu, harness::Approach::Shr};
    cfg.q_replications = q;
    cfg.delta_grid = std::move(deltas);
    cfg.master_seed = 20240601;
    cfg.mcs.n_bootstrap = 200;
    const auto store = harness::run_simulation_study(cfg, harness::resolve_threads(0));
    failures = static_cast<int>(store.failures.size());
    return harness::summarize(store.losses, cfg.mcs, cfg.master_seed);
}

double rel(const harness::StudySummary& s, const std::string& delta, const std::string& model, eval::Loss kind,
           harness::Approach a) {
    const auto* r = harness::find_row(s, {delta, 1, model, kind}, a);
    return r ? r->avg_rel_base : std::nan("");
}

Outcome criterion4() {
    int failures = 0;
    const auto s = run_study(models::ModelClass::SBekk, models::ModelClass::SBekk, 500, 50, {}, failures);
    bool ok = failures == 0;
    std::ostringstream d;
    d << "Q=50, failures " << failures << ";";
    for (auto kind : eval::kAllLosses) {
        const double bu = rel(s, "0", "sbekk", kind, harness::Approach::Bu);
        const double shr = rel(s, "0", "sbekk", kind, harness::Approach::Shr);
        ok = ok && bu < 1.0 && shr < bu;
        if (kind == eval::Loss::Mse) ok = ok && bu >= kBuLo && bu <= kBuHi && shr >= kShrLo && shr <= kShrHi;
        d << ' ' << eval::to_string(kind) << " bu " << fmt("%.3f", bu) << " shr " << fmt("%.3f", shr);
    }
    return {ok, d.str()};
}

Outcome criterion5() {
    int failures = 0;
    const auto s = run_study(models::ModelClass::FBekk, models::ModelClass::SBekk, 500, 30, {}, failures);
    const double bu = rel(s, "0", "sbekk", eval::Loss::Mse, harness::Approach::Bu);
    const double shr = rel(s, "0", "sbekk", eval::Loss::Mse, harness::Approach::Shr);
    return {failures == 0 && bu > kMisspecBu && shr < 1.0, "Q=30, failures " + std::to_string(failures) +
                                                               "; AvgRelMSE bu " + fmt("%.3f", bu) + " shr " +
                                                               fmt("%.3f", shr)};
}

Outcome criterion6() {
    int failures = 0;
    const auto s = run_study(models::ModelClass::Dcc, models::ModelClass::Dcc, 1000, 30, {1.0}, failures);
    const double r0 = rel(s, "0", "dcc", eval::Loss::Mse, harness::Approach::Shr);
    const double r1 = rel(s, "1", "dcc", eval::Loss::Mse, harness::Approach::Shr);
    const double ratio = std::abs(1.0 - r0) / std::abs(1.0 - r1);
    return {failures == 0 && ratio >= kGapRatio, "Q=30, failures " + std::to_string(failures) +
                                                     "; AvgRelMSE shr at delta 0 " + fmt("%.4f", r0) +
                                                     ", at delta 1 " + fmt("%.4f", r1) + ", gap ratio " +
                                                     fmt("%.1f", ratio)};
}

Outcome criterion7() {
    using namespace models;
    double worst_dyn = 0.0, worst_spill = 0.0;
    int errors = 0;
    const Matrix gamma{{1, 0.4, 0.2}, {0.4, 1, 0.3}, {0.2, 0.3, 1}};
    auto track = [&](double est, double truth) { worst_dyn = std::max(worst_dyn, std::abs(est - truth)); };
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(7000 + seed);
        try {
            const Garch11Params g{0.1, 0.1, 0.8};
            const auto gf = garch11_fit(simulate(g, 20000, rng).returns.col(0));
            track(gf.params.alpha, g.alpha);
            track(gf.params.beta, g.beta);

            SBekkParams sb;
            sb.c = Matrix{{0.3, 0, 0}, {0.05, 0.25, 0}, {-0.02, 0.04, 0.2}};
            sb.alpha = 0.15;
            sb.beta = 0.8;
            const auto sf = sbekk_fit(simulate(sb, 20000, rng).returns);
            track(sf.params.alpha, sb.alpha);
            track(sf.params.beta, sb.beta);

            DccParams dc;
            dc.marginals = {{0.05, 0.1, 0.85}, {0.1, 0.05, 0.9}, {0.02, 0.15, 0.8}};
            dc.gamma = gamma;
            dc.theta1 = 0.15;
            dc.theta2 = 0.8;
            const auto df = dcc_fit(simulate(dc, 20000, rng).returns);
            track(df.params.theta1, dc.theta1);
            track(df.params.theta2, dc.theta2);
            for (std::size_t i = 0; i < 3; ++i) {
                track(df.params.marginals[i].alpha, dc.marginals[i].alpha);
                track(df.params.marginals[i].beta, dc.marginals[i].beta);
            }

            EdccParams ed;
            ed.nu = Vector{{0.05, 0.08, 0.03}};
            ed.a = Matrix{{0.10, 0.02, 0.01}, {0.015, 0.08, 0.0}, {0.0, 0.02, 0.12}};
            ed.b = Vector{{0.82, 0.85, 0.8}};
            ed.gamma = gamma;
            ed.theta1 = 0.1;
            ed.theta2 = 0.85;
            const auto ef = edcc_fit(simulate(ed, 20000, rng).returns);
            track(ef.params.theta1, ed.theta1);
            track(ef.params.theta2, ed.theta2);
            for (Eigen::Index i = 0; i < 3; ++i) {
                track(ef.params.b(i), ed.b(i));
                for (Eigen::Index j = 0; j < 3; ++j) {
                    if (i == j) {
                        track(ef.params.a(i, j), ed.a(i, j));
                    } else {
                        worst_spill = std::max(worst_spill, std::abs(ef.params.a(i, j) - ed.a(i, j)));
                    }
                }
            }
        } catch (const Error& e) {
            ++errors;
            std::fprintf(stderr, "criterion 7 seed %llu: %s\n", static_cast<unsigned long long>(seed), e.what());
        }
    }
    return {errors == 0 && worst_dyn <= kDynTol && worst_spill <= kSpillTol,
            "10 seeds x {GARCH, SBEKK, DCC, EDCC} at T=20000; max dynamic error " + fmt("%.4f", worst_dyn) +
                ", max EDCC spillover error " + fmt("%.4f", worst_spill) + ", errors " + std::to_string(errors)};
}

Outcome criterion8() {
    Rng rng(1008);
    Vector a(250), b(250);
    int rejections = 0;
    constexpr int runs = 10000;
    for (int k = 0; k < runs; ++k) {
        for (Eigen::Index t = 0; t < 250; ++t) {
            a(t) = std::pow(rng.normal(), 2);
            b(t) = std::pow(rng.normal(), 2);
        }
        if (eval::dm_test(a, b, 0).pvalue_raw < 0.05) ++rejections;
    }
    const double rate = static_cast<double>(rejections) / runs;
    return {rate >= kSizeLo && rate <= kSizeHi, "empirical size at 5%: " + fmt("%.4f", rate) + " over 10000 runs"};
}

Outcome criterion9() {
    Rng rng(1009);
    Matrix l(250, 4);
    for (Eigen::Index t = 0; t < 250; ++t) {
        const double common = std::pow(rng.normal(), 2);
        for (Eigen::Index j = 0; j < 4; ++j) l(t, j) = common + 0.2 * std::pow(rng.normal(), 2);
        l(t, 2) += 10.0;
    }
    eval::McsOptions o;
    o.seed = 99;
    o.n_bootstrap = 1000;
    const auto shifted = eval::mcs(l, o);
    Matrix same(250, 3);
    for (Eigen::Index t = 0; t < 250; ++t) same.row(t).setConstant(std::pow(rng.normal(), 2));
    const auto identical = eval::mcs(same, o);
    bool all_kept = true;
    for (const auto& inc : identical.included) {
        for (bool b : inc) all_kept = all_kept && b;
    }
    return {shifted.pvalues(2) < 0.05 && all_kept,
            "shifted model p-value " + fmt("%.4f", shifted.pvalues(2)) + "; identical panel retained at every level: " +
                (all_kept ? "yes" : "no")};
}

Outcome criterion10() {
    harness::StudyConfig cfg;
    cfg.dgp.model = models::ModelClass::Dcc;
    cfg.dgp.n_assets = 4;
    cfg.dgp.t_train = 300;
    cfg.dgp.t_test = 100;
    cfg.q_replications = 6;
    cfg.delta_grid = {0.5, 1.0};
    cfg.master_seed = 77;
    const fs::path dir = fs::temp_directory_path() / "volrec_acceptance";
    fs::create_directories(dir);
    auto bytes = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)), {});
    };
    harness::write_losses(dir / "t1.csv", harness::run_simulation_study(cfg, 1).losses);
    harness::write_losses(dir / "t1b.csv", harness::run_simulation_study(cfg, 1).losses);
    harness::write_losses(dir / "t4.csv", harness::run_simulation_study(cfg, 4).losses);
    const auto a = bytes(dir / "t1.csv");
    const bool same = !a.empty() && a == bytes(dir / "t1b.csv") && a == bytes(dir / "t4.csv");
    fs::remove_all(dir);
    return {same, "losses.csv (" + std::to_string(a.size()) + " bytes) identical across repeat and 1 vs 4 threads: " +
                      (same ? "yes" : "no")};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"coherence property suite", criterion1},
        {"shr matches KKT oracle", criterion2},
        {"SBEKK aggregation identity", criterion3},
        {"desk-scale SBEKK/SBEKK relative accuracy", criterion4},
        {"desk-scale FBEKK DGP with SBEKK fit", criterion5},
        {"noisy-proxy convergence", criterion6},
        {"estimator consistency", criterion7},
        {"DM test size", criterion8},
        {"MCS sanity", criterion9},
        {"study determinism", criterion10},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] %2zu %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first,
                    o.detail.c_str(), secs);
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
