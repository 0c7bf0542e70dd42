#include "volrec/estimation.hpp"

#include "volrec/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace volrec::models {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

Eigen::Index min_obs(const FitOptions& o, Eigen::Index fallback) { return o.min_obs > 0 ? o.min_obs : fallback; }

/// Average negative GARCH(1,1) log-likelihood; +inf on invalid states.
double garch_nll(double omega, double alpha, double beta, const Vector& r, double init_var) {
    double s = init_var;
    double acc = 0.0;
    for (Eigen::Index t = 0; t < r.size(); ++t) {
        if (t > 0) {
            s = omega + alpha * r(t - 1) * r(t - 1) + beta * s;
        }
        if (!(s > 0.0) || !std::isfinite(s)) {
            return kInf;
        }
        acc += std::log(s) + r(t) * r(t) / s;
    }
    return 0.5 * (acc / static_cast<double>(r.size()) + kLog2Pi);
}

/// Runs Nelder-Mead from x0, then restarts from the result until the value
/// stops improving (a restart rebuilds a collapsed simplex).
optim::Result simplex_with_restarts(const optim::Objective& f, Vector x0, const optim::Options& opt) {
    optim::Result best = optim::nelder_mead(f, x0, opt);
    int total = best.iterations;
    for (int k = 0; k < 3; ++k) {
        optim::Options again = opt;
        again.initial_step = opt.initial_step * 0.25;
        optim::Result r = optim::nelder_mead(f, best.x, again);
        total += r.iterations;
        const bool improved = r.value < best.value - 1e-10 * (std::abs(best.value) + 1.0);
        if (r.value <= best.value) {
            best = r;
        }
        if (!improved) {
            break;
        }
    }
    best.iterations = total;
    return best;
}

Matrix second_moment(const Matrix& returns) {
    return mat::symmetrize(returns.transpose() * returns / static_cast<double>(returns.rows()));
}

Matrix correlation_of(const Matrix& second) {
    const Vector inv = second.diagonal().cwiseSqrt().cwiseInverse();
    Matrix g = inv.asDiagonal() * second * inv.asDiagonal();
    g = mat::symmetrize(g);
    g.diagonal().setOnes();
    return g;
}

struct CorrelationStage {
    Matrix gamma;
    double theta1 = 0.0;
    double theta2 = 0.0;
    double loglik = 0.0;
    int iterations = 0;
};

CorrelationStage fit_correlation(const Matrix& eta, const optim::Options& opt) {
    CorrelationStage out;
    out.gamma = correlation_of(second_moment(eta));
    if (mat::min_eigenvalue(out.gamma) <= 0.0) {
        throw EstimationFailure("sample correlation of standardized residuals is singular", "correlation");
    }
    const double scale = static_cast<double>(eta.rows());
    auto nll = [&](const Vector& x) {
        const auto [t1, t2] = to_persistence(x(0), x(1));
        const double ll = dcc_correlation_loglik(eta, out.gamma, t1, t2);
        return std::isfinite(ll) ? -ll / scale : kInf;
    };
    optim::Result best;
    best.value = kInf;
    for (const auto& [t1, t2] : std::array<std::pair<double, double>, 3>{{{0.05, 0.90}, {0.02, 0.95}, {0.15, 0.70}}}) {
        const auto [u1, u2] = from_persistence(t1, t2);
        const optim::Result r = simplex_with_restarts(nll, Vector{{u1, u2}}, opt);
        if (r.value < best.value) {
            best = r;
        }
    }
    if (!std::isfinite(best.value) || !best.converged) {
        throw EstimationFailure("correlation stage did not converge: " + best.message, "correlation");
    }
    std::tie(out.theta1, out.theta2) = to_persistence(best.x(0), best.x(1));
    out.loglik = -best.value * scale;
    out.iterations = best.iterations;
    return out;
}

/// Average negative log-likelihood of one EDCC variance equation.
double edcc_row_nll(double nu, const Vector& a_row, double b, const Matrix& sq, Eigen::Index i, double init_var) {
    const Eigen::Index t_len = sq.rows();
    double h = init_var;
    double acc = 0.0;
    for (Eigen::Index t = 0; t < t_len; ++t) {
        if (t > 0) {
            h = nu + sq.row(t - 1).dot(a_row) + b * h;
        }
        if (!(h > 0.0) || !std::isfinite(h)) {
            return kInf;
        }
        acc += std::log(h) + sq(t, i) / h;
    }
    return 0.5 * (acc / static_cast<double>(t_len) + kLog2Pi);
}

}  // namespace

std::pair<double, double> to_persistence(double u1, double u2) noexcept {
    const double m = std::max({0.0, u1, u2});
    const double e0 = std::exp(-m);
    const double e1 = std::exp(u1 - m);
    const double e2 = std::exp(u2 - m);
    const double den = e0 + e1 + e2;
    return {e1 / den, e2 / den};
}

std::pair<double, double> from_persistence(double x1, double x2) {
    const double rest = 1.0 - x1 - x2;
    if (!(x1 > 0.0) || !(x2 > 0.0) || !(rest > 0.0)) {
        throw InvalidInput("from_persistence: need x1, x2 > 0 and x1 + x2 < 1");
    }
    return {std::log(x1 / rest), std::log(x2 / rest)};
}

Fitted<Garch11Params> garch11_fit(const Vector& returns, const FitOptions& options) {
    if (returns.size() < min_obs(options, 50)) {
        throw InvalidInput("garch11_fit: need at least " + std::to_string(min_obs(options, 50)) + " observations");
    }
    const double v = returns.squaredNorm() / static_cast<double>(returns.size());
    if (!(v > 1e-300) || !std::isfinite(v)) {
        throw EstimationFailure("degenerate likelihood: returns have no variation", "marginal");
    }
    // Work on unit-variance data so the intercept parameter is O(1).
    const Vector z = returns / std::sqrt(v);
    auto nll = [&](const Vector& x) {
        const auto [alpha, beta] = to_persistence(x(1), x(2));
        return garch_nll(std::exp(x(0)), alpha, beta, z, 1.0);
    };
    optim::Result best;
    best.value = kInf;
    for (const auto& [a0, b0] : std::array<std::pair<double, double>, 3>{{{0.05, 0.90}, {0.10, 0.80}, {0.20, 0.50}}}) {
        const auto [u1, u2] = from_persistence(a0, b0);
        const optim::Result r = simplex_with_restarts(nll, Vector{{std::log(1.0 - a0 - b0), u1, u2}}, options.optimizer);
        if (r.value < best.value) {
            best = r;
        }
    }
    if (!std::isfinite(best.value) || !best.converged) {
        throw EstimationFailure("GARCH(1,1) QML did not converge: " + best.message, "marginal");
    }
    Fitted<Garch11Params> out;
    const auto [alpha, beta] = to_persistence(best.x(1), best.x(2));
    out.params = {std::exp(best.x(0)) * v, alpha, beta};
    out.iterations = best.iterations;
    out.loglik = garch11_filter(out.params, returns, v).loglik;
    return out;
}

Fitted<SBekkParams> sbekk_fit(const Matrix& returns, const FitOptions& options) {
    if (returns.rows() < min_obs(options, 100)) {
        throw InvalidInput("sbekk_fit: need at least " + std::to_string(min_obs(options, 100)) + " observations");
    }
    const Matrix s = second_moment(returns);
    Eigen::LLT<Matrix> llt_s(s);
    if (llt_s.info() != Eigen::Success) {
        throw EstimationFailure("sample covariance is not positive definite", "targeting");
    }
    const Eigen::Index t_len = returns.rows();
    const auto n = static_cast<double>(returns.cols());
    // Whitening by the sample factor leaves the likelihood shape unchanged up to
    // a constant and keeps every state well scaled.
    const Matrix z = llt_s.matrixL().solve(returns.transpose()).transpose();
    const Matrix ident = Matrix::Identity(returns.cols(), returns.cols());
    auto nll = [&](const Vector& x) {
        const auto [alpha, beta] = to_persistence(x(0), x(1));
        const Matrix intercept = (1.0 - alpha - beta) * ident;
        Matrix sigma = ident;
        double acc = 0.0;
        for (Eigen::Index t = 0; t < t_len; ++t) {
            if (t > 0) {
                const auto r = z.row(t - 1);
                sigma = intercept + alpha * r.transpose() * r + beta * sigma;
            }
            Eigen::LLT<Matrix> llt(sigma);
            if (llt.info() != Eigen::Success) {
                return kInf;
            }
            const Matrix& l = llt.matrixLLT();
            double logdet = 0.0;
            for (Eigen::Index i = 0; i < l.rows(); ++i) {
                logdet += 2.0 * std::log(l(i, i));
            }
            acc += logdet + llt.matrixL().solve(z.row(t).transpose()).squaredNorm();
        }
        return 0.5 * (acc / static_cast<double>(t_len) + n * kLog2Pi);
    };
    optim::Result best;
    best.value = kInf;
    for (const auto& [a0, b0] : std::array<std::pair<double, double>, 2>{{{0.05, 0.90}, {0.15, 0.70}}}) {
        const auto [u1, u2] = from_persistence(a0, b0);
        optim::Result r = optim::bfgs(nll, Vector{{u1, u2}}, options.optimizer);
        if (!r.converged) {
            r = simplex_with_restarts(nll, r.x, options.optimizer);
        }
        if (r.converged && r.value < best.value) {
            best = r;
        }
    }
    if (!std::isfinite(best.value)) {
        throw EstimationFailure("scalar BEKK QML did not converge", "bekk");
    }
    Fitted<SBekkParams> out;
    const auto [alpha, beta] = to_persistence(best.x(0), best.x(1));
    out.params.alpha = alpha;
    out.params.beta = beta;
    out.params.c = mat::cholesky_lower((1.0 - alpha - beta) * s);
    out.iterations = best.iterations;
    out.loglik = sbekk_filter(out.params, returns, s).loglik;
    return out;
}

double dcc_correlation_loglik(const Matrix& eta, const Matrix& gamma, double theta1, double theta2) {
    const Eigen::Index t_len = eta.rows();
    const Matrix intercept = (1.0 - theta1 - theta2) * gamma;
    Matrix q = gamma;
    double acc = 0.0;
    for (Eigen::Index t = 0; t < t_len; ++t) {
        if (t > 0) {
            const auto e = eta.row(t - 1);
            q = intercept + theta1 * e.transpose() * e + theta2 * q;
        }
        const Vector d = q.diagonal();
        if ((d.array() <= 0.0).any()) {
            return -kInf;
        }
        const Vector inv = d.cwiseSqrt().cwiseInverse();
        const Matrix g = inv.asDiagonal() * q * inv.asDiagonal();
        Eigen::LLT<Matrix> llt(g);
        if (llt.info() != Eigen::Success) {
            return -kInf;
        }
        const Matrix& l = llt.matrixLLT();
        double logdet = 0.0;
        for (Eigen::Index i = 0; i < l.rows(); ++i) {
            logdet += 2.0 * std::log(l(i, i));
        }
        acc += logdet + llt.matrixL().solve(eta.row(t).transpose()).squaredNorm();
    }
    return -0.5 * acc;
}

Fitted<DccParams> dcc_fit(const Matrix& returns, const FitOptions& options) {
    if (returns.rows() < min_obs(options, 100)) {
        throw InvalidInput("dcc_fit: need at least " + std::to_string(min_obs(options, 100)) + " observations");
    }
    const Eigen::Index n = returns.cols();
    Fitted<DccParams> out;
    out.params.marginals.resize(static_cast<std::size_t>(n));
    Matrix eta(returns.rows(), n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vector ri = returns.col(i);
        Fitted<Garch11Params> g;
        try {
            g = garch11_fit(ri, options);
        } catch (const EstimationFailure& e) {
            throw EstimationFailure(std::string(e.what()), "marginal", static_cast<int>(i));
        }
        out.params.marginals[static_cast<std::size_t>(i)] = g.params;
        out.iterations += g.iterations;
        const double v0 = ri.squaredNorm() / static_cast<double>(ri.size());
        const VarianceFilter f = garch11_filter(g.params, ri, v0);
        eta.col(i) = ri.cwiseQuotient(f.variance.cwiseSqrt());
    }
    const CorrelationStage cs = fit_correlation(eta, options.optimizer);
    out.params.gamma = cs.gamma;
    out.params.theta1 = cs.theta1;
    out.params.theta2 = cs.theta2;
    out.iterations += cs.iterations;
    out.loglik = dcc_filter(out.params, returns, default_dcc_init(out.params.gamma, returns)).loglik;
    return out;
}

double edcc_variance_loglik(const Vector& nu, const Matrix& a, const Vector& b, const Matrix& returns,
                            const Vector& init_var) {
    const Matrix sq = returns.cwiseAbs2();
    double total = 0.0;
    for (Eigen::Index i = 0; i < returns.cols(); ++i) {
        const double nll = edcc_row_nll(nu(i), a.row(i).transpose(), b(i), sq, i, init_var(i));
        total -= nll * static_cast<double>(returns.rows());
    }
    return total;
}

Fitted<EdccParams> edcc_fit(const Matrix& returns, const FitOptions& options) {
    if (returns.rows() < min_obs(options, 100)) {
        throw InvalidInput("edcc_fit: need at least " + std::to_string(min_obs(options, 100)) + " observations");
    }
    const Eigen::Index n = returns.cols();
    const Eigen::Index t_len = returns.rows();
    // Rescale each asset to unit second moment; A's off-diagonals rescale by
    // v_i / v_j and nu by v_i when mapped back.
    const Vector v = returns.cwiseAbs2().colwise().mean().transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(v(i) > 1e-300)) {
            throw EstimationFailure("degenerate likelihood: asset has no variation", "variance", static_cast<int>(i));
        }
    }
    const Vector inv_sd = v.cwiseSqrt().cwiseInverse();
    const Matrix z = returns * inv_sd.asDiagonal();
    const Matrix sq = z.cwiseAbs2();

    Fitted<EdccParams> out;
    out.params.nu.resize(n);
    out.params.a.resize(n, n);
    out.params.b.resize(n);

    // The variance equations share no parameters, so the joint likelihood
    // separates into one problem per asset: (nu_i, A_i., b_i).
    for (Eigen::Index i = 0; i < n; ++i) {
        Fitted<Garch11Params> g;
        try {
            g = garch11_fit(z.col(i), options);
        } catch (const EstimationFailure& e) {
            throw EstimationFailure(std::string(e.what()), "variance", static_cast<int>(i));
        }
        auto unpack = [&](const Vector& x, double& nu, Vector& a_row, double& b) {
            nu = std::exp(x(0));
            a_row = x.segment(1, n).array().exp();
            b = std::exp(x(n + 1));
        };
        auto nll = [&](const Vector& x) {
            double nu = 0.0;
            double b = 0.0;
            Vector a_row;
            unpack(x, nu, a_row, b);
            if (a_row(i) + b >= 1.0) {
                return kInf;
            }
            return edcc_row_nll(nu, a_row, b, sq, i, 1.0);
        };
        Vector x0(n + 2);
        const double spill0 = 1e-3;
        x0(0) = std::log(std::max(g.params.omega - spill0 * static_cast<double>(n - 1), 0.5 * g.params.omega));
        x0.segment(1, n).setConstant(std::log(spill0));
        x0(1 + i) = std::log(std::max(g.params.alpha, 1e-4));
        x0(n + 1) = std::log(std::max(g.params.beta, 1e-4));
        optim::Result r = optim::bfgs(nll, x0, options.optimizer);
        if (!r.converged || !std::isfinite(r.value)) {
            r = simplex_with_restarts(nll, r.x, options.optimizer);
        }
        if (!r.converged || !std::isfinite(r.value)) {
            throw EstimationFailure("EDCC variance equation did not converge: " + r.message, "variance",
                                    static_cast<int>(i));
        }
        double nu = 0.0;
        double b = 0.0;
        Vector a_row;
        unpack(r.x, nu, a_row, b);
        out.params.nu(i) = nu * v(i);
        for (Eigen::Index j = 0; j < n; ++j) {
            out.params.a(i, j) = a_row(j) * v(i) / v(j);
        }
        out.params.b(i) = b;
        out.iterations += r.iterations;
    }
    if (mat::spectral_radius(out.params.a + out.params.b_matrix()) >= 1.0) {
        throw EstimationFailure("EDCC variance estimates are not stationary", "variance");
    }

    // Standardized residuals from the fitted variance recursion.
    Matrix eta(t_len, n);
    Vector h = v;
    for (Eigen::Index t = 0; t < t_len; ++t) {
        if (t > 0) {
            h = out.params.nu + out.params.a * returns.row(t - 1).transpose().cwiseAbs2() +
                out.params.b.cwiseProduct(h);
        }
        eta.row(t) = returns.row(t).cwiseQuotient(h.cwiseSqrt().transpose());
    }
    const CorrelationStage cs = fit_correlation(eta, options.optimizer);
    out.params.gamma = cs.gamma;
    out.params.theta1 = cs.theta1;
    out.params.theta2 = cs.theta2;
    out.iterations += cs.iterations;
    out.loglik = edcc_filter(out.params, returns, default_dcc_init(out.params.gamma, returns)).loglik;
    return out;
}

AnyParams fit_multivariate(ModelClass model, const Matrix& returns) {
    switch (model) {
        case ModelClass::SBekk: return sbekk_fit(returns).params;
        case ModelClass::Dcc: return dcc_fit(returns).params;
        case ModelClass::Edcc: return edcc_fit(returns).params;
        case ModelClass::FBekk: throw InvalidInput("full BEKK estimation is not supported");
        case ModelClass::Garch11: throw InvalidInput("GARCH(1,1) is univariate");
    }
    throw InvalidInput("unknown model class");
}

}  // namespace volrec::models
