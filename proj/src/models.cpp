#include "volrec/models.hpp"

#include "volrec/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace volrec::models {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_returns(const Matrix& returns, Eigen::Index n, const char* who) {
    if (returns.rows() < 1) {
        throw InvalidInput(std::string(who) + ": need at least one observation");
    }
    if (returns.cols() != n) {
        throw InvalidInput(std::string(who) + ": returns have " + std::to_string(returns.cols()) +
                           " columns, model has dimension " + std::to_string(n));
    }
}

void require_spd(const Matrix& m, const char* who) {
    if (m.rows() != m.cols() || !mat::is_symmetric(m, 1e-10)) {
        throw InvalidInput(std::string(who) + ": initial covariance must be symmetric");
    }
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) {
        throw InvalidInput(std::string(who) + ": initial covariance must be positive definite");
    }
}

/// Column k of P (A (x) A) D is vech(A E_k A') for the symmetric basis matrix E_k.
Matrix bekk_vech_operator(const Matrix& a) {
    const auto n = static_cast<std::size_t>(a.rows());
    const auto m = static_cast<Eigen::Index>(mat::vech_size(n));
    Matrix out(m, m);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        for (Eigen::Index i = j; i < a.rows(); ++i) {
            Matrix x = a.col(i) * a.col(j).transpose();
            if (i != j) {
                x += a.col(j) * a.col(i).transpose();
            }
            out.col(k++) = mat::vech(mat::symmetrize(x));
        }
    }
    return out;
}

Matrix bekk_companion(const FBekkParams& p) { return bekk_vech_operator(p.a) + bekk_vech_operator(p.b); }

/// Q normalized to unit diagonal; throws NumericalFailure on nonpositive q_ii.
Matrix normalize_q(const Matrix& q) {
    Vector d = q.diagonal();
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (!(d(i) > 0.0) || !std::isfinite(d(i))) {
            throw NumericalFailure("nonpositive q_ii in correlation recursion");
        }
    }
    const Vector inv = d.cwiseSqrt().cwiseInverse();
    Matrix g = inv.asDiagonal() * q * inv.asDiagonal();
    g = mat::symmetrize(g);
    g.diagonal().setOnes();
    return g;
}

Matrix scale_correlation(const Matrix& corr, const Vector& var) {
    const Vector sd = var.cwiseSqrt();
    Matrix s = sd.asDiagonal() * corr * sd.asDiagonal();
    return mat::symmetrize(s);
}

void require_positive(const Vector& var, const char* who) {
    for (Eigen::Index i = 0; i < var.size(); ++i) {
        if (!(var(i) > 0.0) || !std::isfinite(var(i))) {
            throw NumericalFailure(std::string(who) + ": nonpositive conditional variance");
        }
    }
}

Vector dcc_variance_step(const DccParams& p, const Vector& r_prev, const Vector& var_prev) {
    Vector v(var_prev.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const auto& g = p.marginals[static_cast<std::size_t>(i)];
        v(i) = g.omega + g.alpha * r_prev(i) * r_prev(i) + g.beta * var_prev(i);
    }
    return v;
}

Vector edcc_variance_step(const EdccParams& p, const Vector& r_prev, const Vector& var_prev) {
    return p.nu + p.a * r_prev.cwiseAbs2() + p.b.cwiseProduct(var_prev);
}

/// Shared DCC-family recursion; VarStep maps (r_{t-1}, sigma2_{t-1}) to sigma2_t.
template <typename VarStep>
CovarianceFilter correlation_filter(const Matrix& gamma, double theta1, double theta2, const Matrix& returns,
                                    const DccInit& init, VarStep var_step, const char* who) {
    const Eigen::Index t_len = returns.rows();
    const Eigen::Index n = returns.cols();
    if (init.variances.size() != n || init.q.rows() != n || init.q.cols() != n) {
        throw InvalidInput(std::string(who) + ": initial state has wrong dimension");
    }
    require_positive(init.variances, who);

    CovarianceFilter out;
    out.cov.reserve(static_cast<std::size_t>(t_len));
    out.std_residuals.resize(t_len, n);
    out.variances.resize(t_len, n);

    const Matrix intercept = (1.0 - theta1 - theta2) * gamma;
    Vector var = init.variances;
    Matrix q = init.q;
    for (Eigen::Index t = 0; t <= t_len; ++t) {
        if (t > 0) {
            const Vector r_prev = returns.row(t - 1).transpose();
            const Vector eta_prev = out.std_residuals.row(t - 1).transpose();
            var = var_step(r_prev, var);
            q = intercept + theta1 * eta_prev * eta_prev.transpose() + theta2 * q;
            require_positive(var, who);
        }
        const Matrix corr = normalize_q(q);
        Matrix sigma = scale_correlation(corr, var);
        if (t == t_len) {
            out.next = std::move(sigma);
            out.next_variances = var;
            out.next_q = q;
            break;
        }
        const Vector r = returns.row(t).transpose();
        out.variances.row(t) = var.transpose();
        out.std_residuals.row(t) = r.cwiseQuotient(var.cwiseSqrt()).transpose();
        out.loglik += gaussian_logpdf(sigma, r);
        out.cov.push_back(std::move(sigma));
        out.q.push_back(q);
    }
    return out;
}

template <typename Step>
CovarianceFilter bekk_filter(const Matrix& returns, const Matrix& init_cov, Step step) {
    const Eigen::Index t_len = returns.rows();
    CovarianceFilter out;
    out.cov.reserve(static_cast<std::size_t>(t_len));
    Matrix sigma = init_cov;
    for (Eigen::Index t = 0; t < t_len; ++t) {
        if (t > 0) {
            sigma = step(returns.row(t - 1).transpose(), sigma);
        }
        out.loglik += gaussian_logpdf(sigma, returns.row(t).transpose());
        out.cov.push_back(sigma);
    }
    out.next = step(returns.row(t_len - 1).transpose(), sigma);
    return out;
}

}  // namespace

std::string_view to_string(ModelClass m) noexcept {
    switch (m) {
        case ModelClass::Garch11: return "garch";
        case ModelClass::SBekk: return "sbekk";
        case ModelClass::FBekk: return "fbekk";
        case ModelClass::Dcc: return "dcc";
        case ModelClass::Edcc: return "edcc";
    }
    return "unknown";
}

ModelClass model_class_from_string(std::string_view name) {
    if (name == "garch" || name == "garch11") return ModelClass::Garch11;
    if (name == "sbekk") return ModelClass::SBekk;
    if (name == "fbekk") return ModelClass::FBekk;
    if (name == "dcc") return ModelClass::Dcc;
    if (name == "edcc") return ModelClass::Edcc;
    throw InvalidInput("unknown model class '" + std::string(name) + "'");
}

ModelClass model_class(const AnyParams& p) noexcept {
    return std::visit(overloaded{
                          [](const Garch11Params&) { return ModelClass::Garch11; },
                          [](const SBekkParams&) { return ModelClass::SBekk; },
                          [](const FBekkParams&) { return ModelClass::FBekk; },
                          [](const DccParams&) { return ModelClass::Dcc; },
                          [](const EdccParams&) { return ModelClass::Edcc; },
                      },
                      p);
}

Eigen::Index dimension(const AnyParams& p) noexcept {
    return std::visit(overloaded{
                          [](const Garch11Params&) -> Eigen::Index { return 1; },
                          [](const auto& q) -> Eigen::Index { return q.dim(); },
                      },
                      p);
}

// ---------------------------------------------------------------------------

StationarityReport stationarity_check(const Garch11Params& p) {
    const double s = p.alpha + p.beta;
    return {s < 1.0, s, "alpha+beta"};
}

StationarityReport stationarity_check(const SBekkParams& p) {
    const double s = p.alpha + p.beta;
    return {s < 1.0, s, "alpha+beta"};
}

StationarityReport stationarity_check(const FBekkParams& p) {
    const double rho = mat::spectral_radius(bekk_companion(p));
    return {rho < 1.0, rho, "max|eig(P(AxA)D+P(BxB)D)|"};
}

StationarityReport stationarity_check(const DccParams& p) {
    double worst = p.theta1 + p.theta2;
    std::string what = "theta1+theta2";
    for (std::size_t i = 0; i < p.marginals.size(); ++i) {
        const double s = p.marginals[i].alpha + p.marginals[i].beta;
        if (s > worst) {
            worst = s;
            what = "alpha+beta of asset " + std::to_string(i + 1);
        }
    }
    return {worst < 1.0, worst, what};
}

StationarityReport stationarity_check(const EdccParams& p) {
    const double rho = mat::spectral_radius(p.a + p.b_matrix());
    const double th = p.theta1 + p.theta2;
    if (th > rho) {
        return {th < 1.0, th, "theta1+theta2"};
    }
    return {rho < 1.0, rho, "max|eig(A+B)|"};
}

StationarityReport stationarity_check(const AnyParams& p) {
    return std::visit([](const auto& q) { return stationarity_check(q); }, p);
}

Matrix unconditional_covariance(const AnyParams& params) {
    return std::visit(
        overloaded{
            [](const Garch11Params& p) -> Matrix { return Matrix::Constant(1, 1, p.unconditional_variance()); },
            [](const SBekkParams& p) -> Matrix {
                return (p.c * p.c.transpose()) / (1.0 - p.alpha - p.beta);
            },
            [](const FBekkParams& p) -> Matrix {
                const Matrix m = bekk_companion(p);
                const Matrix lhs = Matrix::Identity(m.rows(), m.cols()) - m;
                const Vector s = lhs.partialPivLu().solve(mat::vech(mat::symmetrize(p.c * p.c.transpose())));
                return mat::vech_inv(s);
            },
            [](const DccParams& p) -> Matrix {
                Vector v(p.dim());
                for (Eigen::Index i = 0; i < v.size(); ++i) {
                    v(i) = p.marginals[static_cast<std::size_t>(i)].unconditional_variance();
                }
                return scale_correlation(p.gamma, v);
            },
            [](const EdccParams& p) -> Matrix {
                const Matrix lhs = Matrix::Identity(p.dim(), p.dim()) - p.a - p.b_matrix();
                const Vector v = lhs.partialPivLu().solve(p.nu);
                return scale_correlation(p.gamma, v);
            },
        },
        params);
}

// ---------------------------------------------------------------------------

double gaussian_logpdf(const Matrix& cov, const Vector& r) {
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw NumericalFailure("conditional covariance not positive definite");
    }
    const Matrix& l = llt.matrixLLT();
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
        logdet += std::log(l(i, i));
    }
    logdet *= 2.0;
    const Vector z = llt.matrixL().solve(r);
    return -0.5 * (static_cast<double>(r.size()) * kLog2Pi + logdet + z.squaredNorm());
}

VarianceFilter garch11_filter(const Garch11Params& p, const Vector& returns, double init_var) {
    if (!(init_var > 0.0)) {
        throw InvalidInput("garch11_filter: initial variance must be positive");
    }
    if (returns.size() < 1) {
        throw InvalidInput("garch11_filter: need at least one observation");
    }
    VarianceFilter out;
    out.variance.resize(returns.size());
    double s = init_var;
    for (Eigen::Index t = 0; t < returns.size(); ++t) {
        if (t > 0) {
            s = p.omega + p.alpha * returns(t - 1) * returns(t - 1) + p.beta * s;
        }
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw NumericalFailure("garch11_filter: nonpositive conditional variance");
        }
        out.variance(t) = s;
        out.loglik += -0.5 * (kLog2Pi + std::log(s) + returns(t) * returns(t) / s);
    }
    const double r_last = returns(returns.size() - 1);
    out.next = p.omega + p.alpha * r_last * r_last + p.beta * s;
    return out;
}

CovarianceFilter sbekk_filter(const SBekkParams& p, const Matrix& returns, const Matrix& init_cov) {
    require_returns(returns, p.dim(), "sbekk_filter");
    require_spd(init_cov, "sbekk_filter");
    const Matrix cc = p.c * p.c.transpose();
    return bekk_filter(returns, init_cov, [&](const Vector& r, const Matrix& s) {
        Matrix next = cc + p.alpha * r * r.transpose() + p.beta * s;
        return mat::symmetrize(next);
    });
}

CovarianceFilter fbekk_filter(const FBekkParams& p, const Matrix& returns, const Matrix& init_cov) {
    require_returns(returns, p.dim(), "fbekk_filter");
    require_spd(init_cov, "fbekk_filter");
    const Matrix cc = p.c * p.c.transpose();
    return bekk_filter(returns, init_cov, [&](const Vector& r, const Matrix& s) {
        const Vector ar = p.a * r;
        Matrix next = cc + ar * ar.transpose() + p.b * s * p.b.transpose();
        return mat::symmetrize(next);
    });
}

CovarianceFilter dcc_filter(const DccParams& p, const Matrix& returns, const DccInit& init) {
    require_returns(returns, p.dim(), "dcc_filter");
    if (static_cast<Eigen::Index>(p.marginals.size()) != p.dim()) {
        throw InvalidInput("dcc_filter: marginal count does not match Gamma");
    }
    return correlation_filter(
        p.gamma, p.theta1, p.theta2, returns, init,
        [&](const Vector& r, const Vector& v) { return dcc_variance_step(p, r, v); }, "dcc_filter");
}

CovarianceFilter edcc_filter(const EdccParams& p, const Matrix& returns, const DccInit& init) {
    require_returns(returns, p.dim(), "edcc_filter");
    return correlation_filter(
        p.gamma, p.theta1, p.theta2, returns, init,
        [&](const Vector& r, const Vector& v) { return edcc_variance_step(p, r, v); }, "edcc_filter");
}

DccInit default_dcc_init(const Matrix& gamma, const Matrix& returns) {
    DccInit init;
    init.variances = returns.cwiseAbs2().colwise().mean().transpose();
    init.q = gamma;
    return init;
}

CovarianceFilter filter(const AnyParams& params, const Matrix& returns, const Matrix& init_cov) {
    return std::visit(overloaded{
                          [&](const Garch11Params&) -> CovarianceFilter {
                              throw InvalidInput("filter: GARCH(1,1) is univariate, use garch11_filter");
                          },
                          [&](const SBekkParams& p) { return sbekk_filter(p, returns, init_cov); },
                          [&](const FBekkParams& p) { return fbekk_filter(p, returns, init_cov); },
                          [&](const DccParams& p) {
                              return dcc_filter(p, returns, DccInit{init_cov.diagonal(), p.gamma});
                          },
                          [&](const EdccParams& p) {
                              return edcc_filter(p, returns, DccInit{init_cov.diagonal(), p.gamma});
                          },
                      },
                      params);
}

// ---------------------------------------------------------------------------

double garch11_forecast(const Garch11Params& p, double last_return, double last_var, int horizon) {
    if (horizon < 1) {
        throw InvalidInput("garch11_forecast: horizon must be >= 1");
    }
    double s = p.omega + p.alpha * last_return * last_return + p.beta * last_var;
    for (int h = 2; h <= horizon; ++h) {
        s = p.omega + (p.alpha + p.beta) * s;
    }
    return s;
}

double forecast_variance(const Garch11Params& p, const VarianceFilter& f, int horizon) {
    if (horizon < 1) {
        throw InvalidInput("forecast_variance: horizon must be >= 1");
    }
    double s = f.next;
    for (int h = 2; h <= horizon; ++h) {
        s = p.omega + (p.alpha + p.beta) * s;
    }
    return s;
}

Matrix forecast_covariance(const AnyParams& params, const CovarianceFilter& f, int horizon) {
    if (horizon < 1) {
        throw InvalidInput("forecast_covariance: horizon must be >= 1");
    }
    if (horizon == 1) {
        return f.next;
    }
    return std::visit(
        overloaded{
            [&](const Garch11Params&) -> Matrix {
                throw InvalidInput("forecast_covariance: GARCH(1,1) is univariate");
            },
            [&](const SBekkParams& p) -> Matrix {
                const Matrix cc = p.c * p.c.transpose();
                Matrix s = f.next;
                for (int h = 2; h <= horizon; ++h) {
                    s = cc + (p.alpha + p.beta) * s;
                }
                return s;
            },
            [&](const FBekkParams& p) -> Matrix {
                const Matrix cc = p.c * p.c.transpose();
                Matrix s = f.next;
                for (int h = 2; h <= horizon; ++h) {
                    s = mat::symmetrize(cc + p.a * s * p.a.transpose() + p.b * s * p.b.transpose());
                }
                return s;
            },
            [&](const DccParams& p) -> Matrix {
                Vector v = f.next_variances;
                Matrix q = f.next_q;
                const Matrix intercept = (1.0 - p.theta1 - p.theta2) * p.gamma;
                for (int h = 2; h <= horizon; ++h) {
                    for (Eigen::Index i = 0; i < v.size(); ++i) {
                        const auto& g = p.marginals[static_cast<std::size_t>(i)];
                        v(i) = g.omega + (g.alpha + g.beta) * v(i);
                    }
                    q = intercept + (p.theta1 + p.theta2) * q;
                }
                return scale_correlation(normalize_q(q), v);
            },
            [&](const EdccParams& p) -> Matrix {
                Vector v = f.next_variances;
                Matrix q = f.next_q;
                const Matrix intercept = (1.0 - p.theta1 - p.theta2) * p.gamma;
                const Matrix persistence = p.a + p.b_matrix();
                for (int h = 2; h <= horizon; ++h) {
                    v = p.nu + persistence * v;
                    q = intercept + (p.theta1 + p.theta2) * q;
                }
                return scale_correlation(normalize_q(q), v);
            },
        },
        params);
}

CovarianceFilter state_at(const CovarianceFilter& f, std::size_t t) {
    if (t > f.cov.size()) {
        throw InvalidInput("state_at: origin beyond the filtered sample");
    }
    CovarianceFilter s;
    if (t == f.cov.size()) {
        s.next = f.next;
        s.next_variances = f.next_variances;
        s.next_q = f.next_q;
        return s;
    }
    s.next = f.cov[t];
    if (!f.q.empty()) {
        s.next_variances = f.variances.row(static_cast<Eigen::Index>(t)).transpose();
        s.next_q = f.q[t];
    }
    return s;
}

VarianceFilter state_at(const VarianceFilter& f, Eigen::Index t) {
    if (t < 0 || t > f.variance.size()) {
        throw InvalidInput("state_at: origin beyond the filtered sample");
    }
    VarianceFilter s;
    s.next = t == f.variance.size() ? f.next : f.variance(t);
    return s;
}

// ---------------------------------------------------------------------------

SimulatedPath simulate(const AnyParams& params, std::size_t t_total, Rng& rng) {
    const auto report = stationarity_check(params);
    if (!report.ok) {
        throw InvalidInput("simulate: parameters not stationary (" + report.quantity + " = " +
                           std::to_string(report.value) + ")");
    }
    const Eigen::Index n = dimension(params);
    const auto t_len = static_cast<Eigen::Index>(t_total);
    SimulatedPath out;
    out.returns.resize(t_len, n);
    out.cov.reserve(t_total);

    auto draw = [&](const Matrix& sigma) {
        Eigen::LLT<Matrix> llt(sigma);
        if (llt.info() != Eigen::Success) {
            throw NumericalFailure("simulate: covariance lost positive definiteness");
        }
        Vector z(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            z(i) = rng.normal();
        }
        return Vector(llt.matrixL() * z);
    };

    std::visit(overloaded{
                   [&](const Garch11Params& p) {
                       double s = p.unconditional_variance();
                       for (Eigen::Index t = 0; t < t_len; ++t) {
                           if (t > 0) {
                               const double r = out.returns(t - 1, 0);
                               s = p.omega + p.alpha * r * r + p.beta * s;
                           }
                           const Matrix sigma = Matrix::Constant(1, 1, s);
                           out.returns(t, 0) = std::sqrt(s) * rng.normal();
                           out.cov.push_back(sigma);
                       }
                   },
                   [&](const SBekkParams& p) {
                       const Matrix cc = p.c * p.c.transpose();
                       Matrix sigma = unconditional_covariance(params);
                       for (Eigen::Index t = 0; t < t_len; ++t) {
                           if (t > 0) {
                               const Vector r = out.returns.row(t - 1).transpose();
                               sigma = mat::symmetrize(cc + p.alpha * r * r.transpose() + p.beta * sigma);
                           }
                           out.returns.row(t) = draw(sigma).transpose();
                           out.cov.push_back(sigma);
                       }
                   },
                   [&](const FBekkParams& p) {
                       const Matrix cc = p.c * p.c.transpose();
                       Matrix sigma = unconditional_covariance(params);
                       for (Eigen::Index t = 0; t < t_len; ++t) {
                           if (t > 0) {
                               const Vector ar = p.a * out.returns.row(t - 1).transpose();
                               sigma = mat::symmetrize(cc + ar * ar.transpose() + p.b * sigma * p.b.transpose());
                           }
                           out.returns.row(t) = draw(sigma).transpose();
                           out.cov.push_back(sigma);
                       }
                   },
                   [&](const auto& p) {
                       // DCC family: state is (variances, Q) started at the unconditional values.
                       using P = std::decay_t<decltype(p)>;
                       Vector var = unconditional_covariance(params).diagonal();
                       Matrix q = p.gamma;
                       const Matrix intercept = (1.0 - p.theta1 - p.theta2) * p.gamma;
                       Vector eta_prev;
                       for (Eigen::Index t = 0; t < t_len; ++t) {
                           if (t > 0) {
                               const Vector r_prev = out.returns.row(t - 1).transpose();
                               if constexpr (std::is_same_v<P, DccParams>) {
                                   var = dcc_variance_step(p, r_prev, var);
                               } else {
                                   var = edcc_variance_step(p, r_prev, var);
                               }
                               q = intercept + p.theta1 * eta_prev * eta_prev.transpose() + p.theta2 * q;
                           }
                           const Matrix sigma = scale_correlation(normalize_q(q), var);
                           const Vector r = draw(sigma);
                           out.returns.row(t) = r.transpose();
                           eta_prev = r.cwiseQuotient(var.cwiseSqrt());
                           out.cov.push_back(sigma);
                       }
                   },
               },
               params);
    return out;
}

}  // namespace volrec::models
