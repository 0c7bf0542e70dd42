#pragma once

#include "volrec/models.hpp"
#include "volrec/optim.hpp"

namespace volrec::models {

/// A fitted parameter set plus the log-likelihood it attains on the fit sample.
template <typename P>
struct Fitted {
    P params;
    double loglik = 0.0;
    int iterations = 0;
};

struct FitOptions {
    optim::Options optimizer{};
    /// Minimum sample length; below it the fit throws InvalidInput. Zero uses
    /// the model default (50 for GARCH(1,1), 100 for multivariate models).
    Eigen::Index min_obs = 0;
};

// Unconstrained <-> constrained maps. (u1, u2) -> (x1, x2) with x1, x2 > 0
// and x1 + x2 < 1.
std::pair<double, double> to_persistence(double u1, double u2) noexcept;
std::pair<double, double> from_persistence(double x1, double x2);

/// Gaussian QML with omega free; alpha + beta < 1 holds by construction.
/// Filters start from the sample second moment.
Fitted<Garch11Params> garch11_fit(const Vector& returns, const FitOptions& options = {});

/// Scalar BEKK with covariance targeting CC' = (1 - alpha - beta) S, where S is
/// the sample second-moment matrix.
Fitted<SBekkParams> sbekk_fit(const Matrix& returns, const FitOptions& options = {});

/// Multi-step DCC: marginal GARCH(1,1) fits, Gamma as the sample correlation of
/// standardized residuals, then (theta1, theta2) on the correlation likelihood.
Fitted<DccParams> dcc_fit(const Matrix& returns, const FitOptions& options = {});

/// EDCC: joint variance-equation QML for (nu, A, diag B) with nonnegativity,
/// then Gamma and (theta1, theta2) as for DCC.
Fitted<EdccParams> edcc_fit(const Matrix& returns, const FitOptions& options = {});

/// Correlation-stage quasi log-likelihood -0.5 sum(log|G_t| + eta' G_t^-1 eta).
double dcc_correlation_loglik(const Matrix& std_residuals, const Matrix& gamma, double theta1, double theta2);

/// Sum over assets of univariate Gaussian log-likelihoods for the EDCC
/// variance equation.
double edcc_variance_loglik(const Vector& nu, const Matrix& a, const Vector& b, const Matrix& returns,
                            const Vector& init_var);

/// Fits any supported multivariate class (SBEKK, DCC, EDCC). FBEKK throws
/// InvalidInput: it is simulation-only.
AnyParams fit_multivariate(ModelClass model, const Matrix& returns);

}  // namespace volrec::models
