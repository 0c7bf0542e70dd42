#pragma once

#include "volrec/matrix.hpp"
#include "volrec/rng.hpp"

#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace volrec::models {

enum class ModelClass { Garch11, SBekk, FBekk, Dcc, Edcc };

std::string_view to_string(ModelClass m) noexcept;
/// Accepts the short CLI names: garch, sbekk, fbekk, dcc, edcc.
ModelClass model_class_from_string(std::string_view name);

// ---------------------------------------------------------------------------
// Parameter sets
// ---------------------------------------------------------------------------

/// sigma2_t = omega + alpha r_{t-1}^2 + beta sigma2_{t-1}
struct Garch11Params {
    double omega = 0.0;
    double alpha = 0.0;
    double beta = 0.0;

    bool stationary() const noexcept { return alpha + beta < 1.0; }
    double unconditional_variance() const { return omega / (1.0 - alpha - beta); }
};

/// Sigma_t = CC' + alpha r r' + beta Sigma_{t-1}, i.e. A = sqrt(alpha) I, B = sqrt(beta) I.
struct SBekkParams {
    Matrix c;  // lower triangular, positive diagonal
    double alpha = 0.0;
    double beta = 0.0;

    Eigen::Index dim() const noexcept { return c.rows(); }
};

/// Sigma_t = CC' + A r r' A' + B Sigma_{t-1} B'.
struct FBekkParams {
    Matrix c;
    Matrix a;
    Matrix b;

    Eigen::Index dim() const noexcept { return c.rows(); }
};

/// GARCH(1,1) marginals with the correlation recursion
/// Q_t = (1 - theta1 - theta2) Gamma + theta1 eta eta' + theta2 Q_{t-1}.
struct DccParams {
    std::vector<Garch11Params> marginals;
    Matrix gamma;  // unconditional correlation, unit diagonal
    double theta1 = 0.0;
    double theta2 = 0.0;

    Eigen::Index dim() const noexcept { return gamma.rows(); }
};

/// DCC with spillovers in the variance equation:
/// sigma2_t = nu + A (r_{t-1} o r_{t-1}) + diag(b) sigma2_{t-1}.
struct EdccParams {
    Vector nu;
    Matrix a;  // nonnegative, off-diagonals are spillovers
    Vector b;  // diagonal of B
    Matrix gamma;
    double theta1 = 0.0;
    double theta2 = 0.0;

    Eigen::Index dim() const noexcept { return nu.size(); }
    Matrix b_matrix() const { return b.asDiagonal(); }
};

using AnyParams = std::variant<Garch11Params, SBekkParams, FBekkParams, DccParams, EdccParams>;

ModelClass model_class(const AnyParams& p) noexcept;
Eigen::Index dimension(const AnyParams& p) noexcept;

struct StationarityReport {
    bool ok = false;
    /// The binding quantity: a coefficient sum or a largest eigenvalue modulus.
    double value = 0.0;
    std::string quantity;
};

StationarityReport stationarity_check(const Garch11Params& p);
StationarityReport stationarity_check(const SBekkParams& p);
/// Largest modulus among eigenvalues of P(A (x) A)D + P(B (x) B)D.
StationarityReport stationarity_check(const FBekkParams& p);
StationarityReport stationarity_check(const DccParams& p);
/// Spectral radius of A + B, combined with theta1 + theta2.
StationarityReport stationarity_check(const EdccParams& p);
StationarityReport stationarity_check(const AnyParams& p);

/// Long-run covariance implied by stationary parameters.
Matrix unconditional_covariance(const AnyParams& p);

// ---------------------------------------------------------------------------
// Filtering
// ---------------------------------------------------------------------------

/// Univariate filter output. variance[t] is the conditional variance of
/// returns[t] given returns[0..t-1]; variance[0] is the supplied initial value.
struct VarianceFilter {
    Vector variance;
    double next = 0.0;  // one-step forecast for the date after the sample
    double loglik = 0.0;
};

/// Multivariate filter output. cov[t] conditions on returns rows 0..t-1.
struct CovarianceFilter {
    std::vector<Matrix> cov;
    Matrix next;           // one-step forecast for the date after the sample
    Matrix std_residuals;  // T x n, DCC family only (empty otherwise)
    Matrix variances;      // T x n marginal variances, DCC family only
    Vector next_variances; // DCC family only
    Matrix next_q;         // DCC family only
    std::vector<Matrix> q; // Q_t per date, DCC family only
    double loglik = 0.0;
};

struct DccInit {
    Vector variances;  // initial marginal variances
    Matrix q;          // initial Q
};

VarianceFilter garch11_filter(const Garch11Params& p, const Vector& returns, double init_var);
CovarianceFilter sbekk_filter(const SBekkParams& p, const Matrix& returns, const Matrix& init_cov);
CovarianceFilter fbekk_filter(const FBekkParams& p, const Matrix& returns, const Matrix& init_cov);
CovarianceFilter dcc_filter(const DccParams& p, const Matrix& returns, const DccInit& init);
CovarianceFilter edcc_filter(const EdccParams& p, const Matrix& returns, const DccInit& init);

/// Default initial state: uncentered sample second moments of the data and Q_0 = Gamma.
DccInit default_dcc_init(const Matrix& gamma, const Matrix& returns);

/// Filter any multivariate model. init_cov seeds BEKK models; for the DCC
/// family its diagonal seeds the variances and Q_0 = Gamma.
CovarianceFilter filter(const AnyParams& p, const Matrix& returns, const Matrix& init_cov);

/// Gaussian log-density contribution -0.5 (n log 2pi + log|S| + r' S^-1 r);
/// throws NumericalFailure when S is not positive definite.
double gaussian_logpdf(const Matrix& cov, const Vector& r);

// ---------------------------------------------------------------------------
// Forecasting
// ---------------------------------------------------------------------------

/// h = 1: omega + alpha r^2 + beta sigma2. h > 1 iterates
/// E[sigma2_{t+h}] = omega + (alpha + beta) E[sigma2_{t+h-1}].
double garch11_forecast(const Garch11Params& p, double last_return, double last_var, int horizon);

/// Iterates a one-step covariance forecast `next` (as produced by a filter)
/// forward to horizon h >= 1 under E[r r'] = Sigma. The DCC family iterates
/// variances and Q separately and renormalizes.
Matrix forecast_covariance(const AnyParams& p, const CovarianceFilter& f, int horizon);
double forecast_variance(const Garch11Params& p, const VarianceFilter& f, int horizon);

/// Filter state truncated to dates before t: the result's `next` is f's
/// forecast for date t, so forecasting from it starts at that origin.
CovarianceFilter state_at(const CovarianceFilter& f, std::size_t t);
VarianceFilter state_at(const VarianceFilter& f, Eigen::Index t);

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

struct SimulatedPath {
    Matrix returns;            // t_total x n
    std::vector<Matrix> cov;   // true conditional covariance used to draw each row
};

/// r_t = L_t z_t with L_t L_t' = Sigma_t and z_t ~ N(0, I). The process starts
/// from its unconditional state. Throws InvalidInput on nonstationary params.
SimulatedPath simulate(const AnyParams& p, std::size_t t_total, Rng& rng);

}  // namespace volrec::models
