#pragma once

#include "volrec/matrix.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace volrec::reconcile {

enum class Method { Shr, ShrA, ShrB };
enum class Option { A, B, Auto };

std::string_view to_string(Method m) noexcept;
Option option_from_string(std::string_view name);

/// Stacked vector (sigma_p^2, vech(Sigma)).
Vector stack(double sigma_p2, const Matrix& sigma);

/// c = (1, -a')' with a the aggregation vector of the weights.
Vector build_constraint(const Vector& weights);

/// Row t: (w'P_t w - s_p[t], vech(P_t) - vech(S_t)), with P the proxy path.
Matrix insample_errors(const Vector& univariate_path, const std::vector<Matrix>& cov_path,
                       const std::vector<Matrix>& proxy_path, const Vector& weights);

struct ErrorCovariance {
    Matrix omega;
    double lambda = 0.0;
    Eigen::Index n_obs = 0;
};

/// Shrinks the (uncentered) error second-moment matrix toward its diagonal
/// with the Schafer-Strimmer intensity. Throws DegenerateErrors when a column
/// is identically zero.
ErrorCovariance shrink_cov(const Matrix& errors);

struct Diagnostics {
    int iterations = 0;
    double kkt_residual = 0.0;
    bool psd = true;        // reconciled covariance positive semidefinite
    bool clamped = false;   // a nonpositive variance was clamped
    bool fallback = false;  // shr_A needed the augmented-Lagrangian fallback
    std::string note;
};

struct Result {
    Vector y_tilde;
    Matrix sigma_tilde;
    Method method = Method::Shr;
    bool correlation_ok = false;
    Diagnostics diagnostics;

    double sigma_p2() const { return y_tilde(0); }
};

/// Closed-form GLS projection onto c'y = 0. Throws SingularProjection when
/// c'Omega c is not positive.
Result reconcile_shr(const Vector& y_hat, const Matrix& omega, const Vector& c);

/// True iff every implied |rho_ij| <= 1 + 1e-12. Throws DegenerateCovariance
/// on a nonpositive diagonal.
bool correlation_valid(const Matrix& sigma, double tol = 1e-12);

/// GLS problem with the extra constraints sigma_ij^2 <= sigma_ii sigma_jj and
/// sigma_ii > 0, solved by SQP from the shr solution. Throws
/// InfeasibleReconciliation if no feasible point is found.
Result reconcile_shr_a(const Vector& y_hat, const Matrix& omega, const Vector& c);

/// Default Option B weights: Omega(0,0) for the portfolio entry and 1 for each
/// correlation. Length m + 1; entries at diagonal positions are unused.
Vector default_shr_b_weights(const Matrix& omega, Eigen::Index n);

/// Reconciliation on (sigma_p^2, rho) with the standard deviations fixed from
/// sigma_shr. w holds the diagonal of W; a zero weight pins that entry to its
/// base value.
Result reconcile_shr_b(double sigma_p2_hat, const Vector& rho_hat, const Matrix& sigma_shr, const Vector& w,
                       const Vector& weights);

/// shr, followed by Option A or B when the shr correlation matrix is invalid.
/// Auto selects B.
Result algorithm1(double sigma_p2_hat, const Matrix& sigma_hat, const Matrix& omega, const Vector& weights,
                  Option option);

/// Sum of squared GLS distance (y - y_hat)' Omega^{-1} (y - y_hat).
double gls_objective(const Vector& y, const Vector& y_hat, const Matrix& omega);

inline constexpr double kVarianceFloor = 1e-12;

}  // namespace volrec::reconcile
