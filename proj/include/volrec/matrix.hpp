#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace volrec {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace mat {

/// Absolute tolerance for treating a matrix as symmetric.
inline constexpr double kSymmetryTol = 1e-12;

/// Half-vectorization length n(n+1)/2.
constexpr std::size_t vech_size(std::size_t n) noexcept { return n * (n + 1) / 2; }

/// Position of element (i, j), i >= j, inside vech of an n x n matrix.
/// Ordering is column-major lower triangle: s11, s21, ..., sn1, s22, s32, ..., snn.
constexpr std::size_t vech_index(std::size_t n, std::size_t i, std::size_t j) noexcept {
    if (i < j) {
        const std::size_t t = i;
        i = j;
        j = t;
    }
    return j * n - j * (j + 1) / 2 + i;
}

/// Recovers n from a half-vectorization length; throws InvalidInput when the
/// length is not a triangular number.
std::size_t dim_from_vech_size(std::size_t m);

double max_asymmetry(const Matrix& m);
bool is_symmetric(const Matrix& m, double tol = kSymmetryTol);

/// (M + M') / 2.
Matrix symmetrize(const Matrix& m);

Vector vech(const Matrix& m);
Matrix vech_inv(const Vector& v);

/// Column-stacking vec operator.
Vector vec(const Matrix& m);

/// n^2 x n(n+1)/2 duplication matrix with vec(M) = D vech(M). Cached per n.
const Matrix& duplication(std::size_t n);

/// (D'D)^{-1} D', the left inverse of the duplication matrix. Cached per n.
const Matrix& duplication_pinv(std::size_t n);

Matrix kron(const Matrix& a, const Matrix& b);

struct CorrelationDecomposition {
    Matrix correlation;  // unit diagonal
    Vector std_dev;      // sqrt of the input diagonal
};

/// Splits a covariance into S R S. Entries of R are not clamped, so the
/// caller can detect |rho| > 1 on invalid inputs.
CorrelationDecomposition cov_to_cor(const Matrix& sigma);

/// a = D'(w (x) w), so that a' vech(S) = w' S w for symmetric S.
Vector aggregation_vector(const Vector& weights);

/// D'(S (x) S)(w (x) w) for S = diag(std_dev): the aggregation vector that
/// maps vech of a correlation matrix to the portfolio variance.
Vector scaled_aggregation_vector(const Vector& weights, const Vector& std_dev);

/// Lower Cholesky factor; throws InvalidInput when m is not positive definite.
Matrix cholesky_lower(const Matrix& m);

double min_eigenvalue(const Matrix& sym);

/// Largest eigenvalue modulus of a general square matrix.
double spectral_radius(const Matrix& m);

}  // namespace mat
}  // namespace volrec
