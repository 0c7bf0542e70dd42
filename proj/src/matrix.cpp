#include "volrec/matrix.hpp"

#include "volrec/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace volrec::mat {

std::size_t dim_from_vech_size(std::size_t m) {
    const auto n = static_cast<std::size_t>(
        std::llround((std::sqrt(8.0 * static_cast<double>(m) + 1.0) - 1.0) / 2.0));
    if (m == 0 || vech_size(n) != m) {
        throw InvalidInput("length " + std::to_string(m) + " is not a triangular number");
    }
    return n;
}

double max_asymmetry(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw InvalidInput("matrix is not square");
    }
    return (m - m.transpose()).cwiseAbs().maxCoeff();
}

bool is_symmetric(const Matrix& m, double tol) { return max_asymmetry(m) <= tol; }

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Vector vech(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw InvalidInput("vech requires a non-empty square matrix");
    }
    if (max_asymmetry(m) > kSymmetryTol) {
        throw InvalidInput("vech input asymmetric beyond tolerance");
    }
    const auto n = static_cast<std::size_t>(m.rows());
    Vector v(static_cast<Eigen::Index>(vech_size(n)));
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = j; i < m.rows(); ++i) {
            v(k++) = m(i, j);
        }
    }
    return v;
}

Matrix vech_inv(const Vector& v) {
    const auto n = static_cast<Eigen::Index>(dim_from_vech_size(static_cast<std::size_t>(v.size())));
    Matrix m(n, n);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j; i < n; ++i) {
            m(i, j) = v(k);
            m(j, i) = v(k);
            ++k;
        }
    }
    return m;
}

Vector vec(const Matrix& m) {
    return Eigen::Map<const Vector>(m.data(), m.size());
}

namespace {

template <typename Build>
const Matrix& cached(std::map<std::size_t, std::unique_ptr<const Matrix>>& cache, std::mutex& mu,
                     std::size_t n, Build build) {
    std::lock_guard lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) {
        it = cache.emplace(n, std::make_unique<const Matrix>(build(n))).first;
    }
    return *it->second;
}

Matrix build_duplication(std::size_t n) {
    const auto ni = static_cast<Eigen::Index>(n);
    Matrix d = Matrix::Zero(ni * ni, static_cast<Eigen::Index>(vech_size(n)));
    for (Eigen::Index j = 0; j < ni; ++j) {
        for (Eigen::Index i = 0; i < ni; ++i) {
            const auto k = static_cast<Eigen::Index>(
                vech_index(n, static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
            d(i + j * ni, k) = 1.0;
        }
    }
    return d;
}

Matrix build_duplication_pinv(std::size_t n) {
    const Matrix& d = duplication(n);
    // D'D is diagonal: 1 for diagonal elements, 2 for off-diagonal ones.
    const Vector dtd = d.colwise().sum().transpose();
    return dtd.cwiseInverse().asDiagonal() * d.transpose();
}

}  // namespace

const Matrix& duplication(std::size_t n) {
    if (n == 0) {
        throw InvalidInput("duplication matrix requires n >= 1");
    }
    static std::map<std::size_t, std::unique_ptr<const Matrix>> cache;
    static std::mutex mu;
    return cached(cache, mu, n, build_duplication);
}

const Matrix& duplication_pinv(std::size_t n) {
    if (n == 0) {
        throw InvalidInput("duplication pseudo-inverse requires n >= 1");
    }
    static std::map<std::size_t, std::unique_ptr<const Matrix>> cache;
    static std::mutex mu;
    return cached(cache, mu, n, build_duplication_pinv);
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

CorrelationDecomposition cov_to_cor(const Matrix& sigma) {
    if (sigma.rows() != sigma.cols()) {
        throw InvalidInput("covariance is not square");
    }
    const Vector diag = sigma.diagonal();
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
        if (!(diag(i) > 0.0)) {
            throw DegenerateCovariance("nonpositive variance at index " + std::to_string(i));
        }
    }
    CorrelationDecomposition out;
    out.std_dev = diag.cwiseSqrt();
    const Vector inv = out.std_dev.cwiseInverse();
    out.correlation = inv.asDiagonal() * sigma * inv.asDiagonal();
    out.correlation = symmetrize(out.correlation);
    out.correlation.diagonal().setOnes();
    return out;
}

Vector aggregation_vector(const Vector& weights) {
    return scaled_aggregation_vector(weights, Vector::Ones(weights.size()));
}

Vector scaled_aggregation_vector(const Vector& weights, const Vector& std_dev) {
    if (weights.size() != std_dev.size() || weights.size() == 0) {
        throw InvalidInput("weights and standard deviations must have equal non-zero length");
    }
    const auto n = static_cast<std::size_t>(weights.size());
    const Vector ws = weights.cwiseProduct(std_dev);
    Vector a(static_cast<Eigen::Index>(vech_size(n)));
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < ws.size(); ++j) {
        a(k++) = ws(j) * ws(j);
        for (Eigen::Index i = j + 1; i < ws.size(); ++i) {
            a(k++) = 2.0 * ws(i) * ws(j);
        }
    }
    return a;
}

Matrix cholesky_lower(const Matrix& m) {
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) {
        throw InvalidInput("matrix is not positive definite");
    }
    return llt.matrixL();
}

double min_eigenvalue(const Matrix& sym) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double spectral_radius(const Matrix& m) {
    Eigen::EigenSolver<Matrix> es(m, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace volrec::mat
