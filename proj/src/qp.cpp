#include "volrec/qp.hpp"

#include "volrec/error.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace volrec::qp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Active-set factorization: J = L^{-T} Q and R upper triangular such that
/// the first q columns of J span the active normals in G's metric.
class Factor {
public:
    Factor(Matrix j, Eigen::Index n) : j_(std::move(j)), r_(Matrix::Zero(n, n)) {}

    Eigen::Index size() const noexcept { return q_; }

    /// z = J2 J2' np (step direction in primal space), r = R^{-1} J1' np.
    void directions(const Vector& np, Vector& z, Vector& r) const {
        const Eigen::Index n = j_.rows();
        const Vector d = j_.transpose() * np;
        z = j_.rightCols(n - q_) * d.tail(n - q_);
        r = r_.topLeftCorner(q_, q_).triangularView<Eigen::Upper>().solve(d.head(q_));
    }

    /// Appends constraint normal np; returns false if it is linearly dependent
    /// on the active set.
    bool add(const Vector& np) {
        const Eigen::Index n = j_.rows();
        Vector d = j_.transpose() * np;
        const double dnorm = d.norm();
        for (Eigen::Index k = n - 1; k > q_; --k) {
            rotate_columns(d(k - 1), d(k), k - 1, k);
        }
        if (!(std::abs(d(q_)) > 1e-12 * dnorm)) {
            return false;
        }
        r_.col(q_).head(q_ + 1) = d.head(q_ + 1);
        ++q_;
        return true;
    }

    /// Removes the active constraint at position pos.
    void drop(Eigen::Index pos) {
        for (Eigen::Index k = pos; k + 1 < q_; ++k) {
            r_.col(k) = r_.col(k + 1);
        }
        r_.col(q_ - 1).setZero();
        --q_;
        for (Eigen::Index k = pos; k < q_; ++k) {
            double a = r_(k, k);
            double b = r_(k + 1, k);
            const double h = std::hypot(a, b);
            if (h == 0.0) {
                continue;
            }
            a /= h;
            b /= h;
            // Reflection on rows k, k+1 of R and columns k, k+1 of J.
            for (Eigen::Index c = k; c < q_; ++c) {
                const double t1 = r_(k, c);
                const double t2 = r_(k + 1, c);
                r_(k, c) = a * t1 + b * t2;
                r_(k + 1, c) = b * t1 - a * t2;
            }
            r_(k + 1, k) = 0.0;
            for (Eigen::Index row = 0; row < j_.rows(); ++row) {
                const double t1 = j_(row, k);
                const double t2 = j_(row, k + 1);
                j_(row, k) = a * t1 + b * t2;
                j_(row, k + 1) = b * t1 - a * t2;
            }
        }
    }

private:
    void rotate_columns(double& x, double& y, Eigen::Index c1, Eigen::Index c2) {
        const double h = std::hypot(x, y);
        if (h == 0.0) {
            return;
        }
        const double a = x / h;
        const double b = y / h;
        x = h;
        y = 0.0;
        for (Eigen::Index row = 0; row < j_.rows(); ++row) {
            const double t1 = j_(row, c1);
            const double t2 = j_(row, c2);
            j_(row, c1) = a * t1 + b * t2;
            j_(row, c2) = b * t1 - a * t2;
        }
    }

    Matrix j_;
    Matrix r_;
    Eigen::Index q_ = 0;
};

}  // namespace

Solution solve(const Problem& p, int max_iterations) {
    const Eigen::Index n = p.g_mat.rows();
    const Eigen::Index me = p.eq.cols();
    const Eigen::Index mi = p.ineq.cols();
    if (p.g_mat.cols() != n || p.g_vec.size() != n || (me > 0 && p.eq.rows() != n) ||
        (mi > 0 && p.ineq.rows() != n) || p.eq0.size() != me || p.ineq0.size() != mi) {
        throw InvalidInput("qp::solve: inconsistent problem dimensions");
    }
    Eigen::LLT<Matrix> llt(p.g_mat);
    if (llt.info() != Eigen::Success) {
        throw NumericalFailure("qp::solve: Hessian is not positive definite");
    }
    Matrix l_inv_t = llt.matrixU().solve(Matrix::Identity(n, n));
    Factor factor(std::move(l_inv_t), n);

    Solution out;
    out.x = -llt.solve(p.g_vec);
    // Multipliers of the active set, in order of activation; active[k] >= me
    // means inequality active[k] - me.
    std::vector<Eigen::Index> active;
    std::vector<double> u;
    Vector z;
    Vector r;

    auto normal = [&](Eigen::Index c) -> Vector { return c < me ? Vector(p.eq.col(c)) : Vector(p.ineq.col(c - me)); };
    auto slack = [&](Eigen::Index c) {
        return c < me ? p.eq.col(c).dot(out.x) + p.eq0(c) : p.ineq.col(c - me).dot(out.x) + p.ineq0(c - me);
    };

    for (Eigen::Index c = 0; c < me; ++c) {
        const Vector np = normal(c);
        factor.directions(np, z, r);
        const double zn = z.dot(np);
        if (std::abs(zn) <= 1e-14 * np.squaredNorm()) {
            throw NumericalFailure("qp::solve: equality constraints are linearly dependent");
        }
        const double t = -slack(c) / zn;
        out.x += t * z;
        for (std::size_t k = 0; k < u.size(); ++k) {
            u[k] -= t * r(static_cast<Eigen::Index>(k));
        }
        u.push_back(t);
        active.push_back(c);
        if (!factor.add(np)) {
            throw NumericalFailure("qp::solve: equality constraints are linearly dependent");
        }
    }

    std::vector<char> is_active(static_cast<std::size_t>(mi), 0);
    const double feas_tol = 1e-12 * (1.0 + p.g_vec.cwiseAbs().maxCoeff() + (mi > 0 ? p.ineq0.cwiseAbs().maxCoeff() : 0.0));
    int iter = 0;
    while (true) {
        if (++iter > max_iterations) {
            throw NumericalFailure("qp::solve: iteration limit reached");
        }
        // Most violated inactive inequality.
        Eigen::Index chosen = -1;
        double worst = -feas_tol;
        for (Eigen::Index c = 0; c < mi; ++c) {
            if (is_active[static_cast<std::size_t>(c)]) {
                continue;
            }
            const double s = slack(me + c) / std::max(1.0, p.ineq.col(c).norm());
            if (s < worst) {
                worst = s;
                chosen = c;
            }
        }
        if (chosen < 0) {
            break;
        }
        const Eigen::Index cp = me + chosen;
        const Vector np = normal(cp);
        double u_new = 0.0;
        while (true) {
            factor.directions(np, z, r);
            // Partial step: the largest dual step keeping active inequality multipliers >= 0.
            double t1 = kInf;
            Eigen::Index drop_pos = -1;
            for (std::size_t k = 0; k < active.size(); ++k) {
                const auto rk = r(static_cast<Eigen::Index>(k));
                if (active[k] >= me && rk > 0.0) {
                    const double ratio = u[k] / rk;
                    if (ratio < t1) {
                        t1 = ratio;
                        drop_pos = static_cast<Eigen::Index>(k);
                    }
                }
            }
            const double zn = z.dot(np);
            const double t2 = z.norm() > 1e-14 * np.norm() ? -slack(cp) / zn : kInf;
            const double t = std::min(t1, t2);
            if (!std::isfinite(t)) {
                throw InfeasibleReconciliation("qp::solve: constraints admit no feasible point");
            }
            if (std::isfinite(t2)) {
                out.x += t * z;
            }
            for (std::size_t k = 0; k < active.size(); ++k) {
                u[k] -= t * r(static_cast<Eigen::Index>(k));
            }
            u_new += t;
            if (t == t2) {
                active.push_back(cp);
                u.push_back(u_new);
                is_active[static_cast<std::size_t>(chosen)] = 1;
                if (!factor.add(np)) {
                    throw NumericalFailure("qp::solve: degenerate active set");
                }
                break;
            }
            // Drop the blocking constraint and retry with the same violated one.
            const auto pos = static_cast<std::size_t>(drop_pos);
            is_active[static_cast<std::size_t>(active[pos] - me)] = 0;
            active.erase(active.begin() + static_cast<std::ptrdiff_t>(pos));
            u.erase(u.begin() + static_cast<std::ptrdiff_t>(pos));
            factor.drop(drop_pos);
            if (++iter > max_iterations) {
                throw NumericalFailure("qp::solve: iteration limit reached");
            }
        }
    }

    out.iterations = iter;
    out.value = 0.5 * out.x.dot(p.g_mat * out.x) + p.g_vec.dot(out.x);
    out.eq_multipliers = Vector::Zero(me);
    out.ineq_multipliers = Vector::Zero(mi);
    for (std::size_t k = 0; k < active.size(); ++k) {
        if (active[k] < me) {
            out.eq_multipliers(active[k]) = u[k];
        } else {
            out.ineq_multipliers(active[k] - me) = u[k];
        }
    }
    return out;
}

}  // namespace volrec::qp
