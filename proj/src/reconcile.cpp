#include "volrec/reconcile.hpp"

#include "volrec/error.hpp"
#include "volrec/optim.hpp"
#include "volrec/qp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace volrec::reconcile {

namespace {

struct Pair {
    Eigen::Index k;   // vech position of (i, j)
    Eigen::Index ii;  // vech position of (i, i)
    Eigen::Index jj;  // vech position of (j, j)
};

struct Layout {
    Eigen::Index n = 0;
    std::vector<Eigen::Index> diag;
    std::vector<Pair> pairs;
};

Layout layout_for(Eigen::Index n) {
    Layout lay;
    lay.n = n;
    const auto un = static_cast<std::size_t>(n);
    for (std::size_t j = 0; j < un; ++j) {
        lay.diag.push_back(static_cast<Eigen::Index>(mat::vech_index(un, j, j)));
    }
    for (std::size_t j = 0; j < un; ++j) {
        for (std::size_t i = j + 1; i < un; ++i) {
            lay.pairs.push_back({static_cast<Eigen::Index>(mat::vech_index(un, i, j)),
                                 static_cast<Eigen::Index>(mat::vech_index(un, i, i)),
                                 static_cast<Eigen::Index>(mat::vech_index(un, j, j))});
        }
    }
    return lay;
}

Eigen::Index dim_of_stacked(const Vector& y) {
    if (y.size() < 2) {
        throw InvalidInput("stacked vector needs at least two entries");
    }
    return static_cast<Eigen::Index>(mat::dim_from_vech_size(static_cast<std::size_t>(y.size() - 1)));
}

bool is_psd(const Matrix& s) {
    const double scale = std::max(s.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    return mat::min_eigenvalue(s) >= -1e-12 * scale;
}

Result finish(const Vector& y, Method method) {
    Result out;
    out.y_tilde = y;
    out.sigma_tilde = mat::vech_inv(y.tail(y.size() - 1));
    out.method = method;
    const bool diag_ok = (out.sigma_tilde.diagonal().array() > 0.0).all();
    out.correlation_ok = diag_ok && correlation_valid(out.sigma_tilde);
    out.diagnostics.psd = is_psd(out.sigma_tilde);
    return out;
}

/// Clips |sigma_ij| to sqrt(sigma_ii sigma_jj) and restores coherence through
/// the portfolio entry.
void polish(Vector& sigma, const Layout& lay) {
    for (const Pair& p : lay.pairs) {
        const double bound = std::sqrt(sigma(p.ii) * sigma(p.jj));
        if (std::abs(sigma(p.k)) > bound) {
            sigma(p.k) = std::copysign(bound, sigma(p.k));
        }
    }
}

/// Option A on the coherent subspace y = T sigma, T = [a'; I].
class OptionA {
public:
    OptionA(const Vector& y_hat, const Matrix& omega, const Vector& c)
        : lay_(layout_for(dim_of_stacked(y_hat))), a_(-c.tail(c.size() - 1)) {
        const Eigen::Index m = a_.size();
        Eigen::LLT<Matrix> llt(omega);
        if (llt.info() != Eigen::Success) {
            throw InvalidInput("reconcile_shr_a: Omega is not positive definite");
        }
        Matrix t(m + 1, m);
        t.row(0) = a_.transpose();
        t.bottomRows(m) = Matrix::Identity(m, m);
        const Matrix omega_inv_t = llt.solve(t);
        hess_ = mat::symmetrize(2.0 * t.transpose() * omega_inv_t);
        lin_ = -2.0 * omega_inv_t.transpose() * y_hat;
        c0_ = y_hat.dot(llt.solve(y_hat));
        double mean_var = 0.0;
        for (Eigen::Index d : lay_.diag) {
            mean_var += std::abs(y_hat(1 + d));
        }
        mean_var /= static_cast<double>(lay_.n);
        eps_ = std::max(1e-8 * mean_var, 1e-300);
    }

    const Layout& layout() const noexcept { return lay_; }
    const Vector& a() const noexcept { return a_; }
    double eps() const noexcept { return eps_; }

    double f(const Vector& s) const { return 0.5 * s.dot(hess_ * s) + lin_.dot(s) + c0_; }
    Vector grad(const Vector& s) const { return hess_ * s + lin_; }

    double h(const Vector& s, const Pair& p) const { return s(p.k) * s(p.k) - s(p.ii) * s(p.jj); }

    double violation(const Vector& s) const {
        double v = 0.0;
        for (const Pair& p : lay_.pairs) {
            v += std::max(0.0, h(s, p));
        }
        for (Eigen::Index d : lay_.diag) {
            v += std::max(0.0, eps_ - s(d));
        }
        return v;
    }

    /// Sequential quadratic programming with an l1 merit line search.
    bool sqp(Vector& s, Diagnostics& diag) const {
        const Eigen::Index m = s.size();
        const auto np = static_cast<Eigen::Index>(lay_.pairs.size());
        const auto nd = static_cast<Eigen::Index>(lay_.diag.size());
        Vector u_pairs = Vector::Zero(np);
        double penalty = 0.0;
        for (int it = 1; it <= 200; ++it) {
            diag.iterations = it;
            qp::Problem prob;
            prob.g_vec = grad(s);
            prob.eq.resize(m, 0);
            prob.eq0.resize(0);
            prob.ineq = Matrix::Zero(m, np + nd);
            prob.ineq0.resize(np + nd);
            Matrix lag = hess_;
            for (Eigen::Index k = 0; k < np; ++k) {
                const Pair& p = lay_.pairs[static_cast<std::size_t>(k)];
                prob.ineq(p.k, k) = -2.0 * s(p.k);
                prob.ineq(p.ii, k) += s(p.jj);
                prob.ineq(p.jj, k) += s(p.ii);
                prob.ineq0(k) = -h(s, p);
                lag(p.k, p.k) += 2.0 * u_pairs(k);
                lag(p.ii, p.jj) -= u_pairs(k);
                lag(p.jj, p.ii) -= u_pairs(k);
            }
            for (Eigen::Index k = 0; k < nd; ++k) {
                const Eigen::Index d = lay_.diag[static_cast<std::size_t>(k)];
                prob.ineq(d, np + k) = 1.0;
                prob.ineq0(np + k) = s(d) - eps_;
            }
            Eigen::LLT<Matrix> lag_llt(lag);
            prob.g_mat = lag_llt.info() == Eigen::Success ? lag : hess_;

            qp::Solution sol;
            try {
                sol = qp::solve(prob);
            } catch (const Error&) {
                return false;
            }
            const Vector& d = sol.x;
            u_pairs = sol.ineq_multipliers.head(np);
            penalty = std::max(penalty, 2.0 * (sol.ineq_multipliers.size() > 0 ? sol.ineq_multipliers.maxCoeff() : 0.0));

            const Vector g = prob.g_vec;
            const double v0 = violation(s);
            const double phi0 = f(s) + penalty * v0;
            const double slope = g.dot(d) - penalty * v0;
            double step = 1.0;
            Vector trial = s + d;
            bool accepted = false;
            for (int ls = 0; ls < 40; ++ls) {
                trial = s + step * d;
                const double phi = f(trial) + penalty * violation(trial);
                if (phi <= phi0 + 1e-4 * step * std::min(slope, 0.0) + 1e-15 * std::abs(phi0)) {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) {
                return false;
            }
            s = trial;
            const double scale = 1.0 + s.cwiseAbs().maxCoeff();
            diag.kkt_residual = std::max((prob.g_mat * d).cwiseAbs().maxCoeff() / (1.0 + g.cwiseAbs().maxCoeff()),
                                         violation(s) / (scale * scale));
            if (step == 1.0 && d.cwiseAbs().maxCoeff() <= 1e-10 * scale) {
                return true;
            }
            if (diag.kkt_residual <= 1e-6 && step * d.cwiseAbs().maxCoeff() <= 1e-12 * scale) {
                return true;
            }
        }
        return diag.kkt_residual <= 1e-6;
    }

    /// Augmented Lagrangian with quasi-Newton inner solves.
    bool augmented_lagrangian(Vector& s, Diagnostics& diag) const {
        const std::size_t n_con = lay_.pairs.size() + lay_.diag.size();
        std::vector<double> lam(n_con, 0.0);
        const double f_scale = std::max(std::abs(f(s)), 1.0);
        double mu = 10.0 / f_scale;
        auto constraint = [&](const Vector& x, std::size_t k) {
            return k < lay_.pairs.size() ? h(x, lay_.pairs[k]) : eps_ - x(lay_.diag[k - lay_.pairs.size()]);
        };
        double prev_viol = violation(s);
        for (int outer = 0; outer < 30; ++outer) {
            auto lagr = [&](const Vector& x) {
                double v = f(x) / f_scale;
                for (std::size_t k = 0; k < n_con; ++k) {
                    const double t = std::max(0.0, lam[k] + mu * constraint(x, k));
                    v += (t * t - lam[k] * lam[k]) / (2.0 * mu);
                }
                return v;
            };
            optim::Options opt;
            opt.max_iterations = 500;
            opt.rel_tol = 1e-12;
            const optim::Result r = optim::bfgs(lagr, s, opt);
            s = r.x;
            diag.iterations += r.iterations;
            for (std::size_t k = 0; k < n_con; ++k) {
                lam[k] = std::max(0.0, lam[k] + mu * constraint(s, k));
            }
            const double viol = violation(s);
            const double scale = 1.0 + s.cwiseAbs().maxCoeff();
            if (viol <= 1e-10 * scale * scale) {
                return true;
            }
            if (viol > 0.25 * prev_viol) {
                mu *= 10.0;
            }
            prev_viol = viol;
        }
        return false;
    }

private:
    Layout lay_;
    Vector a_;
    Matrix hess_;
    Vector lin_;
    double c0_ = 0.0;
    double eps_ = 0.0;
};

}  // namespace

std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::Shr: return "shr";
        case Method::ShrA: return "shr_A";
        case Method::ShrB: return "shr_B";
    }
    return "?";
}

Option option_from_string(std::string_view name) {
    if (name == "A" || name == "a") return Option::A;
    if (name == "B" || name == "b") return Option::B;
    if (name == "auto") return Option::Auto;
    throw InvalidInput("unknown reconciliation option '" + std::string(name) + "' (expected A, B or auto)");
}

Vector stack(double sigma_p2, const Matrix& sigma) {
    const Vector v = mat::vech(sigma);
    Vector y(v.size() + 1);
    y(0) = sigma_p2;
    y.tail(v.size()) = v;
    return y;
}

Vector build_constraint(const Vector& weights) {
    const Vector a = mat::aggregation_vector(weights);
    Vector c(a.size() + 1);
    c(0) = 1.0;
    c.tail(a.size()) = -a;
    return c;
}

Matrix insample_errors(const Vector& univariate_path, const std::vector<Matrix>& cov_path,
                       const std::vector<Matrix>& proxy_path, const Vector& weights) {
    const auto t_len = static_cast<std::size_t>(univariate_path.size());
    if (cov_path.size() != t_len || proxy_path.size() != t_len || t_len == 0) {
        throw InvalidInput("insample_errors: paths must be non-empty and of equal length");
    }
    const auto n = static_cast<std::size_t>(weights.size());
    const auto m = static_cast<Eigen::Index>(mat::vech_size(n));
    Matrix e(static_cast<Eigen::Index>(t_len), m + 1);
    for (std::size_t t = 0; t < t_len; ++t) {
        const Matrix& s = cov_path[t];
        const Matrix& p = proxy_path[t];
        if (s.rows() != weights.size() || p.rows() != weights.size()) {
            throw InvalidInput("insample_errors: dimension mismatch at row " + std::to_string(t));
        }
        const auto row = static_cast<Eigen::Index>(t);
        e(row, 0) = weights.dot(p * weights) - univariate_path(row);
        Eigen::Index k = 1;
        for (Eigen::Index j = 0; j < s.cols(); ++j) {
            for (Eigen::Index i = j; i < s.rows(); ++i) {
                e(row, k++) = p(i, j) - s(i, j);
            }
        }
    }
    return e;
}

ErrorCovariance shrink_cov(const Matrix& errors) {
    const Eigen::Index t_len = errors.rows();
    const Eigen::Index k = errors.cols();
    if (t_len < 2) {
        throw InvalidInput("shrink_cov: need at least two error rows");
    }
    const double tn = static_cast<double>(t_len);
    const Matrix s = errors.transpose() * errors / tn;
    for (Eigen::Index i = 0; i < k; ++i) {
        if (!(s(i, i) > 0.0)) {
            throw DegenerateErrors("shrink_cov: error column " + std::to_string(i) + " has zero variance");
        }
    }
    const Vector inv_sd = s.diagonal().cwiseSqrt().cwiseInverse();
    const Matrix xs = errors * inv_sd.asDiagonal();
    const Matrix corr = inv_sd.asDiagonal() * s * inv_sd.asDiagonal();
    const Matrix xs2 = xs.cwiseAbs2();
    // Estimated variance of each sample correlation.
    const Matrix v = (xs2.transpose() * xs2 - (xs.transpose() * xs).cwiseAbs2() / tn) / (tn * (tn - 1.0));
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
        for (Eigen::Index i = 0; i < k; ++i) {
            if (i != j) {
                num += v(i, j);
                den += corr(i, j) * corr(i, j);
            }
        }
    }
    double lambda = den > 0.0 ? std::clamp(num / den, 0.0, 1.0) : 1.0;

    ErrorCovariance out;
    out.n_obs = t_len;
    const Matrix target = s.diagonal().asDiagonal();
    const double floor = 1e-10 * s.diagonal().maxCoeff();
    for (int tries = 0; tries < 60; ++tries) {
        out.omega = lambda * target + (1.0 - lambda) * s;
        if (lambda >= 1.0 || mat::min_eigenvalue(out.omega) > floor) {
            break;
        }
        lambda = std::min(1.0, lambda + std::max(1e-6, 0.5 * (1.0 - lambda)));
    }
    out.omega = mat::symmetrize(out.omega);
    out.lambda = lambda;
    return out;
}

double gls_objective(const Vector& y, const Vector& y_hat, const Matrix& omega) {
    const Vector d = y - y_hat;
    return d.dot(omega.llt().solve(d));
}

Result reconcile_shr(const Vector& y_hat, const Matrix& omega, const Vector& c) {
    if (omega.rows() != y_hat.size() || omega.cols() != y_hat.size() || c.size() != y_hat.size()) {
        throw InvalidInput("reconcile_shr: dimension mismatch");
    }
    (void)dim_of_stacked(y_hat);
    const Vector oc = omega * c;
    const double coc = c.dot(oc);
    if (!(coc > 1e-300) || !std::isfinite(coc)) {
        throw SingularProjection("reconcile_shr: c' Omega c is not positive");
    }
    const Vector y = y_hat - oc * (c.dot(y_hat) / coc);
    return finish(y, Method::Shr);
}

bool correlation_valid(const Matrix& sigma, double tol) {
    for (Eigen::Index i = 0; i < sigma.rows(); ++i) {
        if (!(sigma(i, i) > 0.0)) {
            throw DegenerateCovariance("correlation_valid: nonpositive variance at index " + std::to_string(i));
        }
    }
    for (Eigen::Index j = 0; j < sigma.cols(); ++j) {
        for (Eigen::Index i = j + 1; i < sigma.rows(); ++i) {
            const double rho = sigma(i, j) / std::sqrt(sigma(i, i) * sigma(j, j));
            if (!(std::abs(rho) <= 1.0 + tol)) {
                return false;
            }
        }
    }
    return true;
}

Result reconcile_shr_a(const Vector& y_hat, const Matrix& omega, const Vector& c) {
    const Result shr = reconcile_shr(y_hat, omega, c);
    const OptionA prob(y_hat, omega, c);
    const Vector start = shr.y_tilde.tail(shr.y_tilde.size() - 1);

    Diagnostics diag;
    Vector s = start;
    bool ok = prob.sqp(s, diag);
    if (!ok) {
        s = start;
        diag.fallback = true;
        ok = prob.augmented_lagrangian(s, diag);
    }
    for (Eigen::Index d : prob.layout().diag) {
        ok = ok && s(d) > 0.0;
    }
    if (!ok) {
        throw InfeasibleReconciliation("reconcile_shr_a: no feasible point found");
    }
    polish(s, prob.layout());
    Vector y(s.size() + 1);
    y(0) = prob.a().dot(s);
    y.tail(s.size()) = s;
    Result out = finish(y, Method::ShrA);
    if (!out.correlation_ok) {
        throw InfeasibleReconciliation("reconcile_shr_a: solution violates the correlation bounds");
    }
    const bool psd = out.diagnostics.psd;
    out.diagnostics = diag;
    out.diagnostics.psd = psd;
    return out;
}

Vector default_shr_b_weights(const Matrix& omega, Eigen::Index n) {
    Vector w = Vector::Ones(static_cast<Eigen::Index>(mat::vech_size(static_cast<std::size_t>(n))) + 1);
    w(0) = omega(0, 0);
    return w;
}

Result reconcile_shr_b(double sigma_p2_hat, const Vector& rho_hat, const Matrix& sigma_shr, const Vector& w,
                       const Vector& weights) {
    const Eigen::Index n = weights.size();
    const Eigen::Index m = rho_hat.size();
    if (sigma_shr.rows() != n || sigma_shr.cols() != n ||
        m != static_cast<Eigen::Index>(mat::vech_size(static_cast<std::size_t>(n))) || w.size() != m + 1) {
        throw InvalidInput("reconcile_shr_b: dimension mismatch");
    }
    if ((w.array() < 0.0).any()) {
        throw InvalidInput("reconcile_shr_b: weights must be nonnegative");
    }
    const Vector diag = sigma_shr.diagonal();
    if ((diag.array() <= 0.0).any()) {
        throw DegenerateCovariance("reconcile_shr_b: reconciled variances must be positive");
    }
    const Vector sd = diag.cwiseSqrt();
    const Vector a_sigma = mat::scaled_aggregation_vector(weights, sd);
    const Layout lay = layout_for(n);

    // Unknowns: x0 = sigma_p^2 and the off-diagonal correlations; a zero
    // weight turns an unknown into a constant.
    struct Var {
        Eigen::Index pos;  // 0 for sigma_p^2, 1 + vech index otherwise
        double coef;       // coefficient in sigma_p^2 - a' rho = 0
    };
    std::vector<Var> free;
    Vector x = Vector::Zero(m + 1);
    x(0) = sigma_p2_hat;
    x.tail(m) = rho_hat;
    for (Eigen::Index d : lay.diag) {
        x(1 + d) = 1.0;
    }
    double constant = x(0) * (w(0) > 0.0 ? 0.0 : 1.0);
    for (Eigen::Index d : lay.diag) {
        constant -= a_sigma(d);
    }
    if (w(0) > 0.0) {
        free.push_back({0, 1.0});
    }
    for (const Pair& p : lay.pairs) {
        if (w(1 + p.k) > 0.0) {
            free.push_back({1 + p.k, -a_sigma(p.k)});
        } else {
            if (std::abs(x(1 + p.k)) > 1.0) {
                throw InfeasibleReconciliation("reconcile_shr_b: pinned correlation outside [-1, 1]");
            }
            constant -= a_sigma(p.k) * x(1 + p.k);
        }
    }

    const auto nf = static_cast<Eigen::Index>(free.size());
    int iterations = 0;
    if (nf == 0) {
        if (std::abs(constant) > 1e-10 * (1.0 + std::abs(x(0)))) {
            throw InfeasibleReconciliation("reconcile_shr_b: all entries pinned and incoherent");
        }
    } else {
        qp::Problem prob;
        prob.g_mat = Matrix::Zero(nf, nf);
        prob.g_vec.resize(nf);
        prob.eq.resize(nf, 1);
        prob.eq0 = Vector::Constant(1, constant);
        Eigen::Index n_box = 0;
        for (const Var& v : free) {
            n_box += v.pos > 0 ? 2 : 0;
        }
        prob.ineq = Matrix::Zero(nf, n_box);
        prob.ineq0.resize(n_box);
        Eigen::Index b = 0;
        for (Eigen::Index k = 0; k < nf; ++k) {
            const Var& v = free[static_cast<std::size_t>(k)];
            const double wk = w(v.pos);
            prob.g_mat(k, k) = 2.0 / wk;
            prob.g_vec(k) = -2.0 * x(v.pos) / wk;
            prob.eq(k, 0) = v.coef;
            if (v.pos > 0) {
                prob.ineq(k, b) = 1.0;
                prob.ineq0(b++) = 1.0;
                prob.ineq(k, b) = -1.0;
                prob.ineq0(b++) = 1.0;
            }
        }
        if (prob.eq.col(0).cwiseAbs().maxCoeff() == 0.0) {
            if (std::abs(constant) > 1e-10 * (1.0 + std::abs(x(0)))) {
                throw InfeasibleReconciliation("reconcile_shr_b: coherence cannot be met");
            }
            prob.eq.resize(nf, 0);
            prob.eq0.resize(0);
        }
        const qp::Solution sol = qp::solve(prob);
        iterations = sol.iterations;
        for (Eigen::Index k = 0; k < nf; ++k) {
            const Var& v = free[static_cast<std::size_t>(k)];
            x(v.pos) = v.pos > 0 ? std::clamp(sol.x(k), -1.0, 1.0) : sol.x(k);
        }
    }

    const Vector rho = x.tail(m);
    Matrix sigma(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j; i < n; ++i) {
            const double r = rho(static_cast<Eigen::Index>(mat::vech_index(static_cast<std::size_t>(n),
                                                                           static_cast<std::size_t>(i),
                                                                           static_cast<std::size_t>(j))));
            sigma(i, j) = sigma(j, i) = i == j ? diag(i) : sd(i) * sd(j) * r;
        }
    }
    Result out = finish(stack(x(0), sigma), Method::ShrB);
    out.diagnostics.iterations = iterations;
    out.diagnostics.kkt_residual = std::abs(x(0) - a_sigma.dot(rho));
    return out;
}

Result algorithm1(double sigma_p2_hat, const Matrix& sigma_hat, const Matrix& omega, const Vector& weights,
                  Option option) {
    bool clamped = false;
    if (!(sigma_p2_hat > kVarianceFloor)) {
        sigma_p2_hat = kVarianceFloor;
        clamped = true;
    }
    Matrix base = sigma_hat;
    for (Eigen::Index i = 0; i < base.rows(); ++i) {
        if (!(base(i, i) > kVarianceFloor)) {
            base(i, i) = kVarianceFloor;
            clamped = true;
        }
    }
    const Vector y_hat = stack(sigma_p2_hat, base);
    const Vector c = build_constraint(weights);
    Result shr = reconcile_shr(y_hat, omega, c);
    shr.diagnostics.clamped = clamped;
    if (shr.correlation_ok) {
        return shr;
    }

    auto option_b = [&](std::string note) {
        Matrix sigma_shr = shr.sigma_tilde;
        bool floor_hit = clamped;
        for (Eigen::Index i = 0; i < sigma_shr.rows(); ++i) {
            if (!(sigma_shr(i, i) > kVarianceFloor)) {
                sigma_shr(i, i) = kVarianceFloor;
                floor_hit = true;
            }
        }
        const Vector rho_hat = mat::vech(mat::cov_to_cor(base).correlation);
        Result b = reconcile_shr_b(sigma_p2_hat, rho_hat, sigma_shr, default_shr_b_weights(omega, weights.size()),
                                   weights);
        b.diagnostics.clamped = floor_hit;
        b.diagnostics.note = std::move(note);
        return b;
    };

    if (option == Option::A) {
        try {
            Result a = reconcile_shr_a(y_hat, omega, c);
            a.diagnostics.clamped = clamped;
            return a;
        } catch (const InfeasibleReconciliation& e) {
            return option_b(std::string("shr_A failed, used Option B: ") + e.what());
        }
    }
    return option_b({});
}

}  // namespace volrec::reconcile
