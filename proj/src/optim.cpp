#include "volrec/optim.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <cmath>
#include <limits>
#include <memory>

namespace volrec::optim {

namespace {

constexpr double kHuge = 1e300;

struct Context {
    const Objective* f;
    Eigen::Index n;
};

Vector to_eigen(const gsl_vector* v) {
    Vector out(static_cast<Eigen::Index>(v->size));
    for (std::size_t i = 0; i < v->size; ++i) {
        out(static_cast<Eigen::Index>(i)) = gsl_vector_get(v, i);
    }
    return out;
}

void to_gsl(const Vector& x, gsl_vector* v) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        gsl_vector_set(v, static_cast<std::size_t>(i), x(i));
    }
}

double safe_eval(const Objective& f, const Vector& x) {
    const double v = f(x);
    return std::isfinite(v) ? v : kHuge;
}

double f_trampoline(const gsl_vector* v, void* params) {
    const auto* ctx = static_cast<const Context*>(params);
    return safe_eval(*ctx->f, to_eigen(v));
}

void df_trampoline(const gsl_vector* v, void* params, gsl_vector* g) {
    const auto* ctx = static_cast<const Context*>(params);
    to_gsl(numerical_gradient(*ctx->f, to_eigen(v)), g);
}

void fdf_trampoline(const gsl_vector* v, void* params, double* f, gsl_vector* g) {
    *f = f_trampoline(v, params);
    df_trampoline(v, params, g);
}

struct GslVectorDeleter {
    void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
using GslVector = std::unique_ptr<gsl_vector, GslVectorDeleter>;

GslVector make_vector(const Vector& x) {
    GslVector v(gsl_vector_alloc(static_cast<std::size_t>(x.size())));
    to_gsl(x, v.get());
    return v;
}

bool small_change(double prev, double cur, double tol) {
    return std::abs(cur - prev) <= tol * (std::abs(cur) + tol);
}

struct DisableGslAbort {
    DisableGslAbort() { gsl_set_error_handler_off(); }
};

}  // namespace

Vector numerical_gradient(const Objective& f, const Vector& x, double h) {
    Vector g(x.size());
    Vector xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double step = h * std::max(1.0, std::abs(x(i)));
        xp(i) = x(i) + step;
        const double fp = safe_eval(f, xp);
        xp(i) = x(i) - step;
        const double fm = safe_eval(f, xp);
        xp(i) = x(i);
        g(i) = (fp - fm) / (2.0 * step);
        if (!std::isfinite(g(i))) {
            g(i) = 0.0;
        }
    }
    return g;
}

Result nelder_mead(const Objective& f, const Vector& x0, const Options& options) {
    static const DisableGslAbort guard;
    const auto n = static_cast<std::size_t>(x0.size());
    Context ctx{&f, x0.size()};
    gsl_multimin_function fn{&f_trampoline, n, &ctx};

    auto x = make_vector(x0);
    auto step = make_vector(Vector::Constant(x0.size(), options.initial_step));
    std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> s(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n), &gsl_multimin_fminimizer_free);
    gsl_multimin_fminimizer_set(s.get(), &fn, x.get(), step.get());

    Result r;
    double prev = s->fval;
    int stall = 0;
    // A simplex can leave the best value unchanged for many iterations while
    // contracting, so the value criterion needs several consecutive hits.
    const int stall_needed = 4 * static_cast<int>(n) + 4;
    for (r.iterations = 1; r.iterations <= options.max_iterations; ++r.iterations) {
        if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) {
            r.message = "simplex iteration made no progress";
            r.converged = true;
            break;
        }
        const double cur = s->fval;
        stall = small_change(prev, cur, options.rel_tol) ? stall + 1 : 0;
        prev = cur;
        if (gsl_multimin_fminimizer_size(s.get()) < options.size_tol || stall >= stall_needed) {
            r.converged = true;
            break;
        }
    }
    r.x = to_eigen(gsl_multimin_fminimizer_x(s.get()));
    r.value = s->fval;
    if (!r.converged) {
        r.message = "iteration limit reached";
    }
    return r;
}

Result bfgs(const Objective& f, const Vector& x0, const Options& options) {
    static const DisableGslAbort guard;
    const auto n = static_cast<std::size_t>(x0.size());
    Context ctx{&f, x0.size()};
    gsl_multimin_function_fdf fn{&f_trampoline, &df_trampoline, &fdf_trampoline, n, &ctx};

    auto x = make_vector(x0);
    std::unique_ptr<gsl_multimin_fdfminimizer, decltype(&gsl_multimin_fdfminimizer_free)> s(
        gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, n),
        &gsl_multimin_fdfminimizer_free);
    gsl_multimin_fdfminimizer_set(s.get(), &fn, x.get(), options.initial_step, 0.1);

    Result r;
    double prev = s->f;
    for (r.iterations = 1; r.iterations <= options.max_iterations; ++r.iterations) {
        const int status = gsl_multimin_fdfminimizer_iterate(s.get());
        if (status == GSL_ENOPROG) {
            // Line search cannot improve: at an optimum up to gradient noise.
            r.converged = true;
            r.message = "line search made no progress";
            break;
        }
        if (status != GSL_SUCCESS) {
            r.message = gsl_strerror(status);
            break;
        }
        const double cur = s->f;
        const bool done = small_change(prev, cur, options.rel_tol);
        prev = cur;
        if (done) {
            r.converged = true;
            break;
        }
    }
    r.x = to_eigen(gsl_multimin_fdfminimizer_x(s.get()));
    r.value = s->f;
    if (!r.converged && r.message.empty()) {
        r.message = "iteration limit reached";
    }
    return r;
}

}  // namespace volrec::optim
