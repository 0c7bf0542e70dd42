#include "volrec/dgp.hpp"

#include "volrec/error.hpp"

#include <string>

namespace volrec::dgp {

namespace {

void require_dim(Eigen::Index n, const char* who) {
    if (n < 1) {
        throw InvalidInput(std::string(who) + ": need at least one asset");
    }
}

template <typename Draw, typename Accept>
auto rejection(const char* who, Draw draw, Accept accept) {
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        auto p = draw();
        if (accept(p)) {
            return p;
        }
    }
    throw SamplerExhausted(std::string(who) + ": no acceptable draw in " + std::to_string(kMaxAttempts) +
                           " attempts");
}

/// Intercepts giving unconditional variances u_i ~ U(0.5, 1.5) for GARCH marginals.
double garch_intercept(double alpha, double beta, Rng& rng) { return (1.0 - alpha - beta) * rng.uniform(0.5, 1.5); }

}  // namespace

Matrix sample_c(Eigen::Index n, Rng& rng) {
    require_dim(n, "sample_c");
    Matrix c = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        c(j, j) = rng.uniform(0.05, 0.30);
        for (Eigen::Index i = j + 1; i < n; ++i) {
            c(i, j) = rng.normal(0.0, 0.05);
        }
    }
    return c;
}

Matrix gen_gamma(Eigen::Index n, Rng& rng) {
    require_dim(n, "gen_gamma");
    return rejection(
        "gen_gamma",
        [&] {
            Matrix a(n, n);
            for (Eigen::Index j = 0; j < n; ++j) {
                for (Eigen::Index i = 0; i < n; ++i) {
                    a(i, j) = rng.normal(-0.15, 0.6);
                }
            }
            const Matrix q = a.transpose() * a;
            const Vector inv = q.diagonal().cwiseSqrt().cwiseInverse();
            Matrix g = mat::symmetrize(inv.asDiagonal() * q * inv.asDiagonal());
            g.diagonal().setOnes();
            return g;
        },
        [](const Matrix& g) { return mat::min_eigenvalue(g) > 1e-10; });
}

models::SBekkParams sample_sbekk_params(Eigen::Index n, Rng& rng) {
    require_dim(n, "sample_sbekk_params");
    auto ab = rejection(
        "sample_sbekk_params", [&] { return std::pair{rng.uniform(0.05, 0.20), rng.uniform(0.70, 0.95)}; },
        [](const auto& p) { return p.first + p.second < 1.0; });
    models::SBekkParams p;
    p.c = sample_c(n, rng);
    p.alpha = ab.first;
    p.beta = ab.second;
    return p;
}

models::FBekkParams sample_fbekk_params(Eigen::Index n, Rng& rng) {
    require_dim(n, "sample_fbekk_params");
    if (n % 3 != 0) {
        throw InvalidInput("sample_fbekk_params: n must be divisible by 3");
    }
    auto ab = rejection(
        "sample_fbekk_params",
        [&] {
            Matrix a(n, n);
            for (Eigen::Index j = 0; j < n; ++j) {
                for (Eigen::Index i = 0; i < n; ++i) {
                    a(i, j) = rng.uniform(0.0, 0.10);
                }
            }
            Matrix b = Matrix::Zero(n, n);
            for (Eigen::Index blk = 0; blk < n; blk += 3) {
                for (Eigen::Index j = blk; j < blk + 3; ++j) {
                    for (Eigen::Index i = blk; i < blk + 3; ++i) {
                        b(i, j) = i == j ? rng.uniform(0.70, 0.95) : rng.uniform(0.0, 0.10);
                    }
                }
            }
            models::FBekkParams p;
            p.a = std::move(a);
            p.b = std::move(b);
            p.c = Matrix::Identity(n, n);
            return p;
        },
        [](const models::FBekkParams& p) { return models::stationarity_check(p).ok; });
    ab.c = sample_c(n, rng);
    return ab;
}

models::DccParams sample_dcc_params(Eigen::Index n, Rng& rng) {
    require_dim(n, "sample_dcc_params");
    models::DccParams p;
    const auto th = rejection(
        "sample_dcc_params", [&] { return std::pair{rng.uniform(0.05, 0.30), rng.uniform(0.70, 0.85)}; },
        [](const auto& t) { return t.first + t.second < 1.0; });
    p.theta1 = th.first;
    p.theta2 = th.second;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double alpha = rng.uniform(0.05, 0.15);
        const double beta = rng.uniform(0.70, 0.85);
        p.marginals.push_back({garch_intercept(alpha, beta, rng), alpha, beta});
    }
    p.gamma = gen_gamma(n, rng);
    return p;
}

models::EdccParams sample_edcc_params(Eigen::Index n, Rng& rng) {
    require_dim(n, "sample_edcc_params");
    models::EdccParams p;
    const auto th = rejection(
        "sample_edcc_params", [&] { return std::pair{rng.uniform(0.05, 0.30), rng.uniform(0.70, 0.85)}; },
        [](const auto& t) { return t.first + t.second < 1.0; });
    p.theta1 = th.first;
    p.theta2 = th.second;
    const auto ab = rejection(
        "sample_edcc_params",
        [&] {
            Matrix a(n, n);
            for (Eigen::Index j = 0; j < n; ++j) {
                for (Eigen::Index i = 0; i < n; ++i) {
                    a(i, j) = i == j ? rng.uniform(0.0, 0.2) : rng.uniform(0.0, 0.02);
                }
            }
            Vector b(n);
            for (auto& x : b) {
                x = rng.uniform(0.70, 0.85);
            }
            return std::pair{a, b};
        },
        [](const auto& x) { return mat::spectral_radius(x.first + Matrix(x.second.asDiagonal())) < 1.0; });
    p.a = ab.first;
    p.b = ab.second;
    p.nu.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        p.nu(i) = (1.0 - p.a(i, i) - p.b(i)) * rng.uniform(0.5, 1.5);
    }
    p.gamma = gen_gamma(n, rng);
    return p;
}

AnyParams sample_params(ModelClass model, Eigen::Index n, Rng& rng) {
    switch (model) {
        case ModelClass::SBekk: return sample_sbekk_params(n, rng);
        case ModelClass::FBekk: return sample_fbekk_params(n, rng);
        case ModelClass::Dcc: return sample_dcc_params(n, rng);
        case ModelClass::Edcc: return sample_edcc_params(n, rng);
        case ModelClass::Garch11: break;
    }
    throw InvalidInput("sample_params: GARCH(1,1) is not a multivariate DGP");
}

AnyParams fixed_params_24(ModelClass model, Rng& rng) {
    constexpr Eigen::Index n = 24;
    switch (model) {
        case ModelClass::SBekk: {
            models::SBekkParams p;
            p.c = sample_c(n, rng);
            p.alpha = 0.15;
            p.beta = 0.80;
            return p;
        }
        case ModelClass::FBekk: {
            models::FBekkParams p;
            const Matrix block{{0.80, 0.05, 0.05}, {0.05, 0.80, 0.05}, {0.05, 0.05, 0.80}};
            p.b = mat::kron(Matrix::Identity(8, 8), block);
            const Matrix levels{{0.025, 0.0125, 0.0}, {0.0125, 0.0187, 0.025}, {0.0187, 0.0125, 0.0312}};
            p.a = mat::kron(levels, Matrix::Ones(8, 8));
            p.c = sample_c(n, rng);
            const auto report = models::stationarity_check(p);
            if (!report.ok) {
                throw ConfigurationError("fixed 24-asset full BEKK design is not stationary (" + report.quantity +
                                         " = " + std::to_string(report.value) + ")");
            }
            return p;
        }
        case ModelClass::Dcc: {
            models::DccParams p;
            p.theta1 = 0.15;
            p.theta2 = 0.80;
            for (Eigen::Index i = 0; i < n; ++i) {
                p.marginals.push_back({garch_intercept(0.15, 0.80, rng), 0.15, 0.80});
            }
            p.gamma = gen_gamma(n, rng);
            return p;
        }
        case ModelClass::Edcc: {
            models::EdccParams p;
            p.theta1 = 0.15;
            p.theta2 = 0.80;
            p.a = Matrix::Constant(n, n, 0.05);
            p.a.diagonal().setConstant(0.08);
            p.b = Vector::Constant(n, 0.80);
            p.nu.resize(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                p.nu(i) = (1.0 - 0.08 - 0.80) * rng.uniform(0.5, 1.5);
            }
            p.gamma = gen_gamma(n, rng);
            return p;
        }
        case ModelClass::Garch11: break;
    }
    throw InvalidInput("fixed_params_24: GARCH(1,1) is not a multivariate DGP");
}

std::string_view to_string(WeightScheme w) noexcept { return w == WeightScheme::Equal ? "equal" : "random"; }

WeightScheme weight_scheme_from_string(std::string_view name) {
    if (name == "equal" || name == "EQ") return WeightScheme::Equal;
    if (name == "random" || name == "RND") return WeightScheme::Random;
    throw InvalidInput("unknown weight scheme '" + std::string(name) + "' (expected equal or random)");
}

Vector make_weights(WeightScheme scheme, Eigen::Index n, Rng& rng) {
    require_dim(n, "make_weights");
    if (scheme == WeightScheme::Equal) {
        return Vector::Constant(n, 1.0 / static_cast<double>(n));
    }
    Vector w(n);
    for (auto& x : w) {
        do {
            x = rng.uniform();
        } while (x <= 0.0);
    }
    return w / w.sum();
}

std::string_view to_string(ParamMode m) noexcept {
    switch (m) {
        case ParamMode::Auto: return "auto";
        case ParamMode::Random: return "random";
        case ParamMode::Fixed: return "fixed";
    }
    return "?";
}

ParamMode param_mode_from_string(std::string_view name) {
    if (name == "auto") return ParamMode::Auto;
    if (name == "random") return ParamMode::Random;
    if (name == "fixed") return ParamMode::Fixed;
    throw InvalidInput("unknown parameter mode '" + std::string(name) + "' (expected auto, random or fixed)");
}

SimulatedDataset build_dataset(const DgpSpec& spec, Rng& rng) {
    if (spec.t_train < 1 || spec.t_test < 1 || spec.burn_in < 0) {
        throw InvalidInput("build_dataset: need t_train >= 1, t_test >= 1 and burn_in >= 0");
    }
    const bool fixed = spec.params == ParamMode::Fixed || (spec.params == ParamMode::Auto && spec.n_assets == 24);
    if (fixed && spec.n_assets != 24) {
        throw ConfigurationError("fixed parameter designs exist only for 24 assets");
    }
    SimulatedDataset out;
    out.dgp_params = fixed ? fixed_params_24(spec.model, rng) : sample_params(spec.model, spec.n_assets, rng);
    const auto report = models::stationarity_check(out.dgp_params);
    if (!report.ok) {
        throw ConfigurationError("DGP parameters are not covariance stationary (" + report.quantity + " = " +
                                 std::to_string(report.value) + ")");
    }
    out.weights = make_weights(spec.weights, spec.n_assets, rng);

    const auto total = static_cast<std::size_t>(spec.burn_in + spec.t_train + spec.t_test);
    models::SimulatedPath path = models::simulate(out.dgp_params, total, rng);
    const auto b = static_cast<std::size_t>(spec.burn_in);
    const auto tr = static_cast<std::size_t>(spec.t_train);
    out.train_returns = path.returns.middleRows(spec.burn_in, spec.t_train);
    out.test_returns = path.returns.bottomRows(spec.t_test);
    out.train_cov.assign(std::make_move_iterator(path.cov.begin() + static_cast<std::ptrdiff_t>(b)),
                         std::make_move_iterator(path.cov.begin() + static_cast<std::ptrdiff_t>(b + tr)));
    out.test_cov.assign(std::make_move_iterator(path.cov.begin() + static_cast<std::ptrdiff_t>(b + tr)),
                        std::make_move_iterator(path.cov.end()));
    out.portfolio_train = out.train_returns * out.weights;
    out.portfolio_test = out.test_returns * out.weights;
    return out;
}

}  // namespace volrec::dgp
