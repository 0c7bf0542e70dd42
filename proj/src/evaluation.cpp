#include "volrec/evaluation.hpp"

#include "volrec/error.hpp"
#include "volrec/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

namespace volrec::eval {

std::string_view to_string(Loss l) noexcept {
    switch (l) {
        case Loss::Mse: return "MSE";
        case Loss::Mae: return "MAE";
        case Loss::Qlike: return "QLIKE";
    }
    return "?";
}

Loss loss_from_string(std::string_view name) {
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "mse") return Loss::Mse;
    if (s == "mae") return Loss::Mae;
    if (s == "qlike") return Loss::Qlike;
    throw InvalidInput("unknown loss '" + std::string(name) + "' (expected mse, mae or qlike)");
}

double loss_point(double truth, double forecast, Loss kind) {
    if (!(truth > 0.0)) {
        throw InvalidInput("loss target must be positive");
    }
    switch (kind) {
        case Loss::Mse: return (truth - forecast) * (truth - forecast);
        case Loss::Mae: return std::abs(truth - forecast);
        case Loss::Qlike: {
            if (!(forecast > 0.0)) {
                throw InvalidInput("QLIKE requires a positive forecast");
            }
            const double ratio = truth / forecast;
            return ratio - std::log(ratio) - 1.0;
        }
    }
    return 0.0;
}

Vector loss_series(const Vector& truth, const Vector& forecast, Loss kind) {
    if (truth.size() != forecast.size()) {
        throw InvalidInput("loss_series: length mismatch");
    }
    Vector out(truth.size());
    for (Eigen::Index t = 0; t < truth.size(); ++t) {
        out(t) = loss_point(truth(t), forecast(t), kind);
    }
    return out;
}

AvgRel avg_rel(const Matrix& ind, Eigen::Index reference) {
    if (ind.rows() == 0 || reference < 0 || reference >= ind.cols()) {
        throw InvalidInput("avg_rel: need at least one replication and a valid reference column");
    }
    AvgRel out;
    Matrix logs(ind.rows(), ind.cols());
    for (Eigen::Index j = 0; j < ind.cols(); ++j) {
        for (Eigen::Index q = 0; q < ind.rows(); ++q) {
            double v = ind(q, j);
            if (!(v >= 0.0)) {
                throw InvalidInput("avg_rel: losses must be nonnegative");
            }
            if (v < kLossFloor) {
                v = kLossFloor;
                ++out.floored;
            }
            logs(q, j) = std::log(v);
        }
    }
    out.values.resize(ind.cols());
    for (Eigen::Index j = 0; j < ind.cols(); ++j) {
        out.values(j) = std::exp((logs.col(j) - logs.col(reference)).mean());
    }
    return out;
}

double bartlett_lrv(const Vector& d, int lags) {
    if (lags < 0) {
        throw InvalidInput("HAC lag count must be nonnegative");
    }
    const auto m = d.size();
    const Vector c = d.array() - d.mean();
    double s = c.squaredNorm() / static_cast<double>(m);
    for (int k = 1; k <= lags && k < m; ++k) {
        const double gk = c.tail(m - k).dot(c.head(m - k)) / static_cast<double>(m);
        s += 2.0 * (1.0 - static_cast<double>(k) / (lags + 1.0)) * gk;
    }
    return s;
}

DmResult dm_test(const Vector& loss_a, const Vector& loss_b, int hac_lags, int n_comparisons) {
    if (loss_a.size() != loss_b.size()) {
        throw InvalidInput("dm_test: length mismatch");
    }
    if (loss_a.size() < 10) {
        throw InvalidInput("dm_test: need at least 10 observations");
    }
    if (n_comparisons < 1) {
        throw InvalidInput("dm_test: n_comparisons must be at least 1");
    }
    if (loss_a == loss_b) {
        throw DegenerateVariance("identical loss series");
    }
    const Vector d = loss_a - loss_b;
    const double lrv = bartlett_lrv(d, hac_lags);
    if (!(lrv > 0.0)) {
        throw DegenerateVariance("nonpositive long-run variance of loss differential");
    }
    DmResult r;
    r.stat = d.mean() / std::sqrt(lrv / static_cast<double>(d.size()));
    r.pvalue_raw = std::erfc(std::abs(r.stat) / std::sqrt(2.0));
    r.pvalue_bonferroni = std::min(1.0, r.pvalue_raw * n_comparisons);
    return r;
}

namespace {

/// Bootstrap means (J x B) of each model's losses under one shared set of
/// moving-block resamples.
Matrix bootstrap_means(const Matrix& losses, const McsOptions& o) {
    const auto m = losses.rows();
    const auto j = losses.cols();
    const Eigen::Index block = std::min<Eigen::Index>(o.block_length, m);
    const auto n_starts = static_cast<std::uint64_t>(m - block + 1);
    Rng rng(o.seed, 0x4d4353);
    Matrix means(j, o.n_bootstrap);
    Vector acc(j);
    for (int b = 0; b < o.n_bootstrap; ++b) {
        acc.setZero();
        Eigen::Index filled = 0;
        while (filled < m) {
            const auto start = static_cast<Eigen::Index>(rng.index(n_starts));
            const Eigen::Index len = std::min(block, m - filled);
            acc += losses.middleRows(start, len).colwise().sum().transpose();
            filled += len;
        }
        means.col(b) = acc / static_cast<double>(m);
    }
    return means;
}

}  // namespace

McsResult mcs(const Matrix& losses, const McsOptions& options) {
    const auto m = losses.rows();
    const auto nj = losses.cols();
    if (nj < 2) {
        throw InvalidInput("mcs: need at least two models");
    }
    if (m < 30) {
        throw InvalidInput("mcs: need at least 30 dates");
    }
    if (options.n_bootstrap < 1 || options.block_length < 1) {
        throw InvalidInput("mcs: n_bootstrap and block_length must be positive");
    }
    if (!losses.allFinite()) {
        throw InvalidInput("mcs: losses must be finite");
    }
    const Vector mean = losses.colwise().mean().transpose();
    const Matrix boot = bootstrap_means(losses, options);
    const auto nb = options.n_bootstrap;

    // Pairwise standard errors of the mean differential from the bootstrap.
    Matrix se = Matrix::Zero(nj, nj);
    for (Eigen::Index a = 0; a < nj; ++a) {
        for (Eigen::Index c = a + 1; c < nj; ++c) {
            const double dbar = mean(a) - mean(c);
            const Eigen::ArrayXd dev = (boot.row(a) - boot.row(c)).array() - dbar;
            se(a, c) = se(c, a) = std::sqrt(dev.square().sum() / nb);
        }
    }
    const double inf = std::numeric_limits<double>::infinity();
    auto t_stat = [&](Eigen::Index a, Eigen::Index c) {
        const double dbar = mean(a) - mean(c);
        if (se(a, c) > 0.0) return dbar / se(a, c);
        return dbar == 0.0 ? 0.0 : std::copysign(inf, dbar);
    };

    McsResult out;
    out.pvalues = Vector::Ones(nj);
    std::vector<Eigen::Index> alive(static_cast<std::size_t>(nj));
    for (Eigen::Index k = 0; k < nj; ++k) alive[static_cast<std::size_t>(k)] = k;
    double running = 0.0;
    Vector tstar(nb);
    while (alive.size() > 1) {
        double tr = 0.0;
        tstar.setZero();
        Eigen::Index worst = alive.front();
        double worst_t = -inf;
        for (std::size_t x = 0; x < alive.size(); ++x) {
            const auto a = alive[x];
            double row_max = -inf;
            for (std::size_t y = 0; y < alive.size(); ++y) {
                if (x == y) continue;
                const auto c = alive[y];
                const double t = t_stat(a, c);
                row_max = std::max(row_max, t);
                if (y > x) {
                    tr = std::max(tr, std::abs(t));
                    if (se(a, c) > 0.0) {
                        const double dbar = mean(a) - mean(c);
                        for (int b = 0; b < nb; ++b) {
                            tstar(b) = std::max(tstar(b), std::abs(boot(a, b) - boot(c, b) - dbar) / se(a, c));
                        }
                    }
                }
            }
            if (row_max > worst_t) {
                worst_t = row_max;
                worst = a;
            }
        }
        const double p = static_cast<double>((tstar.array() >= tr).count()) / nb;
        running = std::max(running, p);
        out.pvalues(worst) = running;
        out.elimination.push_back(worst);
        alive.erase(std::find(alive.begin(), alive.end(), worst));
    }
    out.elimination.push_back(alive.front());
    out.pvalues(alive.front()) = 1.0;

    out.levels = options.levels;
    for (double level : options.levels) {
        if (!(level > 0.0 && level < 1.0)) {
            throw InvalidInput("mcs: confidence levels must lie in (0, 1)");
        }
        std::vector<bool> inc(static_cast<std::size_t>(nj));
        for (Eigen::Index k = 0; k < nj; ++k) {
            inc[static_cast<std::size_t>(k)] = out.pvalues(k) >= 1.0 - level;
        }
        out.included.push_back(std::move(inc));
    }
    return out;
}

Matrix noisy_proxy(const Vector& r, const Matrix& sigma, double delta) {
    if (!(delta >= 0.0 && delta <= 1.0)) {
        throw InvalidInput("proxy delta must lie in [0, 1]");
    }
    if (sigma.rows() != r.size() || sigma.cols() != r.size()) {
        throw InvalidInput("noisy_proxy: dimension mismatch");
    }
    return delta * (r * r.transpose()) + (1.0 - delta) * sigma;
}

}  // namespace volrec::eval
