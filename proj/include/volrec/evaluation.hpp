#pragma once

#include "volrec/matrix.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace volrec::eval {

enum class Loss { Mse, Mae, Qlike };

std::string_view to_string(Loss l) noexcept;
Loss loss_from_string(std::string_view name);  // mse, mae, qlike (any case)
inline constexpr Loss kAllLosses[] = {Loss::Mse, Loss::Mae, Loss::Qlike};

/// Pointwise loss of a variance forecast h2 against the target s2.
double loss_point(double truth, double forecast, Loss kind);
Vector loss_series(const Vector& truth, const Vector& forecast, Loss kind);

/// Floor applied to zero average losses before taking logs.
inline constexpr double kLossFloor = 1e-300;

struct AvgRel {
    Vector values;
    int floored = 0;  // entries raised to kLossFloor
};

/// Geometric mean over rows of ind(q, j) / ind(q, reference).
AvgRel avg_rel(const Matrix& ind, Eigen::Index reference);

/// Bartlett-weighted long-run variance of d with the given number of lags.
double bartlett_lrv(const Vector& d, int lags);

struct DmResult {
    double stat = 0.0;
    double pvalue_raw = 1.0;
    double pvalue_bonferroni = 1.0;
};

/// Two-sided test on d = loss_a - loss_b. Positive stat means a has larger
/// losses. Throws DegenerateVariance for identical series or a nonpositive
/// long-run variance.
DmResult dm_test(const Vector& loss_a, const Vector& loss_b, int hac_lags, int n_comparisons = 1);

struct McsOptions {
    std::vector<double> levels{0.70, 0.75, 0.80, 0.85, 0.90, 0.95};
    int n_bootstrap = 1000;
    int block_length = 12;
    std::uint64_t seed = 0;
};

struct McsResult {
    Vector pvalues;                          // per model, in input order
    std::vector<Eigen::Index> elimination;   // models in the order removed; last survivor at the end
    std::vector<double> levels;
    std::vector<std::vector<bool>> included; // included[level][model], p >= 1 - level
};

/// Model confidence set with the range statistic and a moving-block bootstrap.
/// losses is M x J (dates by models).
McsResult mcs(const Matrix& losses, const McsOptions& options = {});

/// delta r r' + (1 - delta) sigma, 0 <= delta <= 1.
Matrix noisy_proxy(const Vector& r, const Matrix& sigma, double delta);

}  // namespace volrec::eval
