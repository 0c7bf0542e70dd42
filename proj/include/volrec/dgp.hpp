#pragma once

#include "volrec/models.hpp"
#include "volrec/rng.hpp"

#include <string_view>
#include <vector>

namespace volrec::dgp {

using models::AnyParams;
using models::ModelClass;

/// Attempts allowed per rejection-sampled draw.
inline constexpr int kMaxAttempts = 10000;

/// Lower-triangular C: diagonal U(0.05, 0.30), below-diagonal N(0, 0.05^2).
Matrix sample_c(Eigen::Index n, Rng& rng);

/// A ~ N(-0.15, 0.6^2) entrywise, Q = A'A normalized to unit diagonal,
/// accepted when the smallest eigenvalue exceeds 1e-10.
Matrix gen_gamma(Eigen::Index n, Rng& rng);

models::SBekkParams sample_sbekk_params(Eigen::Index n, Rng& rng);
/// n must be divisible by 3; B is block diagonal with 3 x 3 blocks.
models::FBekkParams sample_fbekk_params(Eigen::Index n, Rng& rng);
models::DccParams sample_dcc_params(Eigen::Index n, Rng& rng);
models::EdccParams sample_edcc_params(Eigen::Index n, Rng& rng);

AnyParams sample_params(ModelClass model, Eigen::Index n, Rng& rng);

/// Fixed 24-asset designs. Random pieces (C, Gamma, intercepts) are drawn
/// from rng. The EDCC design is returned as specified even though it is not
/// covariance stationary; build_dataset rejects it.
AnyParams fixed_params_24(ModelClass model, Rng& rng);

enum class WeightScheme { Equal, Random };
std::string_view to_string(WeightScheme w) noexcept;
WeightScheme weight_scheme_from_string(std::string_view name);

Vector make_weights(WeightScheme scheme, Eigen::Index n, Rng& rng);

enum class ParamMode { Auto, Random, Fixed };  // Auto: fixed iff n == 24
std::string_view to_string(ParamMode m) noexcept;
ParamMode param_mode_from_string(std::string_view name);

struct DgpSpec {
    ModelClass model = ModelClass::SBekk;
    Eigen::Index n_assets = 9;
    Eigen::Index t_train = 500;
    Eigen::Index t_test = 250;
    Eigen::Index burn_in = 100;
    WeightScheme weights = WeightScheme::Equal;
    ParamMode params = ParamMode::Auto;
};

struct SimulatedDataset {
    Matrix train_returns;
    Matrix test_returns;
    std::vector<Matrix> train_cov;  // true conditional covariance per train date
    std::vector<Matrix> test_cov;   // true conditional covariance per test date
    Vector weights;
    Vector portfolio_train;
    Vector portfolio_test;
    AnyParams dgp_params;
};

SimulatedDataset build_dataset(const DgpSpec& spec, Rng& rng);

}  // namespace volrec::dgp
