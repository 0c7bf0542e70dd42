#pragma once

#include "volrec/dgp.hpp"
#include "volrec/evaluation.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace volrec::harness {

enum class Approach { Base, Bu, Shr, ShrA, ShrB };

std::string_view to_string(Approach a) noexcept;
Approach approach_from_string(std::string_view name);
inline constexpr Approach kAllApproaches[] = {Approach::Base, Approach::Bu, Approach::Shr, Approach::ShrA,
                                              Approach::ShrB};

struct McsConfig {
    int n_bootstrap = 1000;
    int block_length = 12;
    std::vector<double> levels{0.70, 0.75, 0.80, 0.85, 0.90, 0.95};
};

struct StudyConfig {
    dgp::DgpSpec dgp;
    std::vector<models::ModelClass> fitted_models{models::ModelClass::SBekk};
    std::vector<Approach> approaches{std::begin(kAllApproaches), std::end(kAllApproaches)};
    int q_replications = 1;
    /// Proxy mixing weights; the true covariance (delta 0) is always scored.
    std::vector<double> delta_grid;
    std::vector<eval::Loss> loss_kinds{std::begin(eval::kAllLosses), std::end(eval::kAllLosses)};
    std::uint64_t master_seed = 0;
    std::string output_dir = "out";
    McsConfig mcs;
    /// Replications forced to fail; exercises failure isolation.
    std::vector<int> fail_replications;
};

struct RealDataConfig {
    std::filesystem::path returns_path;
    std::filesystem::path realized_cov;  // empty: outer product of returns
    Eigen::Index window_length = 1500;
    std::vector<int> horizons{1, 5, 22};
    dgp::WeightScheme weights = dgp::WeightScheme::Equal;
    bool demean = true;
    std::vector<models::ModelClass> fitted_models{models::ModelClass::SBekk, models::ModelClass::Dcc,
                                                  models::ModelClass::Edcc};
    std::vector<Approach> approaches{std::begin(kAllApproaches), std::end(kAllApproaches)};
    std::vector<eval::Loss> loss_kinds{std::begin(eval::kAllLosses), std::end(eval::kAllLosses)};
    std::uint64_t master_seed = 0;
    std::string output_dir = "out";
    McsConfig mcs;
};

using nlohmann::json;

/// Parsers reject unknown keys and bad values with ConfigurationError whose
/// message starts with the field path, e.g. "delta_grid[0]: ...".
StudyConfig parse_study_config(const json& j);
/// Relative paths resolve against base_dir.
RealDataConfig parse_realdata_config(const json& j, const std::filesystem::path& base_dir = {});

json to_json(const StudyConfig& c);
json to_json(const RealDataConfig& c);

/// Reads a JSON file. A run manifest is accepted too: its "config" member is returned.
json load_config_file(const std::filesystem::path& path);

/// FNV-1a over the compact dump.
std::string config_hash(const json& j);

}  // namespace volrec::harness
