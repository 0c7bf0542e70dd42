#include "volrec/config.hpp"
#include "volrec/error.hpp"
#include "volrec/estimation.hpp"
#include "volrec/harness.hpp"
#include "volrec/ingest.hpp"
#include "volrec/reconcile.hpp"
#include "volrec/version.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>

using namespace volrec;
using harness::json;
namespace fs = std::filesystem;

namespace {

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

json vector_json(const Vector& v) { return std::vector<double>(v.begin(), v.end()); }

Matrix json_matrix(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) throw ConfigurationError(field + ": expected a non-empty list of rows");
    Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != static_cast<std::size_t>(m.cols())) {
            throw ConfigurationError(field + "[" + std::to_string(i) + "]: ragged row");
        }
        for (std::size_t k = 0; k < j[i].size(); ++k) {
            if (!j[i][k].is_number()) {
                throw ConfigurationError(field + "[" + std::to_string(i) + "][" + std::to_string(k) +
                                         "]: expected a number");
            }
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
        }
    }
    return m;
}

Vector json_vector(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) throw ConfigurationError(field + ": expected a non-empty list");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ConfigurationError(field + "[" + std::to_string(i) + "]: expected a number");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

json params_json(const models::AnyParams& p) {
    json out = std::visit(
        [](const auto& x) -> json {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, models::Garch11Params>) {
                return {{"omega", x.omega}, {"alpha", x.alpha}, {"beta", x.beta}};
            } else if constexpr (std::is_same_v<T, models::SBekkParams>) {
                return {{"c", matrix_json(x.c)}, {"alpha", x.alpha}, {"beta", x.beta}};
            } else if constexpr (std::is_same_v<T, models::FBekkParams>) {
                return {{"c", matrix_json(x.c)}, {"a", matrix_json(x.a)}, {"b", matrix_json(x.b)}};
            } else if constexpr (std::is_same_v<T, models::DccParams>) {
                json m = json::array();
                for (const auto& g : x.marginals) m.push_back({{"omega", g.omega}, {"alpha", g.alpha}, {"beta", g.beta}});
                return {{"marginals", m}, {"gamma", matrix_json(x.gamma)}, {"theta1", x.theta1}, {"theta2", x.theta2}};
            } else {
                return {{"nu", vector_json(x.nu)}, {"a", matrix_json(x.a)}, {"b", vector_json(x.b)},
                        {"gamma", matrix_json(x.gamma)}, {"theta1", x.theta1}, {"theta2", x.theta2}};
            }
        },
        p);
    out["model"] = std::string(models::to_string(models::model_class(p)));
    return out;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigurationError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void emit(const std::string& out, const json& j) {
    if (out.empty()) {
        std::cout << j.dump(2) << '\n';
    } else {
        write_json(out, j);
    }
}

json manifest(const std::string& command, const json& config, std::uint64_t seed, double wall) {
    return {{"volrec_manifest", 1},
            {"command", command},
            {"version", kVersion},
            {"config", config},
            {"config_hash", harness::config_hash(config)},
            {"master_seed", seed},
            {"wall_seconds", wall}};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_store(const fs::path& dir, const harness::ResultStore& store, const harness::McsConfig& mcs,
                 std::uint64_t seed) {
    harness::write_losses(dir / "losses.csv", store.losses);
    harness::write_failures(dir / "failures.csv", store.failures);
    harness::write_summary(dir, harness::summarize(store.losses, mcs, seed));
    for (const auto& w : store.warnings) std::cerr << "warning: " << w << '\n';
    for (const auto& f : store.failures) {
        std::cerr << "replication " << f.replication << " failed: " << f.message << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Portfolio variance forecasting with univariate/multivariate GARCH reconciliation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Simulate returns from a DGP");
    std::string sim_model = "sbekk", sim_weights = "equal", sim_params = "auto", split = "none", out_dir = ".";
    Eigen::Index sim_n = 9, sim_t = 750;
    std::optional<Eigen::Index> sim_burn;
    std::uint64_t seed = 0;
    sim->add_option("--model", sim_model, "sbekk, fbekk, dcc or edcc");
    sim->add_option("--n", sim_n, "number of assets")->check(CLI::PositiveNumber);
    sim->add_option("--t", sim_t, "rows to write")->check(CLI::PositiveNumber);
    sim->add_option("--burn-in", sim_burn, "rows discarded before output");
    sim->add_option("--split", split, "'paper' discards a 100-row burn-in")->check(CLI::IsMember({"none", "paper"}));
    sim->add_option("--weights", sim_weights, "equal or random");
    sim->add_option("--params", sim_params, "auto, random or fixed");
    sim->add_option("--seed", seed, "master seed");
    sim->add_option("--out", out_dir, "output directory");

    // fit
    auto* fit = app.add_subcommand("fit", "Fit a model to a returns CSV");
    std::string fit_model = "dcc", returns_path, out_file;
    bool no_demean = false;
    fit->add_option("--model", fit_model, "garch, sbekk, dcc or edcc");
    fit->add_option("--returns", returns_path, "returns CSV")->required();
    fit->add_flag("--no-demean", no_demean, "keep sample means");
    fit->add_option("--out", out_file, "output JSON (default stdout)");

    // reconcile
    auto* rec = app.add_subcommand("reconcile", "Reconcile one set of base forecasts");
    std::string rec_input, option = "auto";
    rec->add_option("--input", rec_input, "JSON with sigma_p2, sigma, weights and omega or errors")->required();
    rec->add_option("--option", option, "A, B or auto");
    rec->add_option("--out", out_file, "output JSON (default stdout)");

    // study / realdata
    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> out_override;
    int threads = 0;
    auto* study = app.add_subcommand("study", "Run a replicated simulation study");
    study->add_option("--config", config_path, "study config (JSON) or a run manifest")->required();
    study->add_option("--seed", seed_override, "override master_seed");
    study->add_option("--threads", threads, "worker threads (default VOLREC_THREADS or all cores)");
    study->add_option("--out", out_override, "override output_dir");

    auto* real = app.add_subcommand("realdata", "Run the rolling-window real-data experiment");
    real->add_option("--config", config_path, "real-data config (JSON) or a run manifest")->required();
    real->add_option("--seed", seed_override, "override master_seed");
    real->add_option("--threads", threads, "accepted for symmetry; the experiment runs serially");
    real->add_option("--out", out_override, "override output_dir");

    // summarize
    auto* sum = app.add_subcommand("summarize", "Rebuild summary tables from losses.csv");
    std::string losses_path;
    int n_boot = 1000, block = 12;
    sum->add_option("--losses", losses_path, "losses.csv")->required();
    sum->add_option("--out", out_dir, "output directory");
    sum->add_option("--seed", seed, "bootstrap seed");
    sum->add_option("--bootstrap", n_boot, "bootstrap draws")->check(CLI::PositiveNumber);
    sum->add_option("--block", block, "bootstrap block length")->check(CLI::PositiveNumber);

    auto* ver = app.add_subcommand("version", "Print the version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return 2;
    }

    try {
        const auto t0 = std::chrono::steady_clock::now();
        if (*ver) {
            std::cout << "volrec " << kVersion << '\n';
        } else if (*sim) {
            dgp::DgpSpec spec;
            spec.model = models::model_class_from_string(sim_model);
            spec.n_assets = sim_n;
            spec.weights = dgp::weight_scheme_from_string(sim_weights);
            spec.params = dgp::param_mode_from_string(sim_params);
            spec.burn_in = sim_burn.value_or(split == "paper" ? 100 : 0);
            spec.t_train = sim_t;
            spec.t_test = 1;
            Rng rng(seed);
            auto ds = dgp::build_dataset(spec, rng);
            fs::create_directories(out_dir);
            ingest::ReturnsTable table;
            table.dates = ingest::business_days("2000-01-03", static_cast<std::size_t>(sim_t));
            for (Eigen::Index i = 1; i <= sim_n; ++i) table.assets.push_back("asset_" + std::to_string(i));
            table.values = ds.train_returns;
            const fs::path dir(out_dir);
            ingest::write_returns(dir / "returns.csv", table);
            ingest::write_realized_cov(dir / "true_cov.csv", table.dates, ds.train_cov);
            json cfg{{"model", sim_model}, {"n", sim_n}, {"t", sim_t}, {"burn_in", spec.burn_in},
                     {"weights", sim_weights}, {"params", sim_params}};
            json m = manifest("simulate", cfg, seed, seconds_since(t0));
            m["weights"] = vector_json(ds.weights);
            m["dgp_params"] = params_json(ds.dgp_params);
            write_json(dir / "manifest.json", m);
        } else if (*fit) {
            const auto table = ingest::read_returns(returns_path, !no_demean);
            const auto model = models::model_class_from_string(fit_model);
            json out;
            if (model == models::ModelClass::Garch11) {
                if (table.values.cols() != 1) throw InvalidInput("garch fits need a single-asset file");
                const auto f = models::garch11_fit(table.values.col(0));
                out = params_json(f.params);
                out["loglik"] = f.loglik;
            } else {
                const auto p = models::fit_multivariate(model, table.values);
                out = params_json(p);
                const Matrix init = table.values.transpose() * table.values / static_cast<double>(table.values.rows());
                out["loglik"] = models::filter(p, table.values, init).loglik;
            }
            out["n_obs"] = table.values.rows();
            emit(out_file, out);
        } else if (*rec) {
            const json in = harness::load_config_file(rec_input);
            for (const char* key : {"sigma_p2", "sigma", "weights"}) {
                if (!in.contains(key)) throw ConfigurationError(std::string(key) + ": required");
            }
            if (!in["sigma_p2"].is_number()) throw ConfigurationError("sigma_p2: expected a number");
            const Matrix sigma = json_matrix(in["sigma"], "sigma");
            const Vector w = json_vector(in["weights"], "weights");
            Matrix omega;
            double lambda = 0.0;
            if (in.contains("omega")) {
                omega = json_matrix(in["omega"], "omega");
            } else if (in.contains("errors")) {
                const auto ec = reconcile::shrink_cov(json_matrix(in["errors"], "errors"));
                omega = ec.omega;
                lambda = ec.lambda;
            } else {
                throw ConfigurationError("omega: required (or errors to estimate it)");
            }
            const auto r = reconcile::algorithm1(in["sigma_p2"].get<double>(), sigma, omega, w,
                                                 reconcile::option_from_string(option));
            json out{{"method", std::string(reconcile::to_string(r.method))},
                     {"sigma_p2", r.sigma_p2()},
                     {"sigma", matrix_json(r.sigma_tilde)},
                     {"correlation_ok", r.correlation_ok},
                     {"diagnostics",
                      {{"iterations", r.diagnostics.iterations},
                       {"kkt_residual", r.diagnostics.kkt_residual},
                       {"psd", r.diagnostics.psd},
                       {"clamped", r.diagnostics.clamped},
                       {"fallback", r.diagnostics.fallback},
                       {"note", r.diagnostics.note}}}};
            if (in.contains("errors")) out["lambda"] = lambda;
            emit(out_file, out);
        } else if (*study) {
            auto cfg = harness::parse_study_config(harness::load_config_file(config_path));
            if (seed_override) cfg.master_seed = *seed_override;
            if (out_override) cfg.output_dir = *out_override;
            const int n_threads = harness::resolve_threads(threads);
            const auto store = harness::run_simulation_study(cfg, n_threads);
            const fs::path dir(cfg.output_dir);
            fs::create_directories(dir);
            write_store(dir, store, cfg.mcs, cfg.master_seed);
            json m = manifest("study", harness::to_json(cfg), cfg.master_seed, seconds_since(t0));
            m["threads"] = n_threads;
            m["replications"] = store.replications;
            m["failures"] = store.failures.size();
            m["outputs"] = {"losses.csv", "failures.csv", "summary.csv", "dm.csv", "mcs_pooled.csv"};
            write_json(dir / "manifest.json", m);
        } else if (*real) {
            const fs::path cfg_path(config_path);
            auto cfg = harness::parse_realdata_config(harness::load_config_file(cfg_path), cfg_path.parent_path());
            if (seed_override) cfg.master_seed = *seed_override;
            if (out_override) cfg.output_dir = *out_override;
            const auto store = harness::run_real_data(cfg);
            const fs::path dir(cfg.output_dir);
            fs::create_directories(dir);
            write_store(dir, store, cfg.mcs, cfg.master_seed);
            json m = manifest("realdata", harness::to_json(cfg), cfg.master_seed, seconds_since(t0));
            m["failures"] = store.failures.size();
            m["warnings"] = store.warnings;
            m["outputs"] = {"losses.csv", "failures.csv", "summary.csv", "dm.csv", "mcs_pooled.csv"};
            write_json(dir / "manifest.json", m);
        } else if (*sum) {
            harness::McsConfig mcs;
            mcs.n_bootstrap = n_boot;
            mcs.block_length = block;
            fs::create_directories(out_dir);
            harness::write_summary(out_dir, harness::summarize(harness::read_losses(losses_path), mcs, seed));
        }
    } catch (const ConfigurationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
