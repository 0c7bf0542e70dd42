#include "volrec/config.hpp"

#include "volrec/error.hpp"

#include <fstream>
#include <set>

namespace volrec::harness {

std::string_view to_string(Approach a) noexcept {
    switch (a) {
        case Approach::Base: return "base";
        case Approach::Bu: return "bu";
        case Approach::Shr: return "shr";
        case Approach::ShrA: return "shr_A";
        case Approach::ShrB: return "shr_B";
    }
    return "?";
}

Approach approach_from_string(std::string_view name) {
    for (Approach a : kAllApproaches) {
        if (name == to_string(a)) return a;
    }
    throw InvalidInput("unknown approach '" + std::string(name) + "' (expected base, bu, shr, shr_A or shr_B)");
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigurationError(path + ": " + msg);
}

/// Walks one JSON object, remembering which keys were consumed.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(display(), "expected an object");
    }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* find(const std::string& key) {
        used_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    template <typename T>
    void get(const std::string& key, T& out) {
        if (const json* v = find(key)) out = convert<T>(*v, at(key));
    }

    template <typename T, typename F>
    void get_list(const std::string& key, std::vector<T>& out, F parse_one) {
        const json* v = find(key);
        if (!v) return;
        if (!v->is_array()) fail(at(key), "expected a list");
        out.clear();
        for (std::size_t k = 0; k < v->size(); ++k) {
            const std::string p = at(key) + "[" + std::to_string(k) + "]";
            out.push_back(parse_one((*v)[k], p));
        }
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!used_.count(it.key())) fail(at(it.key()), "unknown field");
        }
    }

    template <typename T>
    static T convert(const json& v, const std::string& path) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) fail(path, "expected true or false");
            return v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) fail(path, "expected a string");
            return v.get<std::string>();
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) fail(path, "expected a number");
            return v.get<T>();
        } else {
            if (!v.is_number_integer()) fail(path, "expected an integer");
            if constexpr (std::is_unsigned_v<T>) {
                if (v.is_number_unsigned()) return v.get<T>();
                if (v.get<long long>() < 0) fail(path, "must be nonnegative");
            }
            return v.get<T>();
        }
    }

private:
    std::string display() const { return path_.empty() ? "config" : path_; }

    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

template <typename F>
auto parse_name(const json& v, const std::string& path, F from_string) {
    const auto s = Reader::convert<std::string>(v, path);
    try {
        return from_string(s);
    } catch (const InvalidInput& e) {
        fail(path, e.what());
    }
}

models::ModelClass parse_fitted_model(const json& v, const std::string& path) {
    const auto m = parse_name(v, path, models::model_class_from_string);
    if (m == models::ModelClass::FBekk) fail(path, "full BEKK is available as a DGP only");
    if (m == models::ModelClass::Garch11) fail(path, "the univariate GARCH(1,1) base model is always fitted");
    return m;
}

Approach parse_approach(const json& v, const std::string& path) {
    return parse_name(v, path, approach_from_string);
}

eval::Loss parse_loss(const json& v, const std::string& path) { return parse_name(v, path, eval::loss_from_string); }

void require_nonempty(bool empty, const std::string& path) {
    if (empty) fail(path, "must not be empty");
}

McsConfig parse_mcs(const json& j, const std::string& path) {
    McsConfig m;
    Reader r(j, path);
    r.get("n_bootstrap", m.n_bootstrap);
    r.get("block_length", m.block_length);
    r.get_list("levels", m.levels, [](const json& v, const std::string& p) {
        const auto x = Reader::convert<double>(v, p);
        if (!(x > 0.0 && x < 1.0)) fail(p, "confidence level must lie in (0, 1)");
        return x;
    });
    r.finish();
    if (m.n_bootstrap < 1) fail(r.at("n_bootstrap"), "must be at least 1");
    if (m.block_length < 1) fail(r.at("block_length"), "must be at least 1");
    return m;
}

json mcs_json(const McsConfig& m) {
    return {{"n_bootstrap", m.n_bootstrap}, {"block_length", m.block_length}, {"levels", m.levels}};
}

template <typename T>
json names(const std::vector<T>& xs) {
    json out = json::array();
    for (const auto& x : xs) out.push_back(std::string(to_string(x)));
    return out;
}

json model_names(const std::vector<models::ModelClass>& xs) {
    json out = json::array();
    for (auto x : xs) out.push_back(std::string(models::to_string(x)));
    return out;
}

json loss_names(const std::vector<eval::Loss>& xs) {
    json out = json::array();
    for (auto x : xs) out.push_back(std::string(eval::to_string(x)));
    return out;
}

}  // namespace

StudyConfig parse_study_config(const json& j) {
    StudyConfig c;
    Reader r(j, "");
    if (const json* d = r.find("dgp")) {
        Reader g(*d, "dgp");
        if (const json* m = g.find("model")) c.dgp.model = parse_name(*m, "dgp.model", models::model_class_from_string);
        if (c.dgp.model == models::ModelClass::Garch11) fail("dgp.model", "must be a multivariate class");
        g.get("n_assets", c.dgp.n_assets);
        g.get("t_train", c.dgp.t_train);
        g.get("t_test", c.dgp.t_test);
        g.get("burn_in", c.dgp.burn_in);
        if (const json* w = g.find("weights")) c.dgp.weights = parse_name(*w, "dgp.weights", dgp::weight_scheme_from_string);
        if (const json* p = g.find("params")) c.dgp.params = parse_name(*p, "dgp.params", dgp::param_mode_from_string);
        g.finish();
        if (c.dgp.n_assets < 2) fail("dgp.n_assets", "must be at least 2");
        if (c.dgp.t_train < 100) fail("dgp.t_train", "must be at least 100");
        if (c.dgp.t_test < 1) fail("dgp.t_test", "must be at least 1");
        if (c.dgp.burn_in < 0) fail("dgp.burn_in", "must be nonnegative");
        if (c.dgp.model == models::ModelClass::FBekk && c.dgp.n_assets % 3 != 0) {
            fail("dgp.n_assets", "full BEKK designs need a multiple of 3 assets");
        }
    }
    r.get_list("fitted_models", c.fitted_models, parse_fitted_model);
    require_nonempty(c.fitted_models.empty(), "fitted_models");
    r.get_list("approaches", c.approaches, parse_approach);
    require_nonempty(c.approaches.empty(), "approaches");
    r.get("q_replications", c.q_replications);
    if (c.q_replications < 1) fail("q_replications", "must be at least 1");
    r.get_list("delta_grid", c.delta_grid, [](const json& v, const std::string& p) {
        const auto x = Reader::convert<double>(v, p);
        if (!(x > 0.0 && x <= 1.0)) fail(p, "delta must lie in (0, 1], got " + v.dump());
        return x;
    });
    r.get_list("loss_kinds", c.loss_kinds, parse_loss);
    require_nonempty(c.loss_kinds.empty(), "loss_kinds");
    r.get("master_seed", c.master_seed);
    r.get("output_dir", c.output_dir);
    if (const json* m = r.find("mcs")) c.mcs = parse_mcs(*m, "mcs");
    r.get_list("fail_replications", c.fail_replications,
               [](const json& v, const std::string& p) { return Reader::convert<int>(v, p); });
    r.finish();
    return c;
}

RealDataConfig parse_realdata_config(const json& j, const std::filesystem::path& base_dir) {
    RealDataConfig c;
    Reader r(j, "");
    std::string path;
    if (!r.find("returns_path")) fail("returns_path", "required");
    r.get("returns_path", path);
    c.returns_path = std::filesystem::absolute(base_dir / path);
    std::string rc;
    r.get("realized_cov", rc);
    if (!rc.empty()) c.realized_cov = std::filesystem::absolute(base_dir / rc);
    r.get("window_length", c.window_length);
    if (c.window_length < 100) fail("window_length", "must be at least 100");
    r.get_list("horizons", c.horizons, [](const json& v, const std::string& p) {
        const auto h = Reader::convert<int>(v, p);
        if (h < 1) fail(p, "horizon must be at least 1");
        return h;
    });
    require_nonempty(c.horizons.empty(), "horizons");
    if (const json* w = r.find("weights")) c.weights = parse_name(*w, "weights", dgp::weight_scheme_from_string);
    r.get("demean", c.demean);
    r.get_list("fitted_models", c.fitted_models, parse_fitted_model);
    require_nonempty(c.fitted_models.empty(), "fitted_models");
    r.get_list("approaches", c.approaches, parse_approach);
    require_nonempty(c.approaches.empty(), "approaches");
    r.get_list("loss_kinds", c.loss_kinds, parse_loss);
    require_nonempty(c.loss_kinds.empty(), "loss_kinds");
    r.get("master_seed", c.master_seed);
    r.get("output_dir", c.output_dir);
    if (const json* m = r.find("mcs")) c.mcs = parse_mcs(*m, "mcs");
    r.finish();
    return c;
}

json to_json(const StudyConfig& c) {
    return {
        {"dgp",
         {{"model", std::string(models::to_string(c.dgp.model))},
          {"n_assets", c.dgp.n_assets},
          {"t_train", c.dgp.t_train},
          {"t_test", c.dgp.t_test},
          {"burn_in", c.dgp.burn_in},
          {"weights", std::string(dgp::to_string(c.dgp.weights))},
          {"params", std::string(dgp::to_string(c.dgp.params))}}},
        {"fitted_models", model_names(c.fitted_models)},
        {"approaches", names(c.approaches)},
        {"q_replications", c.q_replications},
        {"delta_grid", c.delta_grid},
        {"loss_kinds", loss_names(c.loss_kinds)},
        {"master_seed", c.master_seed},
        {"output_dir", c.output_dir},
        {"mcs", mcs_json(c.mcs)},
        {"fail_replications", c.fail_replications},
    };
}

json to_json(const RealDataConfig& c) {
    return {
        {"returns_path", c.returns_path.string()},
        {"realized_cov", c.realized_cov.string()},
        {"window_length", c.window_length},
        {"horizons", c.horizons},
        {"weights", std::string(dgp::to_string(c.weights))},
        {"demean", c.demean},
        {"fitted_models", model_names(c.fitted_models)},
        {"approaches", names(c.approaches)},
        {"loss_kinds", loss_names(c.loss_kinds)},
        {"master_seed", c.master_seed},
        {"output_dir", c.output_dir},
        {"mcs", mcs_json(c.mcs)},
    };
}

json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigurationError(path.string() + ": cannot open");
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigurationError(path.string() + ": " + e.what());
    }
    if (j.is_object() && j.contains("volrec_manifest") && j.contains("config")) {
        return j["config"];
    }
    return j;
}

std::string config_hash(const json& j) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : j.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace volrec::harness
