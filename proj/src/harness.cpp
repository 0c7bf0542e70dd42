#include "volrec/harness.hpp"

#include "volrec/error.hpp"
#include "volrec/estimation.hpp"
#include "volrec/ingest.hpp"
#include "volrec/reconcile.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

namespace volrec::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Forecasts {
    double sigma_p2_hat = 0.0;
    Matrix sigma_hat;
};

/// Portfolio variance forecast for each requested approach.
std::vector<double> approach_forecasts(const Forecasts& f, const Matrix& omega, const Vector& w,
                                       const std::vector<Approach>& approaches) {
    std::vector<double> out;
    out.reserve(approaches.size());
    const Vector c = reconcile::build_constraint(w);
    for (Approach a : approaches) {
        switch (a) {
            case Approach::Base: out.push_back(f.sigma_p2_hat); break;
            case Approach::Bu: out.push_back(w.dot(f.sigma_hat * w)); break;
            case Approach::Shr:
                out.push_back(reconcile::reconcile_shr(reconcile::stack(f.sigma_p2_hat, f.sigma_hat), omega, c).sigma_p2());
                break;
            case Approach::ShrA:
                out.push_back(
                    reconcile::algorithm1(f.sigma_p2_hat, f.sigma_hat, omega, w, reconcile::Option::A).sigma_p2());
                break;
            case Approach::ShrB:
                out.push_back(
                    reconcile::algorithm1(f.sigma_p2_hat, f.sigma_hat, omega, w, reconcile::Option::B).sigma_p2());
                break;
        }
    }
    return out;
}

/// QLIKE needs a positive forecast; unreconciled shr can dip below zero.
double score(double target, double forecast, eval::Loss kind) {
    if (kind == eval::Loss::Qlike) forecast = std::max(forecast, reconcile::kVarianceFloor);
    return eval::loss_point(target, forecast, kind);
}

FailureRecord failure_from(int replication, const std::exception& e) {
    FailureRecord f;
    f.replication = replication;
    f.message = e.what();
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
        f.kind = std::string(to_string(err->kind()));
    } else {
        f.kind = "Exception";
    }
    if (const auto* est = dynamic_cast<const EstimationFailure*>(&e)) {
        f.stage = est->stage();
        f.asset = est->asset();
    }
    return f;
}

Matrix second_moment(const Matrix& x) { return x.transpose() * x / static_cast<double>(x.rows()); }

std::vector<Matrix> head(const std::vector<Matrix>& v, std::size_t n) { return {v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n)}; }

struct ReplicationOutput {
    std::vector<LossRecord> losses;
    std::vector<FailureRecord> failures;
};

ReplicationOutput run_replication(const StudyConfig& cfg, int q) {
    ReplicationOutput out;
    Rng rng = Rng(cfg.master_seed).substream(static_cast<std::uint64_t>(q));
    const auto ds = dgp::build_dataset(cfg.dgp, rng);
    if (std::find(cfg.fail_replications.begin(), cfg.fail_replications.end(), q) != cfg.fail_replications.end()) {
        throw EstimationFailure("forced failure", "injected");
    }
    const auto t_train = static_cast<std::size_t>(ds.train_returns.rows());
    const auto t_test = static_cast<std::size_t>(ds.test_returns.rows());
    Matrix all(ds.train_returns.rows() + ds.test_returns.rows(), ds.train_returns.cols());
    all << ds.train_returns, ds.test_returns;
    const Vector port = all * ds.weights;
    std::vector<Matrix> true_cov = ds.train_cov;
    true_cov.insert(true_cov.end(), ds.test_cov.begin(), ds.test_cov.end());

    const auto garch = models::garch11_fit(ds.portfolio_train);
    const double init_var = ds.portfolio_train.squaredNorm() / static_cast<double>(t_train);
    const auto vf = models::garch11_filter(garch.params, port, init_var);

    std::vector<double> deltas{0.0};
    deltas.insert(deltas.end(), cfg.delta_grid.begin(), cfg.delta_grid.end());
    std::vector<std::vector<Matrix>> proxies;
    for (double d : deltas) {
        std::vector<Matrix> p;
        p.reserve(true_cov.size());
        for (std::size_t t = 0; t < true_cov.size(); ++t) {
            p.push_back(eval::noisy_proxy(all.row(static_cast<Eigen::Index>(t)).transpose(), true_cov[t], d));
        }
        proxies.push_back(std::move(p));
    }

    const Matrix init_cov = second_moment(ds.train_returns);
    for (auto model : cfg.fitted_models) {
        const auto params = models::fit_multivariate(model, ds.train_returns);
        const auto cf = models::filter(params, all, init_cov);
        const std::string model_name(models::to_string(model));
        for (std::size_t di = 0; di < deltas.size(); ++di) {
            const std::string label = delta_label(deltas[di]);
            const Matrix errors = reconcile::insample_errors(vf.variance.head(static_cast<Eigen::Index>(t_train)),
                                                              head(cf.cov, t_train), head(proxies[di], t_train),
                                                              ds.weights);
            const Matrix omega = reconcile::shrink_cov(errors).omega;
            for (std::size_t k = 0; k < t_test; ++k) {
                const std::size_t t = t_train + k;
                const Forecasts f{vf.variance(static_cast<Eigen::Index>(t)), cf.cov[t]};
                const auto fc = approach_forecasts(f, omega, ds.weights, cfg.approaches);
                const double target = ds.weights.dot(proxies[di][t] * ds.weights);
                for (std::size_t a = 0; a < cfg.approaches.size(); ++a) {
                    for (auto kind : cfg.loss_kinds) {
                        out.losses.push_back({q, label, 1, cfg.approaches[a], model_name, std::to_string(k), kind,
                                              score(target, fc[a], kind)});
                    }
                }
            }
        }
    }
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + "\"";
}

double median(std::vector<double> v) {
    if (v.empty()) return kNaN;
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v) { return std::isnan(v) ? "NA" : ingest::format_double(v); }

}  // namespace

std::string delta_label(double delta) {
    for (int prec = 1; prec <= 17; ++prec) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.*g", prec, delta);
        if (std::strtod(buf, nullptr) == delta) return buf;
    }
    return ingest::format_double(delta);
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("VOLREC_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
}

ResultStore run_simulation_study(const StudyConfig& config, int threads) {
    const int q_total = config.q_replications;
    std::vector<ReplicationOutput> outputs(static_cast<std::size_t>(q_total));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int q = next++; q < q_total; q = next++) {
            auto& slot = outputs[static_cast<std::size_t>(q)];
            try {
                slot = run_replication(config, q);
            } catch (const std::exception& e) {
                slot.losses.clear();
                slot.failures.push_back(failure_from(q, e));
            }
        }
    };
    const int n_threads = std::clamp(threads, 1, std::max(1, q_total));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    ResultStore store;
    store.replications = q_total;
    for (auto& o : outputs) {
        store.losses.insert(store.losses.end(), std::make_move_iterator(o.losses.begin()),
                            std::make_move_iterator(o.losses.end()));
        store.failures.insert(store.failures.end(), o.failures.begin(), o.failures.end());
    }
    return store;
}

ResultStore run_real_data(const RealDataConfig& config) {
    const auto table = ingest::read_returns(config.returns_path, config.demean);
    const Eigen::Index t_len = table.values.rows();
    const Eigen::Index n = table.values.cols();
    const Eigen::Index win = config.window_length;
    if (win >= t_len) {
        throw ConfigurationError("window_length: " + std::to_string(win) + " leaves no forecast dates in " +
                                 std::to_string(t_len) + " observations");
    }
    ResultStore store;
    store.replications = 1;
    std::vector<Matrix> proxy;
    proxy.reserve(static_cast<std::size_t>(t_len));
    std::string delta = "1";
    if (!config.realized_cov.empty()) {
        auto rc = ingest::read_realized_cov(config.realized_cov, table.dates, n);
        proxy = std::move(rc.matrices);
        store.warnings = std::move(rc.warnings);
        delta = "rc";
    } else {
        for (Eigen::Index t = 0; t < t_len; ++t) {
            const Vector r = table.values.row(t).transpose();
            proxy.push_back(r * r.transpose());
        }
    }
    Rng rng(config.master_seed);
    const Vector w = dgp::make_weights(config.weights, n, rng);
    const Vector port = table.values * w;

    // Re-estimation origins: the first forecast date and each first trading day of a month.
    std::vector<Eigen::Index> starts{win};
    for (Eigen::Index s = win + 1; s < t_len; ++s) {
        const auto& d = table.dates;
        if (d[static_cast<std::size_t>(s)].substr(0, 7) != d[static_cast<std::size_t>(s - 1)].substr(0, 7)) {
            starts.push_back(s);
        }
    }
    starts.push_back(t_len);

    for (std::size_t b = 0; b + 1 < starts.size(); ++b) {
        const Eigen::Index s0 = starts[b];
        const Eigen::Index e = starts[b + 1];
        const Eigen::Index lo = s0 - win;
        std::vector<LossRecord> block;
        try {
            const Matrix window = table.values.middleRows(lo, win);
            const Vector pw = port.segment(lo, win);
            const auto garch = models::garch11_fit(pw);
            const auto vf = models::garch11_filter(garch.params, port.segment(lo, e - lo), pw.squaredNorm() / win);
            const Matrix init_cov = second_moment(window);
            const std::vector<Matrix> proxy_in(proxy.begin() + lo, proxy.begin() + s0);
            for (auto model : config.fitted_models) {
                const auto params = models::fit_multivariate(model, window);
                const auto cf = models::filter(params, table.values.middleRows(lo, e - lo), init_cov);
                const Matrix errors = reconcile::insample_errors(vf.variance.head(win),
                                                                  head(cf.cov, static_cast<std::size_t>(win)),
                                                                  proxy_in, w);
                const Matrix omega = reconcile::shrink_cov(errors).omega;
                const std::string model_name(models::to_string(model));
                for (Eigen::Index s = s0; s < e; ++s) {
                    const auto k = s - lo;
                    const auto vs = models::state_at(vf, k);
                    const auto cs = models::state_at(cf, static_cast<std::size_t>(k));
                    for (int h : config.horizons) {
                        const Eigen::Index target_date = s + h - 1;
                        if (target_date >= t_len) continue;
                        const Forecasts f{models::forecast_variance(garch.params, vs, h),
                                          models::forecast_covariance(params, cs, h)};
                        const auto fc = approach_forecasts(f, omega, w, config.approaches);
                        const double target = w.dot(proxy[static_cast<std::size_t>(target_date)] * w);
                        if (!(target > 0.0)) continue;
                        for (std::size_t a = 0; a < config.approaches.size(); ++a) {
                            for (auto kind : config.loss_kinds) {
                                block.push_back({0, delta, h, config.approaches[a], model_name,
                                                 table.dates[static_cast<std::size_t>(target_date)], kind,
                                                 score(target, fc[a], kind)});
                            }
                        }
                    }
                }
            }
        } catch (const std::exception& ex) {
            auto f = failure_from(0, ex);
            f.message = "window ending " + table.dates[static_cast<std::size_t>(s0 - 1)] + ": " + f.message;
            store.failures.push_back(std::move(f));
            continue;
        }
        store.losses.insert(store.losses.end(), std::make_move_iterator(block.begin()),
                            std::make_move_iterator(block.end()));
    }
    return store;
}

StudySummary summarize(const std::vector<LossRecord>& losses, const McsConfig& mcs_cfg, std::uint64_t seed) {
    // block -> replication -> approach -> losses in date order
    using Series = std::map<Approach, std::vector<double>>;
    std::map<BlockKey, std::map<int, Series>> blocks;
    for (const auto& r : losses) {
        blocks[{r.delta, r.horizon, r.model, r.kind}][r.replication][r.approach].push_back(r.value);
    }
    eval::McsOptions mo;
    mo.n_bootstrap = mcs_cfg.n_bootstrap;
    mo.block_length = mcs_cfg.block_length;
    mo.levels = {0.90};

    auto run_mcs = [&](const std::vector<const std::vector<double>*>& cols, std::uint64_t stream) {
        const auto m = static_cast<Eigen::Index>(cols.front()->size());
        std::vector<double> p(cols.size(), kNaN);
        if (cols.size() < 2 || m < 30) return p;
        Matrix panel(m, static_cast<Eigen::Index>(cols.size()));
        for (std::size_t j = 0; j < cols.size(); ++j) {
            if (static_cast<Eigen::Index>(cols[j]->size()) != m) return p;
            panel.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Vector>(cols[j]->data(), m);
        }
        eval::McsOptions o = mo;
        o.seed = seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1));
        const auto res = eval::mcs(panel, o);
        for (std::size_t j = 0; j < cols.size(); ++j) p[j] = res.pvalues(static_cast<Eigen::Index>(j));
        return p;
    };

    StudySummary out;
    std::uint64_t stream = 0;
    for (const auto& [key, reps] : blocks) {
        std::vector<Approach> approaches;
        for (const auto& [a, _] : reps.begin()->second) approaches.push_back(a);
        const auto nj = approaches.size();
        // Replications that carry every approach.
        std::vector<const Series*> complete;
        std::vector<int> rep_ids;
        for (const auto& [q, series] : reps) {
            if (series.size() == nj) {
                complete.push_back(&series);
                rep_ids.push_back(q);
            }
        }
        const auto nq = static_cast<Eigen::Index>(complete.size());
        Matrix ind(nq, static_cast<Eigen::Index>(nj));
        for (Eigen::Index q = 0; q < nq; ++q) {
            Eigen::Index j = 0;
            for (Approach a : approaches) {
                const auto& v = complete[static_cast<std::size_t>(q)]->at(a);
                ind(q, j++) = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())).mean();
            }
        }
        auto index_of = [&](Approach a) -> Eigen::Index {
            const auto it = std::find(approaches.begin(), approaches.end(), a);
            return it == approaches.end() ? -1 : static_cast<Eigen::Index>(it - approaches.begin());
        };
        const Eigen::Index ib = index_of(Approach::Base);
        const Eigen::Index iu = index_of(Approach::Bu);
        eval::AvgRel rel_base, rel_bu;
        if (ib >= 0 && nq > 0) rel_base = eval::avg_rel(ind, ib);
        if (iu >= 0 && nq > 0) rel_bu = eval::avg_rel(ind, iu);

        std::vector<std::vector<double>> mcs_p(nj);
        for (const Series* s : complete) {
            std::vector<const std::vector<double>*> cols;
            for (Approach a : approaches) cols.push_back(&s->at(a));
            const auto p = run_mcs(cols, stream++);
            for (std::size_t j = 0; j < nj; ++j) {
                if (!std::isnan(p[j])) mcs_p[j].push_back(p[j]);
            }
        }

        const Vector means = nq > 0 ? Vector(ind.colwise().mean().transpose()) : Vector::Constant(static_cast<Eigen::Index>(nj), kNaN);
        std::vector<std::size_t> order(nj);
        for (std::size_t j = 0; j < nj; ++j) order[j] = j;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            return means(static_cast<Eigen::Index>(x)) < means(static_cast<Eigen::Index>(y));
        });
        std::vector<int> rank(nj);
        for (std::size_t r = 0; r < nj; ++r) rank[order[r]] = static_cast<int>(r) + 1;

        for (std::size_t j = 0; j < nj; ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            SummaryRow row;
            row.key = key;
            row.approach = approaches[j];
            row.q = static_cast<int>(nq);
            row.ind = means(jj);
            row.avg_rel_base = ib >= 0 && nq > 0 ? rel_base.values(jj) : kNaN;
            row.avg_rel_bu = iu >= 0 && nq > 0 ? rel_bu.values(jj) : kNaN;
            row.floored = rel_base.floored;
            row.rank = rank[j];
            row.mcs_pvalue = median(mcs_p[j]);
            row.mcs_inclusion = kNaN;
            if (!mcs_p[j].empty()) {
                const auto kept = std::count_if(mcs_p[j].begin(), mcs_p[j].end(), [](double p) { return p >= 0.10; });
                row.mcs_inclusion = static_cast<double>(kept) / static_cast<double>(mcs_p[j].size());
            }
            out.rows.push_back(row);
        }

        const int n_pairs = static_cast<int>(nj * (nj - 1) / 2);
        for (std::size_t x = 0; x < nj; ++x) {
            for (std::size_t y = x + 1; y < nj; ++y) {
                DmRow dm;
                dm.key = key;
                dm.a = approaches[x];
                dm.b = approaches[y];
                std::vector<double> stats, pvals;
                for (const Series* s : complete) {
                    const auto& la = s->at(dm.a);
                    const auto& lb = s->at(dm.b);
                    const auto m = static_cast<Eigen::Index>(la.size());
                    if (m < 10 || lb.size() != la.size()) continue;
                    try {
                        const auto r = eval::dm_test(Eigen::Map<const Vector>(la.data(), m),
                                                     Eigen::Map<const Vector>(lb.data(), m), key.horizon - 1,
                                                     std::max(1, n_pairs));
                        stats.push_back(r.stat);
                        pvals.push_back(r.pvalue_bonferroni);
                    } catch (const DegenerateVariance&) {
                    }
                }
                dm.q_valid = static_cast<int>(stats.size());
                dm.mean_stat = kNaN;
                dm.reject_rate = kNaN;
                if (!stats.empty()) {
                    double s = 0.0;
                    for (double v : stats) s += v;
                    dm.mean_stat = s / static_cast<double>(stats.size());
                    const auto rej = std::count_if(pvals.begin(), pvals.end(), [](double p) { return p < 0.05; });
                    dm.reject_rate = static_cast<double>(rej) / static_cast<double>(pvals.size());
                }
                dm.median_pvalue = median(pvals);
                out.dm.push_back(dm);
            }
        }
    }

    // Pooled confidence set over every (model, approach) column. The base
    // forecast does not depend on the multivariate model, so it enters once.
    std::map<BlockKey, std::map<int, std::vector<std::pair<std::pair<std::string, Approach>, const std::vector<double>*>>>>
        pooled;
    for (const auto& [key, reps] : blocks) {
        BlockKey pk = key;
        pk.model.clear();
        for (const auto& [q, series] : reps) {
            auto& cols = pooled[pk][q];
            for (const auto& [a, v] : series) {
                if (a == Approach::Base &&
                    std::any_of(cols.begin(), cols.end(), [](const auto& c) { return c.first.second == Approach::Base; })) {
                    continue;
                }
                cols.push_back({{key.model, a}, &v});
            }
        }
    }
    for (const auto& [pk, reps] : pooled) {
        std::map<std::pair<std::string, Approach>, std::vector<double>> pv;
        std::size_t width = 0;
        for (const auto& [q, cols] : reps) width = std::max(width, cols.size());
        for (const auto& [q, cols] : reps) {
            if (cols.size() != width) continue;
            std::vector<const std::vector<double>*> c;
            for (const auto& col : cols) c.push_back(col.second);
            const auto p = run_mcs(c, stream++);
            for (std::size_t j = 0; j < cols.size(); ++j) {
                if (!std::isnan(p[j])) pv[cols[j].first].push_back(p[j]);
            }
        }
        for (const auto& [id, ps] : pv) {
            PooledMcsRow row;
            row.key = pk;
            row.model = id.first;
            row.approach = id.second;
            row.mcs_pvalue = median(ps);
            const auto kept = std::count_if(ps.begin(), ps.end(), [](double p) { return p >= 0.10; });
            row.mcs_inclusion = static_cast<double>(kept) / static_cast<double>(ps.size());
            out.pooled.push_back(row);
        }
    }
    return out;
}

const SummaryRow* find_row(const StudySummary& s, const BlockKey& key, Approach a) {
    for (const auto& r : s.rows) {
        if (r.key == key && r.approach == a) return &r;
    }
    return nullptr;
}

void write_losses(const std::filesystem::path& path, const std::vector<LossRecord>& losses) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigurationError("cannot write " + path.string());
    out << "replication,delta,horizon,approach,model,date,loss_kind,value\n";
    for (const auto& r : losses) {
        out << r.replication << ',' << r.delta << ',' << r.horizon << ',' << to_string(r.approach) << ',' << r.model
            << ',' << r.date << ',' << eval::to_string(r.kind) << ',' << ingest::format_double(r.value) << '\n';
    }
}

std::vector<LossRecord> read_losses(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("unreadable", 0, path.string());
    std::string line;
    std::getline(in, line);
    if (line.rfind("replication,delta,horizon,approach,model,date,loss_kind,value", 0) != 0) {
        throw IngestError("header", 1, "not a losses.csv file");
    }
    std::vector<LossRecord> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::istringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 8) throw IngestError("ragged_row", line_no, "expected 8 fields");
        try {
            LossRecord r;
            r.replication = std::stoi(f[0]);
            r.delta = f[1];
            r.horizon = std::stoi(f[2]);
            r.approach = approach_from_string(f[3]);
            r.model = f[4];
            r.date = f[5];
            r.kind = eval::loss_from_string(f[6]);
            r.value = std::stod(f[7]);
            out.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw IngestError("bad_record", line_no, e.what());
        }
    }
    return out;
}

void write_failures(const std::filesystem::path& path, const std::vector<FailureRecord>& failures) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigurationError("cannot write " + path.string());
    out << "replication,kind,stage,asset,message\n";
    for (const auto& f : failures) {
        out << f.replication << ',' << f.kind << ',' << csv_field(f.stage) << ',' << f.asset << ','
            << csv_field(f.message) << '\n';
    }
}

void write_summary(const std::filesystem::path& dir, const StudySummary& s) {
    {
        std::ofstream out(dir / "summary.csv", std::ios::binary);
        out << "delta,horizon,model,loss_kind,approach,q,ind,avg_rel_base,avg_rel_bu,rank,mcs_pvalue,mcs_incl_90\n";
        for (const auto& r : s.rows) {
            out << r.key.delta << ',' << r.key.horizon << ',' << r.key.model << ',' << eval::to_string(r.key.kind)
                << ',' << to_string(r.approach) << ',' << r.q << ',' << fmt(r.ind) << ',' << fmt(r.avg_rel_base) << ','
                << fmt(r.avg_rel_bu) << ',' << r.rank << ',' << fmt(r.mcs_pvalue) << ',' << fmt(r.mcs_inclusion)
                << '\n';
        }
    }
    {
        std::ofstream out(dir / "dm.csv", std::ios::binary);
        out << "delta,horizon,model,loss_kind,approach_a,approach_b,q_valid,mean_stat,reject_rate,median_pvalue_bonf\n";
        for (const auto& r : s.dm) {
            out << r.key.delta << ',' << r.key.horizon << ',' << r.key.model << ',' << eval::to_string(r.key.kind)
                << ',' << to_string(r.a) << ',' << to_string(r.b) << ',' << r.q_valid << ',' << fmt(r.mean_stat) << ','
                << fmt(r.reject_rate) << ',' << fmt(r.median_pvalue) << '\n';
        }
    }
    {
        std::ofstream out(dir / "mcs_pooled.csv", std::ios::binary);
        out << "delta,horizon,loss_kind,model,approach,mcs_pvalue,mcs_incl_90\n";
        for (const auto& r : s.pooled) {
            out << r.key.delta << ',' << r.key.horizon << ',' << eval::to_string(r.key.kind) << ',' << r.model << ','
                << to_string(r.approach) << ',' << fmt(r.mcs_pvalue) << ',' << fmt(r.mcs_inclusion) << '\n';
        }
    }
}

}  // namespace volrec::harness
