#pragma once

#include "volrec/config.hpp"

#include <compare>
#include <filesystem>
#include <string>
#include <vector>

namespace volrec::harness {

/// One pointwise loss. delta labels the evaluation target: "0" is the true
/// covariance, other numbers are proxy weights, "rc" is realized covariance.
struct LossRecord {
    int replication = 0;
    std::string delta;
    int horizon = 1;
    Approach approach = Approach::Base;
    std::string model;
    std::string date;
    eval::Loss kind = eval::Loss::Mse;
    double value = 0.0;
};

struct FailureRecord {
    int replication = 0;
    std::string kind;
    std::string stage;
    int asset = -1;
    std::string message;
};

struct ResultStore {
    std::vector<LossRecord> losses;
    std::vector<FailureRecord> failures;
    std::vector<std::string> warnings;
    int replications = 0;  // attempted
};

/// Label for a proxy weight: shortest decimal that round-trips.
std::string delta_label(double delta);

/// Replications run on `threads` workers; results merge in replication order
/// so the store does not depend on the thread count.
ResultStore run_simulation_study(const StudyConfig& config, int threads = 1);

ResultStore run_real_data(const RealDataConfig& config);

struct BlockKey {
    std::string delta;
    int horizon = 1;
    std::string model;
    eval::Loss kind = eval::Loss::Mse;

    auto operator<=>(const BlockKey&) const = default;
};

struct SummaryRow {
    BlockKey key;
    Approach approach = Approach::Base;
    int q = 0;            // replications contributing
    double ind = 0.0;     // mean over replications of the mean loss
    double avg_rel_base = 0.0;
    double avg_rel_bu = 0.0;
    int floored = 0;
    int rank = 0;         // 1 = lowest ind within the block
    double mcs_pvalue = 0.0;     // median over replications
    double mcs_inclusion = 0.0;  // share of replications in the 90% set
};

struct DmRow {
    BlockKey key;
    Approach a = Approach::Base;
    Approach b = Approach::Bu;
    int q_valid = 0;             // replications with a nondegenerate test
    double mean_stat = 0.0;
    double reject_rate = 0.0;    // Bonferroni-adjusted p < 0.05
    double median_pvalue = 0.0;  // Bonferroni-adjusted
};

struct PooledMcsRow {
    BlockKey key;  // model left empty
    std::string model;
    Approach approach = Approach::Base;
    double mcs_pvalue = 0.0;
    double mcs_inclusion = 0.0;
};

struct StudySummary {
    std::vector<SummaryRow> rows;
    std::vector<DmRow> dm;
    std::vector<PooledMcsRow> pooled;
};

/// Aggregates persisted loss records only, so it can be rerun from losses.csv.
StudySummary summarize(const std::vector<LossRecord>& losses, const McsConfig& mcs, std::uint64_t seed);

/// Lookup helper: the summary row for (block, approach) or nullptr.
const SummaryRow* find_row(const StudySummary& s, const BlockKey& key, Approach a);

void write_losses(const std::filesystem::path& path, const std::vector<LossRecord>& losses);
std::vector<LossRecord> read_losses(const std::filesystem::path& path);
void write_failures(const std::filesystem::path& path, const std::vector<FailureRecord>& failures);
void write_summary(const std::filesystem::path& dir, const StudySummary& summary);

/// Thread count from an explicit request, else VOLREC_THREADS, else the
/// hardware concurrency.
int resolve_threads(int requested);

}  // namespace volrec::harness
