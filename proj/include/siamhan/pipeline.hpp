#pragma once

// Experiment plumbing shared by the command line tool and the test suites:
// month windows, labeled graph sets, the time-based split, pair construction
// and the evaluation reports.

#include "siamhan/graph.hpp"
#include "siamhan/model.hpp"
#include "siamhan/synthgen.hpp"
#include "siamhan/tasks.hpp"

#include "json.hpp"

#include <map>
#include <optional>
#include <set>
#include <vector>

namespace siamhan {

/// Observation window starting at the beginning of `month` (1-based).
WiretapWindow month_window(std::int64_t start_time, int days_per_month, int month, int window_days);

struct LabeledGraphs {
    std::vector<KnowledgeGraph> graphs;
    std::vector<int> user_of;
    std::vector<Ipv6Address> address;      // as observed (possibly forged)
    std::vector<std::int64_t> first_seen;  // earliest in-window timestamp
    std::vector<int> month_of;

    std::size_t size() const { return graphs.size(); }
    void append(LabeledGraphs&& other);
};

/// One graph per labeled client address active in the window, ordered by
/// first activity (ties by address). Addresses absent from `labels` are
/// skipped; forged addresses are resolved through `forged_to_original` first.
LabeledGraphs labeled_graphs(const std::vector<SessionRecord>& sessions, const std::map<Ipv6Address, int>& labels,
                             const WiretapWindow& window, const std::set<int>* users = nullptr,
                             const std::map<Ipv6Address, Ipv6Address>* forged_to_original = nullptr, int month = 0);

struct SplitPlan {
    std::set<int> train_users;
    std::set<int> test_users;
    int train_months = 3;        // months 1..train_months
    int validation_month = 4;
    int test_month = 5;
    int days_per_month = 30;
    int window_days = 30;
    std::int64_t start_time = 0;

    nlohmann::json to_json() const;
    static SplitPlan from_json(const nlohmann::json& j);
    void validate() const;
};

/// Users are shuffled with `seed`; round(test_fraction * n) of them (at least
/// one, leaving at least one) are held out for testing.
SplitPlan time_split(const std::map<Ipv6Address, int>& labels, double test_fraction, std::uint64_t seed,
                     std::int64_t start_time, int days_per_month, int window_days);

/// Every same-user pair.
std::vector<LabeledPair> positive_pairs(const std::vector<int>& user_of);
/// Every pair, labeled by user equality.
std::vector<LabeledPair> all_labeled_pairs(const std::vector<int>& user_of);
/// `count` distinct cross-user pairs drawn with `seed` (fewer if not available).
std::vector<LabeledPair> sample_negative_pairs(const std::vector<int>& user_of, std::size_t count, std::uint64_t seed);

struct TrainingData {
    LabeledGraphs train;
    LabeledGraphs validation;
};

TrainingData training_data(const std::vector<SessionRecord>& sessions, const std::map<Ipv6Address, int>& labels,
                           const SplitPlan& plan);

/// Positives plus per-epoch sampled negatives (neg_ratio per positive) for
/// training; positives plus a fixed negative sample of the same ratio for
/// validation.
TrainResult train_on(const TrainingData& data, const TrainConfig& config, double neg_ratio,
                     const EpochObserver& observer = {});

struct PairReport {
    std::size_t pairs = 0;
    std::size_t positives = 0;
    std::size_t negatives = 0;
    double auc = 0.0;
    double tpr = 0.0;  // at the verdict threshold eta
    double fpr = 0.0;
    double accuracy = 0.0;
    std::vector<std::pair<double, double>> tpr_at_fpr;  // (max fpr, tpr)
    std::vector<RocPoint> roc;

    nlohmann::json to_json(bool include_roc = true) const;
};

PairReport evaluate_pairs(EmbeddingCache& cache, const std::vector<int>& user_of, double eta);

struct TrackingReport {
    std::vector<std::size_t> candidates;  // graph index of each target user's sample
    std::vector<std::size_t> tests;
    std::vector<std::vector<std::size_t>> tracked;  // indices into `tests`
    double accuracy = 0.0;

    nlohmann::json to_json(const LabeledGraphs& graphs) const;
};

/// Candidate set: each user's earliest address; test set: every other graph.
TrackingReport evaluate_tracking(EmbeddingCache& cache, const LabeledGraphs& graphs, double eta);

struct DiscoveryReport {
    std::vector<UserGroup> groups;
    std::size_t users = 0;
    double accuracy = 0.0;

    nlohmann::json to_json(const LabeledGraphs& graphs) const;
};

DiscoveryReport evaluate_discovery(EmbeddingCache& cache, const LabeledGraphs& graphs, double eta);

struct TestReport {
    PairReport pairs;
    TrackingReport tracking;
    DiscoveryReport discovery;
};

TestReport evaluate_all(const ModelParams& params, const TrainConfig& config, const LabeledGraphs& graphs);

} // namespace siamhan
