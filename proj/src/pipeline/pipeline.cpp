#include "siamhan/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace siamhan {

WiretapWindow month_window(std::int64_t start_time, int days_per_month, int month, int window_days) {
    if (month < 1 || days_per_month < 1 || window_days < 1) {
        throw std::invalid_argument("month, days_per_month and window_days must be positive");
    }
    return WiretapWindow(start_time + std::int64_t{month - 1} * days_per_month * 86400, std::int64_t{window_days} * 86400);
}

void LabeledGraphs::append(LabeledGraphs&& other) {
    auto move_all = [](auto& into, auto& from) {
        into.insert(into.end(), std::make_move_iterator(from.begin()), std::make_move_iterator(from.end()));
    };
    move_all(graphs, other.graphs);
    move_all(user_of, other.user_of);
    move_all(address, other.address);
    move_all(first_seen, other.first_seen);
    move_all(month_of, other.month_of);
}

LabeledGraphs labeled_graphs(const std::vector<SessionRecord>& sessions, const std::map<Ipv6Address, int>& labels,
                             const WiretapWindow& window, const std::set<int>* users,
                             const std::map<Ipv6Address, Ipv6Address>* forged_to_original, int month) {
    std::map<Ipv6Address, std::vector<SessionRecord>> by_client;
    for (const auto& r : sessions) {
        if (window.contains(r.timestamp)) {
            by_client[r.client_addr].push_back(r);
        }
    }
    struct Entry {
        std::int64_t first;
        Ipv6Address addr;
        int user;
    };
    std::vector<Entry> entries;
    for (const auto& [addr, records] : by_client) {
        Ipv6Address original = addr;
        if (forged_to_original) {
            if (auto f = forged_to_original->find(addr); f != forged_to_original->end()) {
                original = f->second;
            }
        }
        auto label = labels.find(original);
        if (label == labels.end() || (users && !users->count(label->second))) {
            continue;
        }
        std::int64_t first = records.front().timestamp;
        for (const auto& r : records) {
            first = std::min(first, r.timestamp);
        }
        entries.push_back({first, addr, label->second});
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return a.first != b.first ? a.first < b.first : a.addr < b.addr;
    });

    LabeledGraphs out;
    for (const auto& e : entries) {
        out.graphs.push_back(build_graph(by_client[e.addr], window));
        out.user_of.push_back(e.user);
        out.address.push_back(e.addr);
        out.first_seen.push_back(e.first);
        out.month_of.push_back(month);
    }
    return out;
}

nlohmann::json SplitPlan::to_json() const {
    return {
        {"policy", "time"},
        {"train_users", std::vector<int>(train_users.begin(), train_users.end())},
        {"test_users", std::vector<int>(test_users.begin(), test_users.end())},
        {"train_months", train_months},
        {"validation_month", validation_month},
        {"test_month", test_month},
        {"days_per_month", days_per_month},
        {"window_days", window_days},
        {"start_time", start_time},
    };
}

SplitPlan SplitPlan::from_json(const nlohmann::json& j) {
    SplitPlan p;
    auto train = j.at("train_users").get<std::vector<int>>();
    auto test = j.at("test_users").get<std::vector<int>>();
    p.train_users = {train.begin(), train.end()};
    p.test_users = {test.begin(), test.end()};
    p.train_months = j.at("train_months");
    p.validation_month = j.at("validation_month");
    p.test_month = j.at("test_month");
    p.days_per_month = j.at("days_per_month");
    p.window_days = j.at("window_days");
    p.start_time = j.at("start_time");
    p.validate();
    return p;
}

void SplitPlan::validate() const {
    if (train_months < 1 || validation_month <= train_months || test_month <= validation_month) {
        throw std::invalid_argument("split months must be ordered: train < validation < test");
    }
    if (days_per_month < 1 || window_days < 1 || window_days > days_per_month) {
        throw std::invalid_argument("window_days must lie in [1, days_per_month]");
    }
    for (int u : test_users) {
        if (train_users.count(u)) {
            throw std::invalid_argument("user " + std::to_string(u) + " is in both train and test sets");
        }
    }
}

SplitPlan time_split(const std::map<Ipv6Address, int>& labels, double test_fraction, std::uint64_t seed,
                     std::int64_t start_time, int days_per_month, int window_days) {
    std::set<int> distinct;
    for (const auto& [addr, user] : labels) {
        distinct.insert(user);
    }
    if (distinct.size() < 2) {
        throw std::invalid_argument("a split needs at least two labeled users");
    }
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw std::invalid_argument("test fraction must lie in (0, 1)");
    }
    std::vector<int> users(distinct.begin(), distinct.end());
    std::mt19937_64 rng(seed);
    std::shuffle(users.begin(), users.end(), rng);
    auto held_out = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(users.size())));
    held_out = std::clamp<std::size_t>(held_out, 1, users.size() - 1);

    SplitPlan p;
    p.test_users = {users.begin(), users.begin() + static_cast<std::ptrdiff_t>(held_out)};
    p.train_users = {users.begin() + static_cast<std::ptrdiff_t>(held_out), users.end()};
    p.start_time = start_time;
    p.days_per_month = days_per_month;
    p.window_days = window_days;
    p.validate();
    return p;
}

std::vector<LabeledPair> positive_pairs(const std::vector<int>& user_of) {
    std::vector<LabeledPair> out;
    for (std::size_t i = 0; i < user_of.size(); ++i) {
        for (std::size_t j = i + 1; j < user_of.size(); ++j) {
            if (user_of[i] == user_of[j]) {
                out.push_back({i, j, 1});
            }
        }
    }
    return out;
}

std::vector<LabeledPair> all_labeled_pairs(const std::vector<int>& user_of) {
    std::vector<LabeledPair> out;
    for (std::size_t i = 0; i < user_of.size(); ++i) {
        for (std::size_t j = i + 1; j < user_of.size(); ++j) {
            out.push_back({i, j, user_of[i] == user_of[j] ? 1 : 0});
        }
    }
    return out;
}

std::vector<LabeledPair> sample_negative_pairs(const std::vector<int>& user_of, std::size_t count,
                                               std::uint64_t seed) {
    std::vector<LabeledPair> all;
    for (std::size_t i = 0; i < user_of.size(); ++i) {
        for (std::size_t j = i + 1; j < user_of.size(); ++j) {
            if (user_of[i] != user_of[j]) {
                all.push_back({i, j, 0});
            }
        }
    }
    if (all.size() <= count) {
        return all;
    }
    std::mt19937_64 rng(seed);
    std::vector<LabeledPair> out;
    std::sample(all.begin(), all.end(), std::back_inserter(out), count, rng);
    return out;
}

TrainingData training_data(const std::vector<SessionRecord>& sessions, const std::map<Ipv6Address, int>& labels,
                           const SplitPlan& plan) {
    plan.validate();
    TrainingData d;
    for (int m = 1; m <= plan.train_months; ++m) {
        d.train.append(labeled_graphs(sessions, labels,
                                      month_window(plan.start_time, plan.days_per_month, m, plan.window_days),
                                      &plan.train_users, nullptr, m));
    }
    d.validation = labeled_graphs(
        sessions, labels, month_window(plan.start_time, plan.days_per_month, plan.validation_month, plan.window_days),
        &plan.train_users, nullptr, plan.validation_month);
    return d;
}

TrainResult train_on(const TrainingData& data, const TrainConfig& config, double neg_ratio,
                     const EpochObserver& observer) {
    if (!(neg_ratio >= 0.0)) {
        throw std::invalid_argument("neg_ratio must be non-negative");
    }
    PairDataset training{data.train.graphs, positive_pairs(data.train.user_of), data.train.user_of, 0};
    if (training.fixed.empty()) {
        throw std::invalid_argument("training data has no same-user pairs");
    }
    training.sampled_negatives =
        static_cast<std::size_t>(std::llround(neg_ratio * static_cast<double>(training.fixed.size())));

    PairDataset validation{data.validation.graphs, positive_pairs(data.validation.user_of), data.validation.user_of, 0};
    auto negatives = sample_negative_pairs(
        data.validation.user_of,
        static_cast<std::size_t>(std::llround(neg_ratio * static_cast<double>(validation.fixed.size()))),
        config.rng_seed ^ 0x76616c6964ULL);
    validation.fixed.insert(validation.fixed.end(), negatives.begin(), negatives.end());
    return train(training, validation, config, observer);
}

nlohmann::json PairReport::to_json(bool include_roc) const {
    nlohmann::json grid = nlohmann::json::array();
    for (auto [f, t] : tpr_at_fpr) {
        grid.push_back({{"fpr", f}, {"tpr", t}});
    }
    nlohmann::json j = {
        {"pairs", pairs}, {"positives", positives}, {"negatives", negatives}, {"auc", auc},
        {"tpr", tpr},     {"fpr", fpr},             {"accuracy", accuracy},   {"tpr_at_fpr", grid},
    };
    if (include_roc) {
        nlohmann::json points = nlohmann::json::array();
        for (const auto& p : roc) {
            points.push_back({std::isfinite(p.threshold) ? nlohmann::json(p.threshold) : nlohmann::json(nullptr), p.fpr,
                              p.tpr});
        }
        j["roc"] = {{"columns", {"threshold", "fpr", "tpr"}}, {"points", points}};
    }
    return j;
}

PairReport evaluate_pairs(EmbeddingCache& cache, const std::vector<int>& user_of, double eta) {
    PairReport r;
    std::vector<double> distances;
    std::vector<int> labels;
    for (const auto& p : all_labeled_pairs(user_of)) {
        distances.push_back(cache.distance(p.first, p.second));
        labels.push_back(p.label);
    }
    r.pairs = distances.size();
    auto rates = rates_at(distances, labels, eta);
    r.positives = rates.positives;
    r.negatives = rates.negatives;
    r.tpr = rates.tpr;
    r.fpr = rates.fpr;
    if (r.pairs > 0) {
        double correct = rates.tpr * static_cast<double>(rates.positives) +
                         (1.0 - rates.fpr) * static_cast<double>(rates.negatives);
        r.accuracy = correct / static_cast<double>(r.pairs);
    }
    r.roc = roc_curve(distances, labels);
    r.auc = auc(r.roc);
    for (double f : {1e-3, 1e-2, 1e-1}) {
        r.tpr_at_fpr.emplace_back(f, tpr_at_fpr(r.roc, f));
    }
    return r;
}

nlohmann::json TrackingReport::to_json(const LabeledGraphs& g) const {
    nlohmann::json targets = nlohmann::json::array();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        nlohmann::json hits = nlohmann::json::array();
        for (auto t : tracked[i]) {
            hits.push_back(g.address[tests[t]].to_string());
        }
        targets.push_back({{"user", g.user_of[candidates[i]]},
                           {"sample", g.address[candidates[i]].to_string()},
                           {"tracked", hits}});
    }
    return {{"accuracy", accuracy}, {"candidates", candidates.size()}, {"tests", tests.size()}, {"targets", targets}};
}

TrackingReport evaluate_tracking(EmbeddingCache& cache, const LabeledGraphs& g, double eta) {
    TrackingReport r;
    std::set<int> seen;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (seen.insert(g.user_of[i]).second) {
            r.candidates.push_back(i);
        } else {
            r.tests.push_back(i);
        }
    }
    r.tracked = track([&](std::size_t i, std::size_t j) { return cache.distance(r.candidates[i], r.tests[j]); },
                      r.candidates.size(), r.tests.size(), eta);
    std::vector<int> cu, tu;
    for (auto i : r.candidates) cu.push_back(g.user_of[i]);
    for (auto j : r.tests) tu.push_back(g.user_of[j]);
    r.accuracy = tracking_accuracy(r.tracked, cu, tu);
    return r;
}

nlohmann::json DiscoveryReport::to_json(const LabeledGraphs& g) const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& grp : groups) {
        nlohmann::json members = nlohmann::json::array();
        for (std::size_t k = 0; k < grp.members.size(); ++k) {
            auto m = grp.members[k];
            members.push_back(
                {{"address", g.address[m].to_string()}, {"user", g.user_of[m]}, {"join_distance", grp.join_distance[k]}});
        }
        out.push_back({{"group", grp.id}, {"members", members}});
    }
    return {{"accuracy", accuracy}, {"users", users}, {"groups", out}};
}

DiscoveryReport evaluate_discovery(EmbeddingCache& cache, const LabeledGraphs& g, double eta) {
    DiscoveryReport r;
    r.groups = discover([&](std::size_t i, std::size_t j) { return cache.distance(i, j); }, g.size(), eta);
    r.users = std::set<int>(g.user_of.begin(), g.user_of.end()).size();
    r.accuracy = discovery_accuracy(r.groups, g.user_of);
    return r;
}

TestReport evaluate_all(const ModelParams& params, const TrainConfig& config, const LabeledGraphs& graphs) {
    EmbeddingCache cache(params, config, graphs.graphs);
    TestReport r;
    r.pairs = evaluate_pairs(cache, graphs.user_of, config.eta);
    r.tracking = evaluate_tracking(cache, graphs, config.eta);
    r.discovery = evaluate_discovery(cache, graphs, config.eta);
    return r;
}

} // namespace siamhan
