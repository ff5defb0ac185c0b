#include "siamhan/tasks.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>

namespace siamhan {

namespace {

void check_sizes(std::size_t a, std::size_t b) {
    if (a != b) {
        throw TasksError(TasksErrc::bad_input, "distances and labels differ in length");
    }
}

} // namespace

Rates rates_at(std::span<const double> distances, std::span<const int> labels, double eta) {
    check_sizes(distances.size(), labels.size());
    Rates r;
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t i = 0; i < distances.size(); ++i) {
        bool declared = verdict(distances[i], eta) == 1;
        if (labels[i] == 1) {
            ++r.positives;
            tp += declared;
        } else {
            ++r.negatives;
            fp += declared;
        }
    }
    r.tpr = r.positives ? static_cast<double>(tp) / static_cast<double>(r.positives) : 0.0;
    r.fpr = r.negatives ? static_cast<double>(fp) / static_cast<double>(r.negatives) : 0.0;
    return r;
}

std::vector<RocPoint> roc_curve(std::span<const double> distances, std::span<const int> labels) {
    check_sizes(distances.size(), labels.size());
    const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    const std::size_t negatives = labels.size() - positives;
    if (positives == 0 || negatives == 0) {
        throw TasksError(TasksErrc::degenerate_ground_truth, "ROC needs both related and unrelated pairs");
    }

    std::vector<std::size_t> order(distances.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return distances[a] < distances[b]; });

    std::vector<RocPoint> roc{{-std::numeric_limits<double>::infinity(), 0.0, 0.0}};
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double d = distances[order[i]];
        while (i < order.size() && distances[order[i]] == d) {
            (labels[order[i]] == 1 ? tp : fp) += 1;
            ++i;
        }
        roc.push_back({d, static_cast<double>(fp) / static_cast<double>(negatives),
                       static_cast<double>(tp) / static_cast<double>(positives)});
    }
    return roc;
}

double auc(std::span<const RocPoint> roc) {
    double area = 0.0;
    for (std::size_t i = 1; i < roc.size(); ++i) {
        area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) / 2.0;
    }
    return area;
}

double auc(std::span<const double> distances, std::span<const int> labels) {
    auto roc = roc_curve(distances, labels);
    return auc(roc);
}

double tpr_at_fpr(std::span<const RocPoint> roc, double max_fpr) {
    double best = 0.0;
    for (const auto& p : roc) {
        if (p.fpr <= max_fpr) {
            best = std::max(best, p.tpr);
        }
    }
    return best;
}

double tracking_accuracy(const std::vector<std::vector<std::size_t>>& tracked, std::span<const int> candidate_user,
                         std::span<const int> test_user) {
    if (tracked.size() != candidate_user.size()) {
        throw TasksError(TasksErrc::bad_input, "one tracking result per candidate expected");
    }
    const std::size_t total = candidate_user.size() * test_user.size();
    if (total == 0) {
        throw TasksError(TasksErrc::bad_input, "tracking accuracy over an empty pair universe");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < candidate_user.size(); ++i) {
        std::vector<bool> declared(test_user.size(), false);
        for (auto j : tracked[i]) {
            declared.at(j) = true;
        }
        for (std::size_t j = 0; j < test_user.size(); ++j) {
            bool same = candidate_user[i] == test_user[j];
            correct += declared[j] == same;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(total);
}

std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weight) {
    const std::size_t rows = weight.size();
    const std::size_t cols = rows ? weight[0].size() : 0;
    const std::size_t n = std::max(rows, cols);
    if (n == 0) {
        return {};
    }
    double top = 0.0;
    for (const auto& r : weight) {
        for (double w : r) {
            top = std::max(top, w);
        }
    }
    // Hungarian algorithm on costs top - w over a zero-padded square matrix
    // (1-based potentials, column 0 is the virtual source).
    auto cost = [&](std::size_t i, std::size_t j) {
        double w = (i < rows && j < cols) ? weight[i][j] : 0.0;
        return top - w;
    };
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            std::size_t i0 = p[j0];
            std::size_t j1 = 0;
            double delta = inf;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) {
                    continue;
                }
                double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> match(rows, -1);
    for (std::size_t j = 1; j <= n; ++j) {
        if (p[j] != 0 && p[j] - 1 < rows && j - 1 < cols) {
            match[p[j] - 1] = static_cast<int>(j - 1);
        }
    }
    return match;
}

double discovery_accuracy(const std::vector<UserGroup>& groups, std::span<const int> user_of) {
    if (user_of.empty()) {
        throw TasksError(TasksErrc::bad_input, "discovery accuracy over an empty candidate set");
    }
    std::map<int, std::size_t> user_column;
    for (int u : user_of) {
        user_column.emplace(u, user_column.size());
    }
    std::vector<std::vector<double>> overlap(groups.size(), std::vector<double>(user_column.size(), 0.0));
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (auto m : groups[g].members) {
            overlap[g][user_column.at(user_of[m])] += 1.0;
        }
    }
    auto match = max_weight_assignment(overlap);
    double matched = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (match[g] >= 0) {
            matched += overlap[g][static_cast<std::size_t>(match[g])];
        }
    }
    return matched / static_cast<double>(user_of.size());
}

} // namespace siamhan
