#include "doctest.h"

#include "graph_oracle.hpp"
#include "task_oracles.hpp"
#include "siamhan/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

using namespace siamhan;
using namespace siamhan::testing;

namespace {

std::vector<std::vector<double>> random_symmetric(std::mt19937_64& rng, std::size_t n, double hi) {
    std::uniform_real_distribution<double> d(0.0, hi);
    std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) m[i][j] = m[j][i] = d(rng);
    }
    return m;
}

std::vector<int> group_index(const std::vector<UserGroup>& groups, std::size_t n) {
    std::vector<int> out(n, -1);
    for (std::size_t k = 0; k < groups.size(); ++k) {
        for (auto m : groups[k].members) out[m] = static_cast<int>(k);
    }
    return out;
}

/// Same partition up to relabeling.
bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < a.size(); ++j) {
            if ((a[i] == a[j]) != (b[i] == b[j])) return false;
        }
    }
    return true;
}

} // namespace

TEST_SUITE("tasks") {

TEST_CASE("correlate pairs") {
    std::mt19937_64 rng(1);
    std::vector<KnowledgeGraph> graphs;
    for (int i = 0; i < 5; ++i) graphs.push_back(random_graph(rng, 6));
    graphs.push_back(graphs[0]);
    auto params = ModelParams::random(4, 3, 0.3);
    TrainConfig config;
    auto pairs = all_pairs(graphs.size());
    CHECK(pairs.size() == 15);
    EmbeddingCache cache(params, config, graphs);
    auto v = correlate_pairs(cache, pairs, config.eta);
    CHECK(cache.encode_count() == graphs.size());
    auto again = correlate_pairs(params, config, graphs, pairs);
    REQUIRE(v.size() == again.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        CHECK(v[i].distance == again[i].distance);
        CHECK(v[i].related == (v[i].distance < config.eta ? 1 : 0));
        if (v[i].first == 0 && v[i].second == 5) {
            CHECK(v[i].distance == 0.0);
            CHECK(v[i].related == 1);
        }
    }
}

TEST_CASE("tracking agrees with pairwise verdicts") {
    std::mt19937_64 rng(2);
    std::vector<KnowledgeGraph> s, t;
    for (int i = 0; i < 3; ++i) s.push_back(random_graph(rng, 6));
    for (int i = 0; i < 6; ++i) t.push_back(random_graph(rng, 6));
    t.push_back(s[1]);
    auto params = ModelParams::random(4, 9, 1.0);
    TrainConfig config;
    auto tracked = track(params, config, s, t);
    REQUIRE(tracked.size() == 3);
    CHECK(std::find(tracked[1].begin(), tracked[1].end(), 6u) != tracked[1].end());
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t j = 0; j < t.size(); ++j) {
            double d = distance(encode(params, s[i], 0.2), encode(params, t[j], 0.2));
            bool in = std::find(tracked[i].begin(), tracked[i].end(), j) != tracked[i].end();
            CHECK(in == (d < config.eta));
        }
    }
    CHECK(track(params, config, s, std::vector<KnowledgeGraph>{}) == std::vector<std::vector<std::size_t>>(3));
}

TEST_CASE("tracking with a planted oracle") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t users = 1 + rng() % 4;
        std::size_t n = 1 + rng() % 8;
        std::vector<int> test_user(n), cand_user(users);
        for (auto& u : test_user) u = static_cast<int>(rng() % users);
        for (std::size_t i = 0; i < users; ++i) cand_user[i] = static_cast<int>(i);
        auto dist = [&](std::size_t i, std::size_t j) { return cand_user[i] == test_user[j] ? 0.0 : 40.0; };
        auto tracked = track(dist, users, n, 10.0);
        for (std::size_t i = 0; i < users; ++i) {
            std::vector<std::size_t> truth;
            for (std::size_t j = 0; j < n; ++j) {
                if (test_user[j] == cand_user[i]) truth.push_back(j);
            }
            CHECK(tracked[i] == truth);
        }
        CHECK(tracking_accuracy(tracked, cand_user, test_user) == 1.0);
    }
}

TEST_CASE("tracking accuracy counts every candidate-test pair") {
    std::vector<std::vector<std::size_t>> tracked{{0, 1}, {}};
    std::vector<int> cu{7, 8};
    std::vector<int> tu{7, 8, 8};
    // pairs: (7,7) ok, (7,8) wrong, (7,8) ok, (8,7) ok, (8,8) wrong, (8,8) wrong
    CHECK(tracking_accuracy(tracked, cu, tu) == doctest::Approx(3.0 / 6.0));
}

TEST_CASE("discovery basics") {
    auto zero = [](std::size_t, std::size_t) { return 0.0; };
    auto all = discover(zero, 5, 10.0);
    REQUIRE(all.size() == 1);
    CHECK(all[0].members.size() == 5);
    auto single = discover(zero, 1, 10.0);
    REQUIRE(single.size() == 1);
    CHECK(single[0].members == std::vector<std::size_t>{0});

    auto distinct = [](std::size_t i, std::size_t j) { return 1.0 + static_cast<double>(i + j); };
    CHECK(discover(distinct, 6, 0.0).size() == 6);
    CHECK(discover(distinct, 6, std::numeric_limits<double>::infinity()).size() == 1);
}

TEST_CASE("discovery with a planted oracle") {
    std::vector<int> user{0, 1, 0, 2, 1, 2};
    auto dist = [&](std::size_t i, std::size_t j) { return user[i] == user[j] ? 0.0 : 40.0; };
    auto groups = discover(dist, user.size(), 10.0);
    CHECK(groups.size() == 3);
    CHECK(discovery_accuracy(groups, user) == 1.0);
    CHECK(same_partition(group_index(groups, user.size()), user));
}

TEST_CASE("discovery matches the brute-force oracle") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 300; ++trial) {
        std::size_t n = 1 + rng() % 8;
        auto m = random_symmetric(rng, n, 20.0);
        bool single = trial % 3 == 0;
        auto groups = discover([&](std::size_t i, std::size_t j) { return m[i][j]; }, n, 10.0,
                               DiscoverOptions{single});
        auto expected = discover_oracle(m, 10.0, single);
        CHECK(group_index(groups, n) == expected);

        std::set<std::size_t> seen;
        for (const auto& g : groups) {
            CHECK_FALSE(g.members.empty());
            for (auto x : g.members) CHECK(seen.insert(x).second);
        }
        CHECK(seen.size() == n);
    }
}

TEST_CASE("discovery ties go to the lower group") {
    // 0 and 1 are far apart, 2 sits exactly between them
    std::vector<std::vector<double>> m{{0, 30, 5}, {30, 0, 5}, {5, 5, 0}};
    auto groups = discover([&](std::size_t i, std::size_t j) { return m[i][j]; }, 3, 10.0);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].members == std::vector<std::size_t>{0, 2});
}

TEST_CASE("auc basics") {
    std::vector<double> d{1, 2, 3, 4};
    std::vector<int> l{1, 1, 0, 0};
    CHECK(auc(d, l) == 1.0);
    std::vector<int> flipped{0, 0, 1, 1};
    CHECK(auc(d, flipped) == 0.0);
    std::vector<int> one_class{1, 1, 1, 1};
    try {
        auc(d, one_class);
        FAIL("single class accepted");
    } catch (const TasksError& e) {
        CHECK(e.code() == TasksErrc::degenerate_ground_truth);
    }
    auto roc = roc_curve(d, l);
    CHECK(roc.front().fpr == 0.0);
    CHECK(roc.back().tpr == 1.0);
    CHECK(roc.back().fpr == 1.0);
    CHECK(tpr_at_fpr(roc, 0.0) == 1.0);
}

TEST_CASE("auc of random scores") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> d(10000);
    std::vector<int> l(10000);
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] = u(rng);
        l[i] = static_cast<int>(i % 2);
    }
    CHECK(std::abs(auc(d, l) - 0.5) <= 0.05);
}

TEST_CASE("auc agrees with the pair-counting oracle") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 2 + rng() % 40;
        std::vector<double> d(n);
        std::vector<int> l(n);
        for (std::size_t i = 0; i < n; ++i) {
            d[i] = static_cast<double>(rng() % 10);  // plenty of ties
            l[i] = static_cast<int>(rng() % 2);
        }
        l[0] = 0;
        l[1] = 1;
        CHECK(auc(d, l) == doctest::Approx(auc_oracle(d, l)).epsilon(1e-12));
        std::vector<double> warped(n);
        for (std::size_t i = 0; i < n; ++i) warped[i] = std::exp(0.3 * d[i]) + 7.0;
        CHECK(auc(warped, l) == doctest::Approx(auc(d, l)).epsilon(1e-12));
    }
}

TEST_CASE("rates at eta") {
    std::vector<double> d{1, 12, 3, 10};
    std::vector<int> l{1, 1, 0, 0};
    auto r = rates_at(d, l, 10.0);
    CHECK(r.tpr == 0.5);
    CHECK(r.fpr == 0.5);
    CHECK(r.positives == 2);
    CHECK(r.negatives == 2);
}

TEST_CASE("assignment and discovery accuracy") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t rows = 1 + rng() % 6, cols = 1 + rng() % 6;
        std::vector<std::vector<double>> w(rows, std::vector<double>(cols));
        for (auto& row : w) {
            for (auto& x : row) x = static_cast<double>(rng() % 5);
        }
        auto match = max_weight_assignment(w);
        double total = 0;
        std::set<int> used;
        for (std::size_t r = 0; r < rows; ++r) {
            if (match[r] < 0) continue;
            CHECK(used.insert(match[r]).second);
            total += w[r][static_cast<std::size_t>(match[r])];
        }
        CHECK(total == assignment_oracle(w));

        std::size_t n = 1 + rng() % 8;
        std::vector<int> user(n), group(n);
        for (std::size_t i = 0; i < n; ++i) {
            user[i] = static_cast<int>(rng() % 3);
            group[i] = static_cast<int>(rng() % 4);
        }
        std::vector<UserGroup> groups;
        for (int k = 0; k < 4; ++k) {
            UserGroup g;
            g.id = k;
            for (std::size_t i = 0; i < n; ++i) {
                if (group[i] == k) g.members.push_back(i);
            }
            if (!g.members.empty()) groups.push_back(g);
        }
        CHECK(discovery_accuracy(groups, user) == doctest::Approx(discovery_accuracy_oracle(group, user)));
    }
    std::vector<int> user{1, 1, 2};
    std::vector<UserGroup> perfect{{0, {0, 1}, {}}, {1, {2}, {}}};
    CHECK(discovery_accuracy(perfect, user) == 1.0);
}

}
