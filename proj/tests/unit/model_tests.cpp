#include "doctest.h"

#include "graph_oracle.hpp"
#include "json.hpp"
#include "siamhan/model.hpp"

#include <cmath>
#include <filesystem>
#include <random>

using namespace siamhan;
using namespace siamhan::testing;

namespace {

constexpr double kSlope = 0.2;

double leaky(double x) { return x > 0 ? x : kSlope * x; }

} // namespace

TEST_SUITE("model") {

TEST_CASE("contrastive loss cases") {
    CHECK(contrastive_loss(3.0, 1, 20.0) == 9.0);
    CHECK(contrastive_loss(25.0, 0, 20.0) == 0.0);
    CHECK(contrastive_loss(0.0, 0, 20.0) == 400.0);
    CHECK(contrastive_loss(20.0, 0, 20.0) == 0.0);
    CHECK(contrastive_loss(12.5, 0, 20.0) == 56.25);
}

TEST_CASE("distance and verdict") {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(200);
    Eigen::VectorXd b = a;
    CHECK(distance(a, b) == 0.0);
    CHECK(verdict(0.0, 10.0) == 1);
    b(0) = 3;
    b(1) = 4;
    CHECK(distance(a, b) == 5.0);
    CHECK(verdict(10.0, 10.0) == 0);
    CHECK(verdict(std::nextafter(10.0, 0.0), 10.0) == 1);
    CHECK(verdict(11.0, 10.0) == 0);
}

TEST_CASE("node attention over a singleton") {
    Eigen::MatrixXd h = Eigen::MatrixXd::Random(kHiddenDim, 1);
    Eigen::RowVectorXd a = Eigen::RowVectorXd::Random(2 * kHiddenDim);
    auto r = node_attention(h, {{0}}, a, kSlope);
    CHECK(r.alpha[0][0] == 1.0);
    for (int i = 0; i < kHiddenDim; ++i) CHECK(r.output(i, 0) == doctest::Approx(leaky(h(i, 0))).epsilon(1e-15));
}

TEST_CASE("node attention with equal scores") {
    Eigen::MatrixXd h(kHiddenDim, 3);
    h.col(0).setRandom();
    h.col(1).setRandom();
    h.col(2) = h.col(1);
    Eigen::RowVectorXd a = Eigen::RowVectorXd::Random(2 * kHiddenDim);
    auto r = node_attention(h, {{0, 1, 2}, {1}, {2}}, a, kSlope);
    CHECK(r.alpha[0][1] == doctest::Approx(r.alpha[0][2]));
    auto s = node_attention(h.rightCols(2), {{0, 1}, {1}}, a, kSlope);
    CHECK(s.alpha[0][0] == doctest::Approx(0.5));
    CHECK(s.alpha[0][1] == doctest::Approx(0.5));
}

TEST_CASE("node attention matches the formula") {
    std::mt19937_64 rng(4);
    Eigen::MatrixXd h = Eigen::MatrixXd::Random(kHiddenDim, 4);
    Eigen::RowVectorXd a = Eigen::RowVectorXd::Random(2 * kHiddenDim);
    std::vector<std::vector<int>> nb{{0, 1, 3}, {1}, {2}, {3}};
    auto r = node_attention(h, nb, a, kSlope);
    std::vector<double> e;
    for (int v : nb[0]) {
        double dot = a.head(kHiddenDim).dot(h.col(0)) + a.tail(kHiddenDim).dot(h.col(v));
        e.push_back(std::exp(leaky(dot)));
    }
    double z = e[0] + e[1] + e[2];
    Eigen::VectorXd agg = Eigen::VectorXd::Zero(kHiddenDim);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(r.alpha[0][i] == doctest::Approx(e[i] / z).epsilon(1e-12));
        agg += e[i] / z * h.col(nb[0][i]);
    }
    for (int i = 0; i < kHiddenDim; ++i) CHECK(r.output(i, 0) == doctest::Approx(leaky(agg(i))).epsilon(1e-12));
}

TEST_CASE("semantic attention degenerate parameters") {
    auto params = ModelParams::random(4, 3);
    std::array<Eigen::MatrixXd, kMetaPathCount> z;
    Eigen::MatrixXd same = Eigen::MatrixXd::Random(params.embedding_dim(), 5);
    for (auto& m : z) m = same;
    auto r = semantic_attention(z, params);
    for (int p = 0; p < 3; ++p) CHECK(r.beta(p) == doctest::Approx(1.0 / 3.0));

    for (auto& m : z) m = Eigen::MatrixXd::Random(params.embedding_dim(), 5);
    params.semantic_vector.setZero();
    r = semantic_attention(z, params);
    for (int p = 0; p < 3; ++p) {
        CHECK(r.importance(p) == 0.0);
        CHECK(r.beta(p) == doctest::Approx(1.0 / 3.0));
    }
}

TEST_CASE("graph attention special cases") {
    auto params = ModelParams::random(4, 5);
    Eigen::MatrixXd one = Eigen::MatrixXd::Random(params.embedding_dim(), 1);
    auto r = graph_attention(one, params);
    CHECK(r.gamma(0) == 1.0);
    CHECK((r.embedding - one.col(0)).norm() == 0.0);

    Eigen::MatrixXd same(params.embedding_dim(), 6);
    for (int u = 0; u < 6; ++u) same.col(u) = one.col(0);
    r = graph_attention(same, params);
    CHECK((r.embedding - one.col(0)).norm() < 1e-12);
}

TEST_CASE("softmax normalization on random graphs") {
    std::mt19937_64 rng(8);
    auto params = ModelParams::random(4, 9, 0.5);
    for (int i = 0; i < 30; ++i) {
        auto g = random_graph(rng, 10);
        auto t = encode_trace(params, g, kSlope);
        for (int p = 0; p < kMetaPathCount; ++p) {
            for (const auto& head : t.heads[p]) {
                for (const auto& row : head.alpha) {
                    double s = 0;
                    for (double x : row) s += x;
                    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
                }
            }
        }
        CHECK(t.semantic.beta.sum() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(t.graph.gamma.sum() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(t.embedding().size() == 200);
        CHECK(t.embedding().allFinite());
    }
}

TEST_CASE("trace agrees with the separate attention levels") {
    std::mt19937_64 rng(12);
    auto params = ModelParams::random(4, 13, 0.3);
    auto g = random_graph(rng, 8);
    auto t = encode_trace(params, g, kSlope);
    auto sem = semantic_attention(t.z, params);
    CHECK((sem.beta - t.semantic.beta).norm() < 1e-12);
    CHECK((sem.output - t.semantic.output).norm() < 1e-10);
    auto gr = graph_attention(sem.output, params);
    CHECK((gr.embedding - t.embedding()).norm() < 1e-10);
    CHECK((encode(params, g, kSlope) - t.embedding()).norm() == 0.0);
}

TEST_CASE("siamese symmetry and padding") {
    std::mt19937_64 rng(21);
    auto params = ModelParams::random(4, 22, 0.3);
    for (int i = 0; i < 10; ++i) {
        auto g1 = random_graph(rng, 6);
        auto g2 = random_graph(rng, 6);
        auto z1 = encode(params, g1, kSlope);
        auto z2 = encode(params, g2, kSlope);
        CHECK(distance(z1, z2) == distance(z2, z1));
        CHECK(encode(params, g1, kSlope) == z1);

        auto padded = g1;
        const int n = padded.real_node_count();
        if (n < kMaxNodes) {
            padded.features.bottomRows(kMaxNodes - n).setConstant(0.25);
            CHECK(encode(params, padded, kSlope) == z1);
        }
    }
}

TEST_CASE("loss is never negative") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(0.0, 50.0);
    for (int i = 0; i < 1000; ++i) {
        double x = d(rng);
        CHECK(contrastive_loss(x, 0, 20.0) >= 0.0);
        CHECK(contrastive_loss(x, 1, 20.0) >= 0.0);
    }
}

TEST_CASE("gradient check on small pairs") {
    std::mt19937_64 rng(31);
    TrainConfig config;
    for (int i = 0; i < 2; ++i) {
        auto g1 = random_small_graph(rng);
        auto g2 = random_small_graph(rng);
        CHECK(g1.real_node_count() <= 8);
        auto params = ModelParams::random(4, 100 + i, 0.3);
        auto report = grad_check(params, g1, g2, i % 2, config);
        CHECK(report.max_relative_error() <= 1e-4);
        CHECK(report.tensors.size() == 17);
    }
}

TEST_CASE("sampled gradient check on full-size graphs") {
    std::mt19937_64 rng(37);
    auto g1 = random_graph(rng, 40);
    auto g2 = random_graph(rng, 40);
    auto params = ModelParams::random(4, 5, 0.3);
    GradCheckOptions options;
    options.max_entries_per_tensor = 12;
    auto report = grad_check(params, g1, g2, 1, TrainConfig{}, options);
    CHECK(report.max_relative_error() <= 1e-4);
}

TEST_CASE("corrupted gradient is caught") {
    std::mt19937_64 rng(41);
    auto g1 = random_small_graph(rng);
    auto g2 = random_small_graph(rng);
    auto params = ModelParams::random(4, 6, 0.3);
    GradCheckOptions options;
    options.tamper = [](ModelParams& grad) { grad.node_attention[1](0, 0) += 1.0; };
    try {
        grad_check(params, g1, g2, 1, TrainConfig{}, options);
        FAIL("tampered gradient passed");
    } catch (const GradMismatch& e) {
        CHECK(e.tensor().find("node_attention") == 0);
        CHECK(e.code() == ModelErrc::grad_mismatch);
    }
}

TEST_CASE("flat hinge gives zero gradient") {
    std::mt19937_64 rng(43);
    bool found = false;
    for (int attempt = 0; attempt < 50 && !found; ++attempt) {
        auto g1 = random_graph(rng, 8);
        auto g2 = random_graph(rng, 8);
        auto params = ModelParams::random(4, 50 + attempt, 4.0);
        auto pg = pair_gradient(params, g1, g2, 0, 20.0, kSlope);
        if (pg.distance <= 20.0) continue;
        found = true;
        CHECK(pg.loss == 0.0);
        CHECK(pg.grad.squared_norm() == 0.0);
    }
    CHECK(found);
}

TEST_CASE("parameter shapes") {
    auto p = ModelParams::random(4, 1, 0.05);
    for (int k = 0; k < kNodeKindCount; ++k) {
        CHECK(p.proj_weight[k].rows() == 50);
        CHECK(p.proj_weight[k].cols() == 50);
    }
    CHECK(p.node_attention[0].rows() == 4);
    CHECK(p.node_attention[0].cols() == 100);
    CHECK(p.semantic_weight.rows() == 128);
    CHECK(p.semantic_weight.cols() == 200);
    CHECK(p.graph_vector.rows() == 128);
    CHECK(p.embedding_dim() == 200);
    CHECK(p.semantic_weight.cwiseAbs().maxCoeff() <= 0.05);
    CHECK(ModelParams::random(4, 1, 0.05) == p);
    CHECK_FALSE(ModelParams::random(4, 2, 0.05) == p);
}

TEST_CASE("config validation") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    c.margin = 5.0;
    CHECK_THROWS_AS(c.validate(), ModelError);
    c = TrainConfig{};
    c.heads = 0;
    CHECK_THROWS_AS(c.validate(), ModelError);
    c = TrainConfig{};
    c.eta = 0.0;
    CHECK_THROWS_AS(c.validate(), ModelError);
}

TEST_CASE("checkpoint round trip is bit exact") {
    Checkpoint c;
    c.config.rng_seed = 77;
    c.config.batch_size = 8;
    c.params = ModelParams::random(4, 77, 0.7);
    c.optimizer = AdamState::fresh(4);
    c.optimizer.update(c.params, ModelParams::random(4, 78), 0.005);
    c.metadata = R"({"note":"x"})";
    auto path = std::filesystem::temp_directory_path() / "siamhan_ckpt_test.json";
    save_checkpoint(path, c);
    auto back = load_checkpoint(path);
    CHECK(back.config == c.config);
    CHECK(back.params == c.params);
    CHECK(back.optimizer.first_moment == c.optimizer.first_moment);
    CHECK(back.optimizer.second_moment == c.optimizer.second_moment);
    CHECK(back.optimizer.step == 1);
    CHECK(nlohmann::json::parse(back.metadata) == nlohmann::json::parse(c.metadata));
    CHECK(checkpoint_json(back) == checkpoint_json(c));
    CHECK_THROWS_AS(checkpoint_from_json("{\"format\": 1}"), ModelError);
    CHECK(train_config_from_json(train_config_json(c.config)) == c.config);
}

TEST_CASE("digests") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("attention export") {
    std::mt19937_64 rng(51);
    auto params = ModelParams::random(4, 52, 0.3);
    auto g1 = random_graph(rng, 6);
    auto g2 = random_graph(rng, 6);
    auto doc = nlohmann::json::parse(export_attention(params, TrainConfig{}, g1, g2));
    for (const char* side : {"first", "second"}) {
        const auto& s = doc.at(side);
        CHECK(s.at("beta").size() == 3);
        for (const auto& [path, heads] : s.at("alpha").items()) {
            CHECK(heads.size() == 4);
            for (const auto& head : heads) {
                for (const auto& row : head) {
                    double sum = 0;
                    for (const auto& w : row.at("weights")) sum += w.at("weight").get<double>();
                    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
                }
            }
        }
    }
    auto same = nlohmann::json::parse(export_attention(params, TrainConfig{}, g1, g1));
    CHECK(same.at("first").at("alpha") == same.at("second").at("alpha"));
    CHECK(same.at("first").at("beta") == same.at("second").at("beta"));
    CHECK(same.at("first").at("gamma") == same.at("second").at("gamma"));
    CHECK(same.at("distance").get<double>() == 0.0);
    CHECK(same.at("verdict").get<int>() == 1);
}

}
