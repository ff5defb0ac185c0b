// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero if
// any criterion fails.

#include "cli.hpp"
#include "graph_oracle.hpp"
#include "task_oracles.hpp"
#include "tls_encoder.hpp"
#include "x509_fixture.hpp"

#include "siamhan/ingest.hpp"
#include "siamhan/model.hpp"
#include "siamhan/pipeline.hpp"
#include "siamhan/synthgen.hpp"
#include "siamhan/tasks.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using namespace siamhan;
using namespace siamhan::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
    if (!ok) ++failures;
    std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
}

std::string fmt(double v, int prec = 4) {
    std::ostringstream s;
    s.precision(prec);
    s << v;
    return s.str();
}

// ---------------------------------------------------------------------------

void equations() {
    auto t0 = Clock::now();
    bool ok = true;
    std::string why;

    // positive pair, negative inside the margin, negative outside it
    struct Case { double d; int label; double expected; };
    for (auto c : {Case{3.0, 1, 9.0}, Case{12.5, 0, 56.25}, Case{25.0, 0, 0.0}}) {
        double got = contrastive_loss(c.d, c.label, 20.0);
        if (std::abs(got - c.expected) > 1e-9) {
            ok = false;
            why = "loss(" + fmt(c.d) + ", " + std::to_string(c.label) + ") = " + fmt(got, 17);
        }
    }

    std::mt19937_64 rng(101);
    auto params = ModelParams::random(4, 102, 0.5);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        auto g = random_graph(rng, 12);
        auto t = encode_trace(params, g, 0.2);
        auto off = [&](double s) { worst = std::max(worst, std::abs(s - 1.0)); };
        for (int p = 0; p < kMetaPathCount; ++p) {
            for (const auto& head : t.heads[p]) {
                for (const auto& row : head.alpha) {
                    double s = 0;
                    for (double x : row) s += x;
                    off(s);
                }
            }
        }
        off(t.semantic.beta.sum());
        off(t.graph.gamma.sum());
    }
    if (worst > 1e-6) {
        ok = false;
        why = "softmax off by " + fmt(worst);
    }

    const double eta = 10.0;
    if (verdict(eta, eta) != 0 || verdict(std::nextafter(eta, 0.0), eta) != 1 ||
        verdict(std::nextafter(eta, 20.0), eta) != 0) {
        ok = false;
        why = "verdict boundary";
    }

    double t = seconds_since(t0);
    if (t >= 10.0) ok = false;
    report("equations", ok, (why.empty() ? "loss cases exact, softmax max deviation " + fmt(worst) : why) +
                                ", " + fmt(t, 3) + " s");
}

void gradient_check() {
    auto t0 = Clock::now();
    std::mt19937_64 rng(202);
    TrainConfig config;
    double worst = 0.0;
    std::size_t tensors = 0;
    std::string why;
    for (int i = 0; i < 5; ++i) {
        auto g1 = random_small_graph(rng);
        auto g2 = random_small_graph(rng);
        auto params = ModelParams::random(4, 300 + i, 0.3);
        try {
            auto r = grad_check(params, g1, g2, i % 2, config);
            worst = std::max(worst, r.max_relative_error());
            tensors = r.tensors.size();
        } catch (const GradMismatch& e) {
            why = "mismatch in " + e.tensor();
            worst = std::max(worst, e.report().max_relative_error());
        }
    }
    double t = seconds_since(t0);
    bool ok = why.empty() && worst <= 1e-4 && t < 120.0;
    report("gradient_check", ok,
           (why.empty() ? "" : why + ", ") + "max relative error " + fmt(worst) + " over " + std::to_string(tensors) +
               " tensors, 5 pairs, " + fmt(t, 3) + " s");
}

void graph_oracle() {
    auto t0 = Clock::now();
    std::mt19937_64 rng(303);
    const WiretapWindow window(1'600'000'000, 30 * 86400);
    int mismatches = 0;
    std::string first;
    for (int i = 0; i < 20; ++i) {
        auto records = random_session_set(rng, 6, window);
        auto g = build_graph(records, window);
        auto diff = compare_with_oracle(g, records, window);
        if (!diff.empty()) {
            ++mismatches;
            if (first.empty()) first = diff;
        }
    }
    double t = seconds_since(t0);
    report("graph_oracle", mismatches == 0 && t < 10.0,
           std::to_string(mismatches) + " of 20 sets differ" + (first.empty() ? "" : " (" + first + ")") + ", " +
               fmt(t, 3) + " s");
}

void parser() {
    std::mt19937_64 rng(404);
    int mismatches = 0;
    std::vector<Bytes> corpus;
    for (int i = 0; i < 1000; ++i) {
        auto ch = random_client_hello(rng);
        auto ch_bytes = encode_client_hello(ch);
        auto c = parse_client_hello(ch_bytes);
        if (c.record_version != ch.record_version || c.client_version != ch.client_version ||
            c.cipher_suites != ch.cipher_suites || c.compression != ch.compression || c.sni != ch.sni)
            ++mismatches;

        auto sh = random_server_hello(rng);
        auto sh_bytes = encode_server_hello(sh);
        auto s = parse_server_hello(sh_bytes);
        if (s.record_version != sh.record_version || s.server_version != sh.server_version ||
            s.cipher_suite != sh.cipher_suite || s.compression_method != sh.compression_method)
            ++mismatches;

        auto cert = mint_certificate(random_cert_spec(rng));
        auto cert_bytes = encode_certificate_record({cert.der});
        auto info = parse_certificate(cert_bytes);
        if (info.algorithm_id != cert.algorithm_oid || info.issuer != cert.issuer || info.subject != cert.subject)
            ++mismatches;

        if (i < 50) {
            corpus.push_back(ch_bytes);
            corpus.push_back(sh_bytes);
            corpus.push_back(cert_bytes);
        }
    }

    // truncate, then flip a few bytes of what is left
    int crashes = 0;
    std::string first;
    for (int i = 0; i < 10000; ++i) {
        std::size_t which = rng() % corpus.size();
        const auto& full = corpus[which];
        Bytes cut(full.begin(), full.begin() + static_cast<long>(rng() % full.size()));
        int flips = static_cast<int>(rng() % 4);
        for (int f = 0; f < flips && !cut.empty(); ++f) cut[rng() % cut.size()] = static_cast<std::uint8_t>(rng());
        try {
            switch (which % 3) {
                case 0: parse_client_hello(cut); break;
                case 1: parse_server_hello(cut); break;
                default: parse_certificate(cut); break;
            }
        } catch (const IngestError&) {
        } catch (const std::exception& e) {
            ++crashes;
            if (first.empty()) first = e.what();
        }
    }
    report("parser_round_trip", mismatches == 0 && crashes == 0,
           std::to_string(mismatches) + " mismatches in 1000 cycles, " + std::to_string(crashes) +
               " crashes on 10000 mutated inputs" + (first.empty() ? "" : " (" + first + ")"));
}

void algorithm_oracles() {
    std::mt19937_64 rng(505);
    int track_bad = 0, discover_bad = 0, oracle_bad = 0;
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 1 + rng() % 8;
        std::size_t users = 1 + rng() % n;
        std::vector<int> user(n);
        for (std::size_t i = 0; i < n; ++i) user[i] = static_cast<int>(i < users ? i : rng() % users);
        std::shuffle(user.begin(), user.end(), rng);
        auto planted = [&](int a, int b) { return a == b ? 0.0 : 40.0; };

        // tracking: one candidate per user, every address as a test
        std::vector<int> cand_user(users);
        for (std::size_t u = 0; u < users; ++u) cand_user[u] = static_cast<int>(u);
        auto tracked = track([&](std::size_t i, std::size_t j) { return planted(cand_user[i], user[j]); }, users, n,
                             10.0);
        for (std::size_t u = 0; u < users; ++u) {
            std::vector<std::size_t> truth;
            for (std::size_t j = 0; j < n; ++j)
                if (user[j] == cand_user[u]) truth.push_back(j);
            if (tracked[u] != truth) ++track_bad;
        }

        auto groups = discover([&](std::size_t i, std::size_t j) { return planted(user[i], user[j]); }, n, 10.0);
        if (discovery_accuracy(groups, user) != 1.0 || groups.size() != users) ++discover_bad;

        // random distances against the brute-force re-implementation
        std::uniform_real_distribution<double> d(0.0, 20.0);
        std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) m[i][j] = m[j][i] = d(rng);
        bool single = trial % 2 == 0;
        auto got = discover([&](std::size_t i, std::size_t j) { return m[i][j]; }, n, 10.0, DiscoverOptions{single});
        std::vector<int> index(n, -1);
        for (std::size_t k = 0; k < got.size(); ++k)
            for (auto x : got[k].members) index[x] = static_cast<int>(k);
        if (index != discover_oracle(m, 10.0, single)) ++oracle_bad;
    }
    report("algorithm_oracles", track_bad == 0 && discover_bad == 0 && oracle_bad == 0,
           "tracking misses " + std::to_string(track_bad) + ", planted discovery misses " +
               std::to_string(discover_bad) + ", brute-force disagreements " + std::to_string(oracle_bad) +
               " over 50 instances");
}

// ---------------------------------------------------------------------------
// Learned-model criteria share one synthetic dataset.

TrainConfig e2e_config() {
    TrainConfig c;
    c.learning_rate = 0.005;
    c.batch_size = 32;
    c.max_epochs = 30;
    c.init_scale = 0.25;
    return c;
}
constexpr double kNegRatio = 5.0;

struct Metrics {
    double auc, ta, da;
};

Metrics metrics_of(const TestReport& r) { return {r.pairs.auc, r.tracking.accuracy, r.discovery.accuracy}; }

std::string describe(const Metrics& m) {
    return "AUC " + fmt(m.auc) + ", TA " + fmt(m.ta) + ", DA " + fmt(m.da);
}

void learned_criteria() {
    auto gen = GeneratorConfig::distinguishable();
    auto ds = generate(gen);
    auto plan = time_split(ds.labels, 0.3, 7, gen.start_time, gen.days_per_month, gen.days_per_month);
    auto test_window = month_window(gen.start_time, gen.days_per_month, plan.test_month, gen.days_per_month);

    auto t0 = Clock::now();
    auto data = training_data(ds.sessions, ds.labels, plan);
    auto config = e2e_config();
    auto trained = train_on(data, config, kNegRatio);
    auto test = labeled_graphs(ds.sessions, ds.labels, test_window, &plan.test_users, nullptr, plan.test_month);
    auto clean = metrics_of(evaluate_all(trained.params, config, test));
    double t = seconds_since(t0);
    report("end_to_end", clean.auc >= 0.95 && clean.ta >= 0.90 && clean.da >= 0.80 && t <= 600.0,
           describe(clean) + " on " + std::to_string(test.size()) + " test graphs, best epoch " +
               std::to_string(trained.log.best_epoch) + ", " + fmt(t, 4) + " s");

    auto ob = obfuscate(ds.sessions, ds.labels, Obfuscation::combination, 17);
    auto hidden = labeled_graphs(ob.sessions, ds.labels, test_window, &plan.test_users, &ob.forged_to_original,
                                 plan.test_month);
    auto obf = metrics_of(evaluate_all(trained.params, config, hidden));
    report("obfuscation_direction", obf.auc < clean.auc && obf.ta < clean.ta && obf.da < clean.da,
           "Combination gives " + describe(obf) + " against " + describe(clean));

    // month 1 only; month 2 of the training users drives early stopping
    auto window = [&](int month) { return month_window(gen.start_time, gen.days_per_month, month, gen.days_per_month); };
    TrainingData early{labeled_graphs(ds.sessions, ds.labels, window(1), &plan.train_users, nullptr, 1),
                       labeled_graphs(ds.sessions, ds.labels, window(2), &plan.train_users, nullptr, 2)};
    auto month1 = train_on(early, config, kNegRatio);
    auto auc_in = [&](int month) {
        auto g = labeled_graphs(ds.sessions, ds.labels, window(month), &plan.test_users, nullptr, month);
        return evaluate_all(month1.params, config, g).pairs.auc;
    };
    double a1 = auc_in(1), a4 = auc_in(4);
    report("timeliness", a1 - a4 <= 0.05,
           "AUC " + fmt(a1) + " in month 1, " + fmt(a4) + " in month 4, loss " + fmt(a1 - a4));
}

// ---------------------------------------------------------------------------

struct CliRun {
    bool ok = true;
    std::string error;
    std::map<std::string, std::string> digests;
};

CliRun cli_pipeline(const fs::path& dir) {
    CliRun run;
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto call = [&](std::vector<std::string> args) {
        args.insert(args.begin(), "siamhan");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        if (cli::run(static_cast<int>(argv.size()), argv.data(), out, err) != cli::kOk) {
            run.ok = false;
            if (run.error.empty()) run.error = args[1] + ": " + err.str();
        }
    };
    auto s = (dir / "sessions.jsonl").string(), l = (dir / "labels.txt").string();
    call({"generate", "--preset", "distinguishable", "--users", "8", "--seed", "21", "--out", dir.string()});
    call({"train", "--sessions", s, "--labels", l, "--epochs", "3", "--out", dir.string()});
    for (std::string cmd : {"eval", "track", "discover"})
        call({cmd, "--checkpoint", (dir / "checkpoint.json").string(), "--sessions", s, "--labels", l, "--users",
              "all", "--out", dir.string()});
    if (!run.ok) return run;
    for (const char* f : {"sessions.jsonl", "checkpoint.json", "training_log.json", "eval_report.json",
                          "tracking.json", "discovery.json"})
        run.digests[f] = file_sha256(dir / f);
    return run;
}

void determinism() {
    auto base = fs::temp_directory_path() / "siamhan_acceptance";
    auto a = cli_pipeline(base / "a");
    auto b = cli_pipeline(base / "b");
    std::string differing;
    for (const auto& [name, digest] : a.digests)
        if (b.digests[name] != digest) differing += (differing.empty() ? "" : ", ") + name;
    bool ok = a.ok && b.ok && differing.empty() && !a.digests.empty();
    std::string detail = !a.ok ? a.error : !b.ok ? b.error
                         : differing.empty() ? std::to_string(a.digests.size()) + " artifacts bit-identical"
                                             : "differs: " + differing;
    report("determinism", ok, detail);
    fs::remove_all(base);
}

} // namespace

int main() {
    std::vector<std::pair<const char*, std::function<void()>>> steps{
        {"equations", equations},       {"gradient_check", gradient_check},
        {"graph_oracle", graph_oracle}, {"parser_round_trip", parser},
        {"algorithm_oracles", algorithm_oracles}, {"determinism", determinism},
        {"learned", learned_criteria},
    };
    for (auto& [name, step] : steps) {
        try {
            step();
        } catch (const std::exception& e) {
            report(name, false, std::string("threw: ") + e.what());
        }
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
