#include "cli.hpp"

#include "siamhan/pipeline.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

namespace siamhan::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kToolVersion = "1.0.0";

// Thrown for bad flag combinations detected after parsing.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string out;
    std::vector<std::string> argv;
};

struct WindowOptions {
    std::int64_t start = std::numeric_limits<std::int64_t>::min();
    int days_per_month = 30;
    int window_days = 30;
    int month = 1;
};

fs::path output_dir(const Common& c) {
    fs::path dir = c.out;
    if (dir.empty()) {
        const char* env = std::getenv(kOutputDirEnv);
        dir = env && *env ? env : ".";
    }
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw std::runtime_error("cannot write " + path.string());
    }
    f << text;
    if (!text.empty() && text.back() != '\n') {
        f << '\n';
    }
    if (!f) {
        throw std::runtime_error("write failed for " + path.string());
    }
}

std::string read_text(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw IngestError(IngestErrc::io_error, "cannot open " + path.string());
    }
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

json file_entry(const fs::path& p) { return {{"path", p.string()}, {"sha256", file_sha256(p)}}; }

void write_manifest(const fs::path& dir, const std::string& command, const Common& common, const json& config,
                    const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs,
                    const std::optional<fs::path>& checkpoint = std::nullopt) {
    json m = {
        {"tool", "siamhan"},
        {"version", kToolVersion},
        {"command", command},
        {"argv", common.argv},
        {"config", config},
    };
    if (config.contains("seed")) {
        m["seed"] = config["seed"];
    }
    json in = json::array();
    for (const auto& p : inputs) {
        in.push_back(file_entry(p));
    }
    json out = json::array();
    for (const auto& p : outputs) {
        out.push_back(file_entry(p));
    }
    m["inputs"] = in;
    m["outputs"] = out;
    m["checkpoint_sha256"] = checkpoint ? json(file_sha256(*checkpoint)) : json(nullptr);
    write_text(dir / (command + ".manifest.json"), m.dump(2));
}

std::int64_t resolve_start(const WindowOptions& w, const std::vector<SessionRecord>& sessions) {
    if (w.start != std::numeric_limits<std::int64_t>::min()) {
        return w.start;
    }
    if (sessions.empty()) {
        throw UsageError("session log is empty; pass --start explicitly");
    }
    std::int64_t first = sessions.front().timestamp;
    for (const auto& s : sessions) {
        first = std::min(first, s.timestamp);
    }
    std::int64_t day = first / 86400;
    if (first < 0 && first % 86400 != 0) {
        --day;
    }
    return day * 86400;
}

void add_window_options(CLI::App* app, WindowOptions& w, bool with_month) {
    app->add_option("--start", w.start, "Epoch second of month 1 (default: midnight UTC before the first session)");
    app->add_option("--days-per-month", w.days_per_month, "Length of one month in days")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_option("--window-days", w.window_days, "Wiretap window length in days from the month start")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    if (with_month) {
        app->add_option("--month", w.month, "Month (1-based) whose window is used")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
    }
}

std::map<Ipv6Address, Ipv6Address> read_forged(const fs::path& path) {
    std::map<Ipv6Address, Ipv6Address> out;
    std::istringstream in(read_text(path));
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::istringstream fields(line);
        std::string a, b;
        fields >> a >> b;
        auto forged = Ipv6Address::parse(a);
        auto original = Ipv6Address::parse(b);
        if (!forged || !original) {
            throw IngestError(IngestErrc::schema_error,
                              path.string() + " line " + std::to_string(n) + ": expected '<forged> <original>'", n);
        }
        out.emplace(*forged, *original);
    }
    return out;
}

void write_forged(const fs::path& path, const std::map<Ipv6Address, Ipv6Address>& forged) {
    std::ostringstream s;
    for (const auto& [f, o] : forged) {
        s << f.to_string() << ' ' << o.to_string() << '\n';
    }
    write_text(path, s.str());
}

// ---------------------------------------------------------------------------

struct GenerateOptions {
    std::string preset = "default";
    int users = -1;
    int months = -1;
    int days_per_month = -1;
    std::uint64_t seed = 1;
    std::int64_t start = std::numeric_limits<std::int64_t>::min();
};

int cmd_generate(const GenerateOptions& o, const Common& common, std::ostream& out) {
    GeneratorConfig cfg = o.preset == "distinguishable" ? GeneratorConfig::distinguishable() : GeneratorConfig{};
    cfg.seed = o.seed;
    if (o.users > 0) cfg.users = o.users;
    if (o.months > 0) cfg.months = o.months;
    if (o.days_per_month > 0) cfg.days_per_month = o.days_per_month;
    if (o.start != std::numeric_limits<std::int64_t>::min()) cfg.start_time = o.start;
    cfg.validate();

    auto ds = generate(cfg);
    fs::path dir = output_dir(common);
    fs::path sessions = dir / "sessions.jsonl";
    fs::path labels = dir / "labels.txt";
    fs::path generator = dir / "generator.json";
    write_session_log(sessions, ds.sessions);
    write_labels(labels, ds.labels);
    write_text(generator, manifest_json(cfg));
    json config = json::parse(manifest_json(cfg));
    config["preset"] = o.preset;
    write_manifest(dir, "generate", common, config, {}, {sessions, labels, generator});
    out << "generated " << ds.sessions.size() << " sessions, " << ds.labels.size() << " addresses, " << cfg.users
        << " users -> " << dir.string() << '\n';
    return kOk;
}

struct GraphsOptions {
    std::string sessions;
    std::string labels;
    WindowOptions window;
};

int cmd_graphs(const GraphsOptions& o, const Common& common, std::ostream& out) {
    auto sessions = load_session_log(o.sessions);
    std::int64_t start = resolve_start(o.window, sessions);
    auto window = month_window(start, o.window.days_per_month, o.window.month, o.window.window_days);

    std::vector<KnowledgeGraph> graphs;
    json users = json::array();
    if (!o.labels.empty()) {
        auto lg = labeled_graphs(sessions, read_labels(o.labels), window, nullptr, nullptr, o.window.month);
        graphs = std::move(lg.graphs);
        for (std::size_t i = 0; i < lg.user_of.size(); ++i) {
            users.push_back({{"address", lg.address[i].to_string()}, {"user", lg.user_of[i]}});
        }
    } else {
        graphs = build_graphs(sessions, window);
    }
    fs::path dir = output_dir(common);
    fs::path snapshot = dir / "graphs.json";
    write_graph_snapshots(snapshot, graphs);
    std::vector<fs::path> outputs{snapshot};
    if (!o.labels.empty()) {
        fs::path index = dir / "graph_labels.json";
        write_text(index, users.dump(2));
        outputs.push_back(index);
    }
    json config = {{"start", start},
                   {"days_per_month", o.window.days_per_month},
                   {"window_days", o.window.window_days},
                   {"month", o.window.month},
                   {"window", {{"start", window.start}, {"duration", window.duration}}}};
    std::vector<fs::path> inputs{o.sessions};
    if (!o.labels.empty()) inputs.emplace_back(o.labels);
    write_manifest(dir, "graphs", common, config, inputs, outputs);
    out << "built " << graphs.size() << " graphs -> " << snapshot.string() << '\n';
    return kOk;
}

struct TrainOptions {
    std::string sessions;
    std::string labels;
    WindowOptions window;
    std::string split = "time";
    double test_fraction = 0.3;
    std::uint64_t seed = 1;
    double neg_ratio = 5.0;
    TrainConfig config;
};

int cmd_train(TrainOptions o, const Common& common, std::ostream& out) {
    o.config.rng_seed = o.seed;
    o.config.validate();
    if (!(o.neg_ratio >= 0.0)) {
        throw UsageError("--neg-ratio must be non-negative");
    }
    if (o.window.window_days > o.window.days_per_month) {
        throw UsageError("--window-days cannot exceed --days-per-month");
    }
    auto sessions = load_session_log(o.sessions);
    auto labels = read_labels(o.labels);
    std::int64_t start = resolve_start(o.window, sessions);
    SplitPlan plan =
        time_split(labels, o.test_fraction, o.seed, start, o.window.days_per_month, o.window.window_days);
    auto data = training_data(sessions, labels, plan);

    json log = json::array();
    auto result = train_on(data, o.config, o.neg_ratio, [&](const EpochLog& e, const ModelParams&) {
        log.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"validation_loss", e.validation_loss}});
    });

    json metadata = {
        {"split", plan.to_json()},
        {"neg_ratio", o.neg_ratio},
        {"test_fraction", o.test_fraction},
        {"train_graphs", data.train.size()},
        {"validation_graphs", data.validation.size()},
        {"sessions_sha256", file_sha256(o.sessions)},
        {"labels_sha256", file_sha256(o.labels)},
    };
    Checkpoint ck{o.config, result.params, result.optimizer, metadata.dump()};

    fs::path dir = output_dir(common);
    fs::path checkpoint = dir / "checkpoint.json";
    fs::path log_path = dir / "training_log.json";
    save_checkpoint(checkpoint, ck);
    json log_doc = {{"epochs", log},
                    {"best_epoch", result.log.best_epoch},
                    {"best_validation_loss", result.log.best_validation_loss},
                    {"early_stopped", result.log.early_stopped}};
    write_text(log_path, log_doc.dump(2));

    json config = json::parse(train_config_json(o.config));
    config["seed"] = o.seed;
    config["neg_ratio"] = o.neg_ratio;
    config["test_fraction"] = o.test_fraction;
    config["split"] = plan.to_json();
    write_manifest(dir, "train", common, config, {o.sessions, o.labels}, {checkpoint, log_path}, checkpoint);
    out << "trained " << result.log.epochs.size() << " epochs (best " << result.log.best_epoch << ", validation loss "
        << result.log.best_validation_loss << ") -> " << checkpoint.string() << '\n';
    return kOk;
}

// Shared by eval, track and discover.
struct ApplyOptions {
    std::string checkpoint;
    std::string sessions;
    std::string labels;
    std::string forged;
    int month = 0;  // 0: the split's test month
    double eta = std::numeric_limits<double>::quiet_NaN();
    std::string users = "test";
};

struct Applied {
    Checkpoint checkpoint;
    SplitPlan plan;
    LabeledGraphs graphs;
    json config;
    std::vector<fs::path> inputs;
};

Applied prepare(const ApplyOptions& o) {
    Applied a;
    a.checkpoint = load_checkpoint(o.checkpoint);
    json metadata = json::parse(a.checkpoint.metadata);
    if (!metadata.contains("split")) {
        throw UsageError("checkpoint " + o.checkpoint + " carries no split plan");
    }
    a.plan = SplitPlan::from_json(metadata.at("split"));
    if (!std::isnan(o.eta)) {
        a.checkpoint.config.eta = o.eta;
        a.checkpoint.config.validate();
    }
    const int month = o.month > 0 ? o.month : a.plan.test_month;
    auto sessions = load_session_log(o.sessions);
    auto labels = read_labels(o.labels);
    std::map<Ipv6Address, Ipv6Address> forged;
    if (!o.forged.empty()) {
        forged = read_forged(o.forged);
    }
    const std::set<int>* users = o.users == "test" ? &a.plan.test_users : nullptr;
    a.graphs = labeled_graphs(sessions, labels,
                              month_window(a.plan.start_time, a.plan.days_per_month, month, a.plan.window_days), users,
                              o.forged.empty() ? nullptr : &forged, month);
    if (a.graphs.size() == 0) {
        throw std::runtime_error("no labeled addresses are active in month " + std::to_string(month));
    }
    a.config = {{"eta", a.checkpoint.config.eta}, {"month", month}, {"users", o.users}, {"split", a.plan.to_json()}};
    a.inputs = {o.checkpoint, o.sessions, o.labels};
    if (!o.forged.empty()) {
        a.inputs.emplace_back(o.forged);
    }
    return a;
}

void add_apply_options(CLI::App* app, ApplyOptions& o) {
    app->add_option("--checkpoint", o.checkpoint, "Trained checkpoint")->required()->check(CLI::ExistingFile);
    app->add_option("--sessions", o.sessions, "Session log (JSON lines)")->required()->check(CLI::ExistingFile);
    app->add_option("--labels", o.labels, "Address to user label file")->required()->check(CLI::ExistingFile);
    app->add_option("--forged", o.forged, "Forged-to-original address map from obfuscate")->check(CLI::ExistingFile);
    app->add_option("--month", o.month, "Month to evaluate (default: the split's test month)")
        ->check(CLI::PositiveNumber);
    app->add_option("--eta", o.eta, "Override the verdict threshold")->check(CLI::PositiveNumber);
    app->add_option("--users", o.users, "Which users' addresses to use")
        ->capture_default_str()
        ->check(CLI::IsMember({"test", "all"}));
}

int cmd_eval(const ApplyOptions& o, const Common& common, std::ostream& out) {
    Applied a = prepare(o);
    const auto& cfg = a.checkpoint.config;
    EmbeddingCache cache(a.checkpoint.params, cfg, a.graphs.graphs);
    PairReport report = evaluate_pairs(cache, a.graphs.user_of, cfg.eta);

    json verdicts = json::array();
    for (const auto& p : all_labeled_pairs(a.graphs.user_of)) {
        double d = cache.distance(p.first, p.second);
        verdicts.push_back({a.graphs.address[p.first].to_string(), a.graphs.address[p.second].to_string(), d,
                            verdict(d, cfg.eta), p.label});
    }
    json doc = report.to_json();
    doc["eta"] = cfg.eta;
    doc["graphs"] = a.graphs.size();
    doc["verdicts"] = {{"columns", {"first", "second", "distance", "related", "same_user"}}, {"rows", verdicts}};

    fs::path dir = output_dir(common);
    fs::path path = dir / "eval_report.json";
    write_text(path, doc.dump(2));
    write_manifest(dir, "eval", common, a.config, a.inputs, {path}, fs::path(o.checkpoint));
    out << "AUC " << report.auc << "  TPR " << report.tpr << "  FPR " << report.fpr << "  (" << report.pairs
        << " pairs) -> " << path.string() << '\n';
    return kOk;
}

int cmd_track(const ApplyOptions& o, const Common& common, std::ostream& out) {
    Applied a = prepare(o);
    EmbeddingCache cache(a.checkpoint.params, a.checkpoint.config, a.graphs.graphs);
    TrackingReport report = evaluate_tracking(cache, a.graphs, a.checkpoint.config.eta);
    json doc = report.to_json(a.graphs);
    doc["eta"] = a.checkpoint.config.eta;
    fs::path dir = output_dir(common);
    fs::path path = dir / "tracking.json";
    write_text(path, doc.dump(2));
    write_manifest(dir, "track", common, a.config, a.inputs, {path}, fs::path(o.checkpoint));
    out << "TA " << report.accuracy << " over " << report.candidates.size() << " targets x " << report.tests.size()
        << " addresses -> " << path.string() << '\n';
    return kOk;
}

int cmd_discover(const ApplyOptions& o, bool single_representative, const Common& common, std::ostream& out) {
    Applied a = prepare(o);
    EmbeddingCache cache(a.checkpoint.params, a.checkpoint.config, a.graphs.graphs);
    DiscoveryReport report;
    if (single_representative) {
        report.groups = discover([&](std::size_t i, std::size_t j) { return cache.distance(i, j); }, a.graphs.size(),
                                 a.checkpoint.config.eta, DiscoverOptions{true});
        report.users = std::set<int>(a.graphs.user_of.begin(), a.graphs.user_of.end()).size();
        report.accuracy = discovery_accuracy(report.groups, a.graphs.user_of);
    } else {
        report = evaluate_discovery(cache, a.graphs, a.checkpoint.config.eta);
    }
    json doc = report.to_json(a.graphs);
    doc["eta"] = a.checkpoint.config.eta;
    doc["single_representative"] = single_representative;
    a.config["single_representative"] = single_representative;
    fs::path dir = output_dir(common);
    fs::path path = dir / "discovery.json";
    write_text(path, doc.dump(2));
    write_manifest(dir, "discover", common, a.config, a.inputs, {path}, fs::path(o.checkpoint));
    out << "DA " << report.accuracy << ": " << report.groups.size() << " groups for " << report.users << " users -> "
        << path.string() << '\n';
    return kOk;
}

struct ObfuscateOptions {
    std::string sessions;
    std::string labels;
    std::string method;
    std::uint64_t seed = 1;
};

int cmd_obfuscate(const ObfuscateOptions& o, const Common& common, std::ostream& out) {
    Obfuscation method = parse_obfuscation(o.method);
    auto sessions = load_session_log(o.sessions);
    auto labels = read_labels(o.labels);
    auto result = obfuscate(sessions, labels, method, o.seed);
    fs::path dir = output_dir(common);
    fs::path path = dir / "obfuscated_sessions.jsonl";
    write_session_log(path, result.sessions);
    std::vector<fs::path> outputs{path};
    if (!result.forged_to_original.empty()) {
        fs::path forged = dir / "forged.txt";
        write_forged(forged, result.forged_to_original);
        outputs.push_back(forged);
    }
    json config = {{"method", to_string(method)}, {"seed", o.seed}};
    write_manifest(dir, "obfuscate", common, config, {o.sessions, o.labels}, outputs);
    out << to_string(method) << ": " << sessions.size() << " -> " << result.sessions.size() << " sessions -> "
        << path.string() << '\n';
    return kOk;
}

struct AttnOptions {
    std::string checkpoint;
    std::string sessions;
    std::string first;
    std::string second;
    int month = 0;
};

int cmd_attn(const AttnOptions& o, const Common& common, std::ostream& out) {
    Checkpoint ck = load_checkpoint(o.checkpoint);
    json metadata = json::parse(ck.metadata);
    if (!metadata.contains("split")) {
        throw UsageError("checkpoint " + o.checkpoint + " carries no split plan");
    }
    SplitPlan plan = SplitPlan::from_json(metadata.at("split"));
    const int month = o.month > 0 ? o.month : plan.test_month;
    auto first = Ipv6Address::parse(o.first);
    auto second = Ipv6Address::parse(o.second);
    if (!first) throw UsageError("--first: not an IPv6 address: " + o.first);
    if (!second) throw UsageError("--second: not an IPv6 address: " + o.second);

    auto sessions = load_session_log(o.sessions);
    auto window = month_window(plan.start_time, plan.days_per_month, month, plan.window_days);
    auto by_client = group_by_client(sessions);
    auto graph_of = [&](const Ipv6Address& a, const char* flag) {
        auto it = by_client.find(a);
        if (it == by_client.end()) {
            throw UsageError(std::string(flag) + ": address " + a.to_string() + " does not appear in the log");
        }
        return build_graph(it->second, window);
    };
    KnowledgeGraph g1 = graph_of(*first, "--first");
    KnowledgeGraph g2 = graph_of(*second, "--second");

    fs::path dir = output_dir(common);
    fs::path path = dir / "attention.json";
    write_text(path, export_attention(ck.params, ck.config, g1, g2));
    json config = {{"first", first->to_string()}, {"second", second->to_string()}, {"month", month},
                   {"window", {{"start", window.start}, {"duration", window.duration}}}};
    write_manifest(dir, "attn", common, config, {o.checkpoint, o.sessions}, {path}, fs::path(o.checkpoint));
    out << "attention for " << first->to_string() << " / " << second->to_string() << " -> " << path.string() << '\n';
    return kOk;
}

bool is_validation_error(const std::exception& e) {
    // Unreadable or malformed inputs count as validation failures.
    if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const std::invalid_argument*>(&e) ||
        dynamic_cast<const GraphError*>(&e) || dynamic_cast<const IngestError*>(&e)) {
        return true;
    }
    if (auto se = dynamic_cast<const SynthError*>(&e)) {
        return se->code() == SynthErrc::bad_config || se->code() == SynthErrc::unknown_method;
    }
    if (auto me = dynamic_cast<const ModelError*>(&e)) {
        return me->code() == ModelErrc::bad_config || me->code() == ModelErrc::bad_checkpoint;
    }
    return false;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"IPv6 address correlation with siamese heterogeneous graph attention", "siamhan"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    Common common;
    for (int i = 0; i < argc; ++i) {
        common.argv.emplace_back(argv[i]);
    }
    auto add_out = [&](CLI::App* sub) {
        sub->add_option("--out", common.out,
                        std::string("Output directory (default: $") + kOutputDirEnv + " or the current directory)");
    };

    GenerateOptions gen;
    auto* generate_cmd = app.add_subcommand("generate", "Generate a labeled synthetic session log");
    generate_cmd->add_option("--preset", gen.preset, "Generator preset")
        ->capture_default_str()
        ->check(CLI::IsMember({"default", "distinguishable"}));
    generate_cmd->add_option("--users", gen.users, "Number of users")->check(CLI::PositiveNumber);
    generate_cmd->add_option("--months", gen.months, "Number of months")->check(CLI::PositiveNumber);
    generate_cmd->add_option("--days-per-month", gen.days_per_month, "Days per month")->check(CLI::PositiveNumber);
    generate_cmd->add_option("--start", gen.start, "Epoch second of the first day");
    generate_cmd->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
    add_out(generate_cmd);

    GraphsOptions graphs;
    auto* graphs_cmd = app.add_subcommand("graphs", "Build knowledge graph snapshots for one window");
    graphs_cmd->add_option("--sessions", graphs.sessions, "Session log")->required()->check(CLI::ExistingFile);
    graphs_cmd->add_option("--labels", graphs.labels, "Restrict to labeled addresses")->check(CLI::ExistingFile);
    add_window_options(graphs_cmd, graphs.window, true);
    add_out(graphs_cmd);

    TrainOptions train_opts;
    auto* train_cmd = app.add_subcommand("train", "Train the correlation model with a time-based split");
    train_cmd->add_option("--sessions", train_opts.sessions, "Session log")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--labels", train_opts.labels, "Label file")->required()->check(CLI::ExistingFile);
    add_window_options(train_cmd, train_opts.window, false);
    train_cmd->add_option("--split", train_opts.split, "Split policy")
        ->capture_default_str()
        ->check(CLI::IsMember({"time"}));
    train_cmd->add_option("--test-fraction", train_opts.test_fraction, "Share of users held out for testing")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    train_cmd->add_option("--seed", train_opts.seed, "Seed for the split, initialization and sampling")
        ->capture_default_str();
    train_cmd->add_option("--eta", train_opts.config.eta, "Verdict threshold")->capture_default_str();
    train_cmd->add_option("--margin", train_opts.config.margin, "Contrastive margin")->capture_default_str();
    train_cmd->add_option("--heads", train_opts.config.heads, "Attention heads")->capture_default_str();
    train_cmd->add_option("--patience", train_opts.config.patience, "Early stopping patience")->capture_default_str();
    train_cmd->add_option("--epochs", train_opts.config.max_epochs, "Maximum epochs")->capture_default_str();
    train_cmd->add_option("--batch-size", train_opts.config.batch_size, "Pairs per batch")->capture_default_str();
    train_cmd->add_option("--lr", train_opts.config.learning_rate, "Adam learning rate")->capture_default_str();
    train_cmd->add_option("--weight-decay", train_opts.config.weight_decay, "L2 regularization")
        ->capture_default_str();
    train_cmd->add_option("--neg-ratio", train_opts.neg_ratio, "Negative pairs per positive pair")
        ->capture_default_str();
    train_cmd->add_option("--init-scale", train_opts.config.init_scale,
                          "Uniform init bound (0 selects per-tensor Glorot)")
        ->capture_default_str();
    add_out(train_cmd);

    ApplyOptions eval_opts, track_opts, discover_opts;
    bool single_representative = false;
    auto* eval_cmd = app.add_subcommand("eval", "Pairwise correlation metrics and ROC");
    add_apply_options(eval_cmd, eval_opts);
    add_out(eval_cmd);
    auto* track_cmd = app.add_subcommand("track", "Track target users from one known address each");
    add_apply_options(track_cmd, track_opts);
    add_out(track_cmd);
    auto* discover_cmd = app.add_subcommand("discover", "Group addresses into discovered users");
    add_apply_options(discover_cmd, discover_opts);
    discover_cmd->add_flag("--single-representative", single_representative,
                           "Compare against each group's first member only");
    add_out(discover_cmd);

    ObfuscateOptions obf;
    auto* obfuscate_cmd = app.add_subcommand("obfuscate", "Apply a traffic obfuscation countermeasure");
    obfuscate_cmd->add_option("--sessions", obf.sessions, "Session log")->required()->check(CLI::ExistingFile);
    obfuscate_cmd->add_option("--labels", obf.labels, "Label file")->required()->check(CLI::ExistingFile);
    obfuscate_cmd
        ->add_option("--method", obf.method, "C-Random, CF-Random, CF-Background, SF-Background or Combination")
        ->required();
    obfuscate_cmd->add_option("--seed", obf.seed, "Seed")->capture_default_str();
    add_out(obfuscate_cmd);

    AttnOptions attn;
    auto* attn_cmd = app.add_subcommand("attn", "Dump attention weights for an address pair");
    attn_cmd->add_option("--checkpoint", attn.checkpoint, "Trained checkpoint")->required()->check(CLI::ExistingFile);
    attn_cmd->add_option("--sessions", attn.sessions, "Session log")->required()->check(CLI::ExistingFile);
    attn_cmd->add_option("--first", attn.first, "First client address")->required();
    attn_cmd->add_option("--second", attn.second, "Second client address")->required();
    attn_cmd->add_option("--month", attn.month, "Month (default: the split's test month)")->check(CLI::PositiveNumber);
    add_out(attn_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kValidationError;
    }

    try {
        if (*generate_cmd) return cmd_generate(gen, common, out);
        if (*graphs_cmd) return cmd_graphs(graphs, common, out);
        if (*train_cmd) return cmd_train(train_opts, common, out);
        if (*eval_cmd) return cmd_eval(eval_opts, common, out);
        if (*track_cmd) return cmd_track(track_opts, common, out);
        if (*discover_cmd) return cmd_discover(discover_opts, single_representative, common, out);
        if (*obfuscate_cmd) return cmd_obfuscate(obf, common, out);
        if (*attn_cmd) return cmd_attn(attn, common, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return is_validation_error(e) ? kValidationError : kRuntimeError;
    }
    return kValidationError;
}

} // namespace siamhan::cli
