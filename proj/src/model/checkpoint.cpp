#include "siamhan/model.hpp"

#include "json.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <sstream>

namespace siamhan {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "siamhan-checkpoint";
constexpr int kVersion = 1;

[[noreturn]] void bad(const std::string& what) { throw ModelError(ModelErrc::bad_checkpoint, what); }

json tensors_json(const ModelParams& p) {
    json out = json::array();
    p.for_each([&](const std::string& name, const Eigen::MatrixXd& t) {
        json values = json::array();
        for (Eigen::Index r = 0; r < t.rows(); ++r) {
            for (Eigen::Index c = 0; c < t.cols(); ++c) {
                values.push_back(t(r, c));
            }
        }
        out.push_back({{"name", name}, {"shape", {t.rows(), t.cols()}}, {"values", std::move(values)}});
    });
    return out;
}

ModelParams tensors_from_json(const json& arr, int heads) {
    ModelParams p = ModelParams::zeros(heads);
    std::size_t i = 0;
    p.for_each([&](const std::string& name, Eigen::MatrixXd& t) {
        if (i >= arr.size()) {
            bad("missing tensor " + name);
        }
        const json& jt = arr[i++];
        if (jt.at("name").get<std::string>() != name) {
            bad("expected tensor " + name + ", found " + jt.at("name").get<std::string>());
        }
        auto shape = jt.at("shape").get<std::vector<Eigen::Index>>();
        if (shape.size() != 2 || shape[0] != t.rows() || shape[1] != t.cols()) {
            bad("shape mismatch for tensor " + name);
        }
        const json& values = jt.at("values");
        if (values.size() != static_cast<std::size_t>(t.size())) {
            bad("value count mismatch for tensor " + name);
        }
        std::size_t k = 0;
        for (Eigen::Index r = 0; r < t.rows(); ++r) {
            for (Eigen::Index c = 0; c < t.cols(); ++c) {
                t(r, c) = values[k++].get<double>();
            }
        }
    });
    if (i != arr.size()) {
        bad("unexpected extra tensors");
    }
    return p;
}

json config_json(const TrainConfig& c) {
    return {{"learning_rate", c.learning_rate}, {"weight_decay", c.weight_decay},
            {"heads", c.heads},                 {"margin", c.margin},
            {"eta", c.eta},                     {"leaky_relu_slope", c.leaky_relu_slope},
            {"patience", c.patience},           {"max_epochs", c.max_epochs},
            {"batch_size", c.batch_size},       {"rng_seed", c.rng_seed},
            {"init_scale", c.init_scale}};
}

TrainConfig config_from_json(const json& j) {
    TrainConfig c;
    c.learning_rate = j.at("learning_rate").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.heads = j.at("heads").get<int>();
    c.margin = j.at("margin").get<double>();
    c.eta = j.at("eta").get<double>();
    c.leaky_relu_slope = j.at("leaky_relu_slope").get<double>();
    c.patience = j.at("patience").get<int>();
    c.max_epochs = j.at("max_epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    c.init_scale = j.at("init_scale").get<double>();
    return c;
}

} // namespace

std::string train_config_json(const TrainConfig& config) { return config_json(config).dump(); }

TrainConfig train_config_from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ModelError(ModelErrc::bad_config, "training config is not a JSON object");
    }
    try {
        TrainConfig c = config_from_json(j);
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ModelError(ModelErrc::bad_config, std::string("incomplete training config: ") + e.what());
    }
}

std::string checkpoint_json(const Checkpoint& ck) {
    json metadata = json::parse(ck.metadata, nullptr, false);
    if (metadata.is_discarded() || !metadata.is_object()) {
        bad("checkpoint metadata must be a JSON object");
    }
    json doc = {
        {"format", kFormat},
        {"version", kVersion},
        {"config", config_json(ck.config)},
        {"tensors", tensors_json(ck.params)},
        {"optimizer",
         {{"step", ck.optimizer.step},
          {"beta1", ck.optimizer.beta1},
          {"beta2", ck.optimizer.beta2},
          {"epsilon", ck.optimizer.epsilon},
          {"first_moment", tensors_json(ck.optimizer.first_moment)},
          {"second_moment", tensors_json(ck.optimizer.second_moment)}}},
        {"metadata", metadata},
    };
    return doc.dump();
}

Checkpoint checkpoint_from_json(const std::string& text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        bad("checkpoint is not a JSON object");
    }
    try {
        if (doc.at("format").get<std::string>() != kFormat) {
            bad("not a siamhan checkpoint");
        }
        if (doc.at("version").get<int>() != kVersion) {
            bad("unsupported checkpoint version " + std::to_string(doc.at("version").get<int>()));
        }
        Checkpoint ck;
        ck.config = config_from_json(doc.at("config"));
        ck.config.validate();
        ck.params = tensors_from_json(doc.at("tensors"), ck.config.heads);
        const json& opt = doc.at("optimizer");
        ck.optimizer.step = opt.at("step").get<std::int64_t>();
        ck.optimizer.beta1 = opt.at("beta1").get<double>();
        ck.optimizer.beta2 = opt.at("beta2").get<double>();
        ck.optimizer.epsilon = opt.at("epsilon").get<double>();
        ck.optimizer.first_moment = tensors_from_json(opt.at("first_moment"), ck.config.heads);
        ck.optimizer.second_moment = tensors_from_json(opt.at("second_moment"), ck.config.heads);
        ck.metadata = doc.at("metadata").dump();
        return ck;
    } catch (const json::exception& e) {
        bad(std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        bad("cannot write checkpoint " + path.string());
    }
    out << checkpoint_json(checkpoint) << '\n';
    if (!out) {
        bad("write failure on " + path.string());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        bad("cannot open checkpoint " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return checkpoint_from_json(buf.str());
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(digits[digest[i] >> 4]);
        out.push_back(digits[digest[i] & 0xf]);
    }
    return out;
}

std::string file_sha256(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return sha256_hex(buf.str());
}

} // namespace siamhan
