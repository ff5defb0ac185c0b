#include "siamhan/ingest.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>

namespace siamhan {

namespace {

using nlohmann::json;

[[noreturn]] void schema_error(std::size_t line, const std::string& what) {
    throw IngestError(IngestErrc::schema_error,
                      "line " + std::to_string(line) + ": " + what, line);
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "client_addr",    "server_addr",          "record_version", "client_version",
        "cipher_suites",  "compression",          "sni",            "server_record_version",
        "server_version", "chosen_cipher",        "cert_algorithm_id", "issuer",
        "subject",        "timestamp",            "flow_packet_count",
    };
    return keys;
}

class LineDecoder {
public:
    LineDecoder(const json& obj, std::size_t line) : obj_(obj), line_(line) {}

    Ipv6Address address(const char* key) const {
        const json& v = required(key);
        if (!v.is_string()) {
            schema_error(line_, std::string(key) + " must be a string");
        }
        auto addr = Ipv6Address::parse(v.get<std::string>());
        if (!addr) {
            schema_error(line_, std::string(key) + " is not an IPv6 address");
        }
        return *addr;
    }

    template <typename T>
    std::optional<T> code(const char* key) const {
        auto it = obj_.find(key);
        if (it == obj_.end()) {
            return std::nullopt;
        }
        return to_code<T>(*it, key);
    }

    template <typename T>
    std::vector<T> code_list(const char* key) const {
        std::vector<T> out;
        auto it = obj_.find(key);
        if (it == obj_.end()) {
            return out;
        }
        if (!it->is_array()) {
            schema_error(line_, std::string(key) + " must be an array");
        }
        for (const auto& v : *it) {
            out.push_back(to_code<T>(v, key));
        }
        return out;
    }

    std::optional<std::string> text(const char* key) const {
        auto it = obj_.find(key);
        if (it == obj_.end()) {
            return std::nullopt;
        }
        if (!it->is_string()) {
            schema_error(line_, std::string(key) + " must be a string");
        }
        return it->get<std::string>();
    }

    std::int64_t integer(const char* key) const {
        const json& v = required(key);
        if (!v.is_number_integer()) {
            schema_error(line_, std::string(key) + " must be an integer");
        }
        return v.get<std::int64_t>();
    }

private:
    const json& required(const char* key) const {
        auto it = obj_.find(key);
        if (it == obj_.end()) {
            schema_error(line_, std::string("missing required field ") + key);
        }
        return *it;
    }

    template <typename T>
    T to_code(const json& v, const char* key) const {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            schema_error(line_, std::string(key) + " must hold non-negative integers");
        }
        auto raw = v.get<std::uint64_t>();
        if (raw > std::numeric_limits<T>::max()) {
            schema_error(line_, std::string(key) + " value out of range");
        }
        return static_cast<T>(raw);
    }

    const json& obj_;
    std::size_t line_;
};

std::vector<SessionRecord> read_all(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IngestError(IngestErrc::io_error, "cannot open session log " + path.string());
    }
    std::vector<SessionRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        records.push_back(parse_log_line(line, line_no));
    }
    if (in.bad()) {
        throw IngestError(IngestErrc::io_error, "read failure on " + path.string());
    }
    return records;
}

} // namespace

std::string to_log_line(const SessionRecord& r) {
    json j = json::object();
    j["client_addr"] = r.client_addr.to_string();
    j["server_addr"] = r.server_addr.to_string();
    if (r.record_version) j["record_version"] = *r.record_version;
    if (r.client_version) j["client_version"] = *r.client_version;
    if (!r.cipher_suites.empty()) j["cipher_suites"] = r.cipher_suites;
    if (!r.compression.empty()) j["compression"] = r.compression;
    if (r.sni) j["sni"] = *r.sni;
    if (r.server_record_version) j["server_record_version"] = *r.server_record_version;
    if (r.server_version) j["server_version"] = *r.server_version;
    if (r.chosen_cipher) j["chosen_cipher"] = *r.chosen_cipher;
    if (r.cert_algorithm_id) j["cert_algorithm_id"] = *r.cert_algorithm_id;
    if (r.issuer) j["issuer"] = *r.issuer;
    if (r.subject) j["subject"] = *r.subject;
    j["timestamp"] = r.timestamp;
    j["flow_packet_count"] = r.flow_packet_count;
    return j.dump();
}

SessionRecord parse_log_line(std::string_view line, std::size_t line_no) {
    json obj = json::parse(line.begin(), line.end(), nullptr, false);
    if (obj.is_discarded()) {
        schema_error(line_no, "not valid JSON");
    }
    if (!obj.is_object()) {
        schema_error(line_no, "record must be a JSON object");
    }
    for (const auto& [key, _] : obj.items()) {
        if (!known_keys().count(key)) {
            schema_error(line_no, "unknown field " + key);
        }
    }

    LineDecoder d(obj, line_no);
    SessionRecord r;
    r.client_addr = d.address("client_addr");
    r.server_addr = d.address("server_addr");
    r.record_version = d.code<std::uint16_t>("record_version");
    r.client_version = d.code<std::uint16_t>("client_version");
    r.cipher_suites = d.code_list<std::uint16_t>("cipher_suites");
    r.compression = d.code_list<std::uint8_t>("compression");
    r.sni = d.text("sni");
    r.server_record_version = d.code<std::uint16_t>("server_record_version");
    r.server_version = d.code<std::uint16_t>("server_version");
    r.chosen_cipher = d.code<std::uint16_t>("chosen_cipher");
    r.cert_algorithm_id = d.text("cert_algorithm_id");
    r.issuer = d.text("issuer");
    r.subject = d.text("subject");
    r.timestamp = d.integer("timestamp");
    std::int64_t packets = d.integer("flow_packet_count");
    if (packets < 0) {
        schema_error(line_no, "flow_packet_count must be non-negative");
    }
    r.flow_packet_count = static_cast<std::uint64_t>(packets);

    if (auto problem = validate(r)) {
        schema_error(line_no, *problem);
    }
    return r;
}

std::vector<SessionRecord> load_session_log(const std::filesystem::path& path) {
    auto records = read_all(path);
    std::stable_sort(records.begin(), records.end(),
                     [](const SessionRecord& a, const SessionRecord& b) { return a.timestamp < b.timestamp; });
    return records;
}

std::vector<SessionRecord> load_session_log(const std::filesystem::path& path, const WiretapWindow& window) {
    auto records = load_session_log(path);
    std::erase_if(records, [&](const SessionRecord& r) { return !window.contains(r.timestamp); });
    return records;
}

void write_session_log(const std::filesystem::path& path, const std::vector<SessionRecord>& records) {
    std::ofstream out(path);
    if (!out) {
        throw IngestError(IngestErrc::io_error, "cannot write session log " + path.string());
    }
    for (const auto& r : records) {
        out << to_log_line(r) << '\n';
    }
    if (!out) {
        throw IngestError(IngestErrc::io_error, "write failure on " + path.string());
    }
}

} // namespace siamhan
