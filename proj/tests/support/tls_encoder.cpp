#include "tls_encoder.hpp"

namespace siamhan::testing {

namespace {

void put8(Bytes& b, unsigned v) { b.push_back(static_cast<std::uint8_t>(v & 0xff)); }
void put16(Bytes& b, unsigned v) {
    put8(b, v >> 8);
    put8(b, v);
}
void put24(Bytes& b, unsigned v) {
    put8(b, v >> 16);
    put16(b, v & 0xffff);
}
void append(Bytes& b, const Bytes& more) { b.insert(b.end(), more.begin(), more.end()); }

Bytes handshake(std::uint8_t type, const Bytes& body) {
    Bytes out;
    put8(out, type);
    put24(out, static_cast<unsigned>(body.size()));
    append(out, body);
    return out;
}

Bytes record(std::uint16_t version, const Bytes& fragment) {
    Bytes out;
    put8(out, 22);
    put16(out, version);
    put16(out, static_cast<unsigned>(fragment.size()));
    append(out, fragment);
    return out;
}

void put_extension(Bytes& b, const Extension& e) {
    put16(b, e.type);
    put16(b, static_cast<unsigned>(e.data.size()));
    append(b, e.data);
}

Bytes server_hello_message(const ServerHelloSpec& s) {
    Bytes body;
    put16(body, s.server_version);
    body.insert(body.end(), s.random.begin(), s.random.end());
    put8(body, static_cast<unsigned>(s.session_id.size()));
    append(body, s.session_id);
    put16(body, s.cipher_suite);
    put8(body, s.compression_method);
    if (!s.extensions.empty()) {
        Bytes ext;
        for (const auto& e : s.extensions) {
            put_extension(ext, e);
        }
        put16(body, static_cast<unsigned>(ext.size()));
        append(body, ext);
    }
    return handshake(2, body);
}

Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
    std::uniform_int_distribution<int> byte(0, 255);
    Bytes out(n);
    for (auto& b : out) {
        b = static_cast<std::uint8_t>(byte(rng));
    }
    return out;
}

std::vector<Extension> random_extensions(std::mt19937_64& rng, int max_count) {
    // Types that are never server_name.
    static const std::uint16_t kTypes[] = {0x000a, 0x000b, 0x000d, 0x0010, 0x0017, 0x0023, 0x002b, 0xff01, 0x3374};
    std::uniform_int_distribution<int> count(0, max_count);
    std::uniform_int_distribution<std::size_t> type(0, std::size(kTypes) - 1);
    std::uniform_int_distribution<std::size_t> len(0, 24);
    std::vector<Extension> out(static_cast<std::size_t>(count(rng)));
    for (auto& e : out) {
        e.type = kTypes[type(rng)];
        e.data = random_bytes(rng, len(rng));
    }
    return out;
}

} // namespace

Bytes encode_client_hello(const ClientHelloSpec& s) {
    Bytes body;
    put16(body, s.client_version);
    body.insert(body.end(), s.random.begin(), s.random.end());
    put8(body, static_cast<unsigned>(s.session_id.size()));
    append(body, s.session_id);
    put16(body, static_cast<unsigned>(2 * s.cipher_suites.size()));
    for (auto c : s.cipher_suites) {
        put16(body, c);
    }
    put8(body, static_cast<unsigned>(s.compression.size()));
    for (auto c : s.compression) {
        put8(body, c);
    }
    if (!s.omit_extensions_block) {
        Bytes ext;
        for (const auto& e : s.leading_extensions) {
            put_extension(ext, e);
        }
        if (s.sni) {
            Bytes name_list;
            put8(name_list, 0);  // host_name
            put16(name_list, static_cast<unsigned>(s.sni->size()));
            name_list.insert(name_list.end(), s.sni->begin(), s.sni->end());
            Bytes data;
            put16(data, static_cast<unsigned>(name_list.size()));
            append(data, name_list);
            put_extension(ext, {0x0000, data});
        }
        for (const auto& e : s.trailing_extensions) {
            put_extension(ext, e);
        }
        put16(body, static_cast<unsigned>(ext.size()));
        append(body, ext);
    }
    return record(s.record_version, handshake(1, body));
}

Bytes encode_server_hello(const ServerHelloSpec& s) { return record(s.record_version, server_hello_message(s)); }

Bytes encode_certificate_record(const std::vector<Bytes>& chain, std::uint16_t record_version,
                                const std::optional<ServerHelloSpec>& before) {
    Bytes list;
    for (const auto& der : chain) {
        put24(list, static_cast<unsigned>(der.size()));
        append(list, der);
    }
    Bytes body;
    put24(body, static_cast<unsigned>(list.size()));
    append(body, list);
    Bytes fragment;
    if (before) {
        append(fragment, server_hello_message(*before));
    }
    append(fragment, handshake(11, body));
    return record(record_version, fragment);
}

std::string random_hostname(std::mt19937_64& rng) {
    static const char kAlphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789-";
    std::uniform_int_distribution<int> labels(1, 4);
    std::uniform_int_distribution<int> len(1, 12);
    std::uniform_int_distribution<std::size_t> ch(0, sizeof(kAlphabet) - 3);  // no leading '-'
    std::string host;
    for (int l = labels(rng); l > 0; --l) {
        if (!host.empty()) {
            host += '.';
        }
        for (int i = len(rng); i > 0; --i) {
            host += kAlphabet[ch(rng)];
        }
    }
    return host;
}

ClientHelloSpec random_client_hello(std::mt19937_64& rng) {
    static const std::uint16_t kVersions[] = {0x0300, 0x0301, 0x0302, 0x0303};
    std::uniform_int_distribution<std::size_t> version(0, 3);
    std::uniform_int_distribution<int> u16(0, 0xffff);
    std::uniform_int_distribution<std::size_t> session(0, 32);
    std::uniform_int_distribution<std::size_t> suites(1, 40);
    std::uniform_int_distribution<std::size_t> compression(1, 3);
    std::bernoulli_distribution coin(0.5);

    ClientHelloSpec s;
    s.record_version = kVersions[version(rng)];
    s.client_version = kVersions[version(rng)];
    auto r = random_bytes(rng, 32);
    std::copy(r.begin(), r.end(), s.random.begin());
    s.session_id = random_bytes(rng, session(rng));
    s.cipher_suites.resize(suites(rng));
    for (auto& c : s.cipher_suites) {
        c = static_cast<std::uint16_t>(u16(rng));
    }
    s.compression = random_bytes(rng, compression(rng));
    if (coin(rng)) {
        s.sni = random_hostname(rng);
    }
    s.leading_extensions = random_extensions(rng, 3);
    s.trailing_extensions = random_extensions(rng, 3);
    s.omit_extensions_block = !s.sni && s.leading_extensions.empty() && s.trailing_extensions.empty() && coin(rng);
    return s;
}

ServerHelloSpec random_server_hello(std::mt19937_64& rng) {
    static const std::uint16_t kVersions[] = {0x0300, 0x0301, 0x0302, 0x0303};
    std::uniform_int_distribution<std::size_t> version(0, 3);
    std::uniform_int_distribution<int> u16(0, 0xffff);
    std::uniform_int_distribution<int> u8(0, 0xff);
    std::uniform_int_distribution<std::size_t> session(0, 32);

    ServerHelloSpec s;
    s.record_version = kVersions[version(rng)];
    s.server_version = kVersions[version(rng)];
    auto r = random_bytes(rng, 32);
    std::copy(r.begin(), r.end(), s.random.begin());
    s.session_id = random_bytes(rng, session(rng));
    s.cipher_suite = static_cast<std::uint16_t>(u16(rng));
    s.compression_method = static_cast<std::uint8_t>(u8(rng));
    s.extensions = random_extensions(rng, 4);
    return s;
}

} // namespace siamhan::testing
