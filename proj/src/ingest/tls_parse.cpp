#include "siamhan/ingest.hpp"

#include "byte_reader.hpp"

namespace siamhan {

namespace {

using detail::ByteReader;

constexpr std::uint8_t kContentHandshake = 22;
constexpr std::uint8_t kClientHello = 1;
constexpr std::uint8_t kServerHello = 2;
constexpr std::uint8_t kCertificate = 11;
constexpr std::uint16_t kExtServerName = 0;
constexpr std::uint8_t kHostName = 0;

[[noreturn]] void malformed(const std::string& what) {
    throw IngestError(IngestErrc::malformed_record, what);
}

struct Record {
    std::uint16_t version;
    ByteView fragment;
};

Record read_record(ByteView bytes) {
    ByteReader in(bytes);
    if (in.u8() != kContentHandshake) {
        malformed("record content type is not handshake (22)");
    }
    Record rec{};
    rec.version = in.u16();
    std::uint16_t len = in.u16();
    if (len == 0) {
        malformed("empty handshake record");
    }
    rec.fragment = in.take(len);
    return rec;
}

struct Handshake {
    std::uint8_t type;
    ByteView body;
};

Handshake read_handshake(ByteReader& in) {
    Handshake hs{};
    hs.type = in.u8();
    hs.body = in.take(in.u24());
    return hs;
}

void skip_session_id(ByteReader& in) {
    auto sid = in.vector(1);
    if (sid.remaining() > 32) {
        malformed("session id longer than 32 bytes");
    }
}

// Walks the extension block (if any) and returns the first host_name entry
// of a server_name extension. Requires the block to end exactly at the end
// of the hello body.
std::optional<std::string> read_extensions(ByteReader& body) {
    std::optional<std::string> sni;
    if (body.empty()) {
        return sni;
    }
    auto exts = body.vector(2);
    if (!body.empty()) {
        malformed("trailing bytes after extensions");
    }
    while (!exts.empty()) {
        std::uint16_t type = exts.u16();
        auto data = exts.vector(2);
        if (type != kExtServerName) {
            continue;
        }
        // An empty server_name extension is legal in a ServerHello.
        if (data.empty()) {
            continue;
        }
        auto list = data.vector(2);
        if (!data.empty()) {
            malformed("trailing bytes in server_name extension");
        }
        if (list.empty()) {
            malformed("empty server_name list");
        }
        while (!list.empty()) {
            std::uint8_t name_type = list.u8();
            auto name = list.vector(2);
            if (name.empty()) {
                malformed("empty host_name");
            }
            if (name_type == kHostName && !sni) {
                auto raw = name.take(name.remaining());
                sni.emplace(raw.begin(), raw.end());
            }
        }
    }
    return sni;
}

} // namespace

ClientHelloInfo parse_client_hello(ByteView bytes) {
    Record rec = read_record(bytes);
    ByteReader frag(rec.fragment);
    Handshake hs = read_handshake(frag);
    if (hs.type != kClientHello) {
        throw IngestError(IngestErrc::not_client_hello,
                          "handshake type " + std::to_string(hs.type) + " is not ClientHello");
    }

    ClientHelloInfo info;
    info.record_version = rec.version;
    ByteReader body(hs.body);
    info.client_version = body.u16();
    body.skip(32);
    skip_session_id(body);

    auto suites = body.vector(2);
    if (suites.empty() || suites.remaining() % 2 != 0) {
        malformed("cipher suite list empty or of odd length");
    }
    while (!suites.empty()) {
        info.cipher_suites.push_back(suites.u16());
    }

    auto methods = body.vector(1);
    if (methods.empty()) {
        malformed("empty compression method list");
    }
    while (!methods.empty()) {
        info.compression.push_back(methods.u8());
    }

    info.sni = read_extensions(body);
    return info;
}

ServerHelloInfo parse_server_hello(ByteView bytes) {
    Record rec = read_record(bytes);
    ByteReader frag(rec.fragment);
    Handshake hs = read_handshake(frag);
    if (hs.type != kServerHello) {
        throw IngestError(IngestErrc::not_server_hello,
                          "handshake type " + std::to_string(hs.type) + " is not ServerHello");
    }

    ServerHelloInfo info;
    info.record_version = rec.version;
    ByteReader body(hs.body);
    info.server_version = body.u16();
    body.skip(32);
    skip_session_id(body);
    info.cipher_suite = body.u16();
    info.compression_method = body.u8();
    read_extensions(body);
    return info;
}

CertificateInfo parse_certificate(ByteView bytes) {
    Record rec = read_record(bytes);
    ByteReader frag(rec.fragment);
    while (!frag.empty()) {
        Handshake hs = read_handshake(frag);
        if (hs.type != kCertificate) {
            continue;
        }
        ByteReader body(hs.body);
        auto chain = body.vector(3);
        if (!body.empty()) {
            malformed("trailing bytes after certificate list");
        }
        if (chain.empty()) {
            throw IngestError(IngestErrc::empty_chain, "certificate list is empty");
        }
        auto leaf = chain.vector(3);
        if (leaf.empty()) {
            malformed("zero-length certificate");
        }
        // Remaining entries must still be well-framed.
        while (!chain.empty()) {
            if (chain.vector(3).empty()) {
                malformed("zero-length certificate");
            }
        }
        return parse_der_certificate(leaf.take(leaf.remaining()));
    }
    malformed("record carries no Certificate message");
}

} // namespace siamhan
