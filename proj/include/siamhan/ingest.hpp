#pragma once

#include "siamhan/ipv6.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace siamhan {

enum class IngestErrc {
    malformed_record,
    not_client_hello,
    not_server_hello,
    empty_chain,
    schema_error,
    io_error,
};

class IngestError : public std::runtime_error {
public:
    IngestError(IngestErrc code, const std::string& what, std::size_t line = 0)
        : std::runtime_error(what), code_(code), line_(line) {}

    IngestErrc code() const noexcept { return code_; }
    /// 1-based line of the offending log record; 0 when not applicable.
    std::size_t line() const noexcept { return line_; }

private:
    IngestErrc code_;
    std::size_t line_;
};

/// Observation interval [start, start + duration), in UTC epoch seconds.
struct WiretapWindow {
    std::int64_t start = 0;
    std::int64_t duration = 1;

    WiretapWindow() = default;
    WiretapWindow(std::int64_t start_s, std::int64_t duration_s);

    bool contains(std::int64_t t) const { return t >= start && t - start < duration; }
    std::int64_t end() const { return start + duration; }
};

/// Metadata of one TLS connection as seen by a passive observer.
///
/// The ClientHello fields (record_version .. compression) are either all
/// present or all absent; the same holds for the ServerHello triple and the
/// certificate triple. Absence is always explicit, never an empty string.
struct SessionRecord {
    Ipv6Address client_addr;
    Ipv6Address server_addr;

    std::optional<std::uint16_t> record_version;  // F1
    std::optional<std::uint16_t> client_version;  // F2
    std::vector<std::uint16_t> cipher_suites;     // F3
    std::vector<std::uint8_t> compression;        // F4
    std::optional<std::string> sni;               // F5

    std::optional<std::uint16_t> server_record_version;  // F6
    std::optional<std::uint16_t> server_version;         // F7
    std::optional<std::uint16_t> chosen_cipher;          // F8

    std::optional<std::string> cert_algorithm_id;  // F9
    std::optional<std::string> issuer;             // F10
    std::optional<std::string> subject;            // F11

    std::int64_t timestamp = 0;
    std::uint64_t flow_packet_count = 0;

    bool has_client_hello() const { return record_version.has_value(); }
    bool has_server_hello() const { return server_version.has_value(); }
    bool has_certificate() const { return cert_algorithm_id.has_value(); }

    bool operator==(const SessionRecord&) const = default;
};

/// Returns a description of the first violated invariant, or nullopt.
std::optional<std::string> validate(const SessionRecord& record);

struct ClientHelloInfo {
    std::uint16_t record_version = 0;
    std::uint16_t client_version = 0;
    std::vector<std::uint16_t> cipher_suites;
    std::vector<std::uint8_t> compression;
    std::optional<std::string> sni;

    bool operator==(const ClientHelloInfo&) const = default;
};

struct ServerHelloInfo {
    std::uint16_t record_version = 0;
    std::uint16_t server_version = 0;
    std::uint16_t cipher_suite = 0;
    std::uint8_t compression_method = 0;

    bool operator==(const ServerHelloInfo&) const = default;
};

struct CertificateInfo {
    std::string algorithm_id;  // dotted OID of the signature algorithm
    std::string issuer;        // "ATTR=value, ATTR=value" in certificate order
    std::string subject;

    bool operator==(const CertificateInfo&) const = default;
};

using ByteView = std::span<const std::uint8_t>;

/// Parse a TLS record (content type 22) whose first handshake message is a
/// ClientHello. Bytes after the declared record length are ignored.
ClientHelloInfo parse_client_hello(ByteView record);

/// Parse a TLS record whose first handshake message is a ServerHello.
ServerHelloInfo parse_server_hello(ByteView record);

/// Parse the leaf certificate of the first Certificate handshake message
/// found in the record.
CertificateInfo parse_certificate(ByteView record);

/// Parse a bare DER X.509 certificate.
CertificateInfo parse_der_certificate(ByteView der);

void apply(SessionRecord& record, const ClientHelloInfo& hello);
void apply(SessionRecord& record, const ServerHelloInfo& hello);
void apply(SessionRecord& record, const CertificateInfo& cert);

// Session log: one JSON object per line.

std::string to_log_line(const SessionRecord& record);
SessionRecord parse_log_line(std::string_view line, std::size_t line_no = 0);

/// Records whose timestamp lies inside the window, sorted by timestamp
/// (ties keep file order).
std::vector<SessionRecord> load_session_log(const std::filesystem::path& path,
                                            const WiretapWindow& window);

/// Every record in the file, sorted by timestamp.
std::vector<SessionRecord> load_session_log(const std::filesystem::path& path);

void write_session_log(const std::filesystem::path& path, const std::vector<SessionRecord>& records);

} // namespace siamhan
