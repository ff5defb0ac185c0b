#include "siamhan/ingest.hpp"

namespace siamhan {

WiretapWindow::WiretapWindow(std::int64_t start_s, std::int64_t duration_s)
    : start(start_s), duration(duration_s) {
    if (duration_s <= 0) {
        throw std::invalid_argument("wiretap window duration must be positive");
    }
}

std::optional<std::string> validate(const SessionRecord& r) {
    if (r.client_addr == r.server_addr) {
        return "client_addr equals server_addr";
    }
    if (r.record_version.has_value() != r.client_version.has_value()) {
        return "record_version and client_version must both be present or both absent";
    }
    if (r.has_client_hello()) {
        if (r.cipher_suites.empty()) {
            return "cipher_suites must be non-empty when a ClientHello was observed";
        }
        if (r.compression.empty()) {
            return "compression must be non-empty when a ClientHello was observed";
        }
    } else {
        if (!r.cipher_suites.empty() || !r.compression.empty() || r.sni) {
            return "ClientHello fields present without record_version";
        }
    }
    if (r.sni && r.sni->empty()) {
        return "sni must not be empty";
    }
    bool sh = r.server_version.has_value();
    if (r.server_record_version.has_value() != sh || r.chosen_cipher.has_value() != sh) {
        return "server_record_version, server_version and chosen_cipher must appear together";
    }
    bool cert = r.cert_algorithm_id.has_value();
    if (r.issuer.has_value() != cert || r.subject.has_value() != cert) {
        return "cert_algorithm_id, issuer and subject must appear together";
    }
    if (cert && (r.cert_algorithm_id->empty() || r.issuer->empty() || r.subject->empty())) {
        return "certificate strings must not be empty";
    }
    return std::nullopt;
}

void apply(SessionRecord& record, const ClientHelloInfo& hello) {
    record.record_version = hello.record_version;
    record.client_version = hello.client_version;
    record.cipher_suites = hello.cipher_suites;
    record.compression = hello.compression;
    record.sni = hello.sni;
}

void apply(SessionRecord& record, const ServerHelloInfo& hello) {
    record.server_record_version = hello.record_version;
    record.server_version = hello.server_version;
    record.chosen_cipher = hello.cipher_suite;
}

void apply(SessionRecord& record, const CertificateInfo& cert) {
    record.cert_algorithm_id = cert.algorithm_id;
    record.issuer = cert.issuer;
    record.subject = cert.subject;
}

} // namespace siamhan
