#include "catalog.hpp"

#include <algorithm>
#include <cctype>
#include <tuple>
#include <set>

namespace siamhan {

using detail::Rng;

Obfuscation parse_obfuscation(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    std::replace(lower.begin(), lower.end(), '_', '-');
    if (lower == "c-random") return Obfuscation::c_random;
    if (lower == "cf-random") return Obfuscation::cf_random;
    if (lower == "cf-background") return Obfuscation::cf_background;
    if (lower == "sf-background") return Obfuscation::sf_background;
    if (lower == "combination") return Obfuscation::combination;
    throw SynthError(SynthErrc::unknown_method, "unknown obfuscation method '" + std::string(name) + "'");
}

const char* to_string(Obfuscation method) {
    switch (method) {
    case Obfuscation::c_random: return "C-Random";
    case Obfuscation::cf_random: return "CF-Random";
    case Obfuscation::cf_background: return "CF-Background";
    case Obfuscation::sf_background: return "SF-Background";
    case Obfuscation::combination: return "Combination";
    }
    return "?";
}

namespace {

// Novel services live above the generator's catalog range (index >= 2048).
constexpr std::size_t kNovelServiceBase = 2048;
constexpr std::size_t kNovelServiceCount = 256;

using FingerprintTuple = std::tuple<std::uint16_t, std::uint16_t, std::vector<std::uint16_t>, std::vector<std::uint8_t>>;

FingerprintTuple tuple_of(const SessionRecord& r) {
    return {*r.record_version, *r.client_version, r.cipher_suites, r.compression};
}

void put_browser(SessionRecord& r, const BrowserProfile& b) {
    r.record_version = b.record_version;
    r.client_version = b.client_version;
    r.cipher_suites = b.cipher_suites;
    r.compression = b.compression;
}

std::vector<SessionRecord> cf_random(std::vector<SessionRecord> sessions, std::uint64_t seed) {
    Rng rng(detail::mix_seed(seed, 101));
    std::map<std::pair<Ipv6Address, FingerprintTuple>, BrowserProfile> forged;
    for (auto& r : sessions) {
        if (!r.has_client_hello()) {
            continue;
        }
        auto key = std::make_pair(r.client_addr, tuple_of(r));
        auto it = forged.find(key);
        if (it == forged.end()) {
            it = forged.emplace(key, detail::random_browser(rng)).first;
        }
        put_browser(r, it->second);
        if (r.chosen_cipher &&
            std::find(r.cipher_suites.begin(), r.cipher_suites.end(), *r.chosen_cipher) == r.cipher_suites.end()) {
            r.chosen_cipher = r.cipher_suites.front();
        }
    }
    return sessions;
}

std::map<int, std::vector<std::size_t>> sessions_by_user(const std::vector<SessionRecord>& sessions,
                                                         const std::map<Ipv6Address, int>& labels) {
    std::map<int, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        auto it = labels.find(sessions[i].client_addr);
        if (it != labels.end()) {
            out[it->second].push_back(i);
        }
    }
    return out;
}

// One background session per original, on the same address and time, using a
// browser the user never ran.
std::vector<SessionRecord> cf_background(const std::vector<SessionRecord>& originals,
                                         const std::map<Ipv6Address, int>& labels, std::uint64_t seed) {
    std::vector<SessionRecord> extra;
    for (const auto& [user, indices] : sessions_by_user(originals, labels)) {
        Rng rng(detail::mix_seed(seed, 1000 + static_cast<std::uint64_t>(user)));
        BrowserProfile b = detail::random_browser(rng);
        for (auto i : indices) {
            SessionRecord r = originals[i];
            put_browser(r, b);
            if (r.chosen_cipher) {
                r.chosen_cipher = b.cipher_suites.front();
            }
            extra.push_back(std::move(r));
        }
    }
    return extra;
}

// Background sessions towards services outside the user's catalog.
std::vector<SessionRecord> sf_background(const std::vector<SessionRecord>& originals,
                                         const std::map<Ipv6Address, int>& labels, std::uint64_t seed) {
    Rng catalog_rng(detail::mix_seed(seed, 202));
    std::vector<Service> novel;
    for (std::size_t k = 0; k < kNovelServiceCount; ++k) {
        novel.push_back(detail::random_service(catalog_rng, kNovelServiceBase + k));
    }
    std::vector<SessionRecord> extra;
    for (const auto& [user, indices] : sessions_by_user(originals, labels)) {
        Rng rng(detail::mix_seed(seed, 5000 + static_cast<std::uint64_t>(user)));
        std::uniform_int_distribution<std::size_t> pick(0, novel.size() - 1);
        for (auto i : indices) {
            SessionRecord r = originals[i];
            const Service& s = novel[pick(rng)];
            r.server_addr = s.address;
            if (r.has_client_hello()) {
                r.sni = s.sni;
            }
            if (r.has_server_hello()) {
                r.server_record_version = s.record_version;
                r.server_version = s.server_version;
                std::uint16_t chosen = s.preferred_suites.front();
                for (auto suite : s.preferred_suites) {
                    if (std::find(r.cipher_suites.begin(), r.cipher_suites.end(), suite) != r.cipher_suites.end()) {
                        chosen = suite;
                        break;
                    }
                }
                r.chosen_cipher = chosen;
            }
            if (r.has_certificate()) {
                r.cert_algorithm_id = s.algorithm_id;
                r.issuer = s.issuer;
                r.subject = s.subject;
            }
            extra.push_back(std::move(r));
        }
    }
    return extra;
}

Ipv6Address forged_address(Rng& rng) {
    std::uniform_int_distribution<std::uint64_t> site(0, 0xefff);
    std::uniform_int_distribution<std::uint64_t> any;
    std::uint64_t prefix = (std::uint64_t{0x20010db8} << 32) | (site(rng) << 16) | (any(rng) & 0xffff);
    return Ipv6Address::from_halves(prefix, any(rng) | 1);
}

ObfuscatedLog c_random(std::vector<SessionRecord> sessions, std::uint64_t seed) {
    Rng rng(detail::mix_seed(seed, 303));
    std::set<Ipv6Address> taken;
    for (const auto& r : sessions) {
        taken.insert(r.client_addr);
        taken.insert(r.server_addr);
    }
    std::map<Ipv6Address, Ipv6Address> forged_of;
    ObfuscatedLog out;
    for (auto& r : sessions) {
        auto it = forged_of.find(r.client_addr);
        if (it == forged_of.end()) {
            Ipv6Address f;
            do {
                f = forged_address(rng);
            } while (!taken.insert(f).second);
            it = forged_of.emplace(r.client_addr, f).first;
            out.forged_to_original.emplace(f, r.client_addr);
        }
        r.client_addr = it->second;
    }
    out.sessions = std::move(sessions);
    return out;
}

void merge_sorted(std::vector<SessionRecord>& base, std::vector<SessionRecord> extra) {
    base.insert(base.end(), std::make_move_iterator(extra.begin()), std::make_move_iterator(extra.end()));
    std::stable_sort(base.begin(), base.end(),
                     [](const SessionRecord& a, const SessionRecord& b) { return a.timestamp < b.timestamp; });
}

} // namespace

ObfuscatedLog obfuscate(const std::vector<SessionRecord>& sessions, const std::map<Ipv6Address, int>& labels,
                        Obfuscation method, std::uint64_t seed) {
    for (const auto& r : sessions) {
        if (auto bad = validate(r)) {
            throw SynthError(SynthErrc::bad_config, "invalid session record: " + *bad);
        }
    }
    ObfuscatedLog out;
    switch (method) {
    case Obfuscation::c_random: return c_random(sessions, seed);
    case Obfuscation::cf_random: out.sessions = cf_random(sessions, seed); break;
    case Obfuscation::cf_background:
        out.sessions = sessions;
        merge_sorted(out.sessions, cf_background(sessions, labels, seed));
        break;
    case Obfuscation::sf_background:
        out.sessions = sessions;
        merge_sorted(out.sessions, sf_background(sessions, labels, seed));
        break;
    case Obfuscation::combination: {
        auto base = cf_random(sessions, seed);
        auto browsers = cf_background(base, labels, seed);
        auto services = sf_background(base, labels, seed);
        merge_sorted(base, std::move(browsers));
        merge_sorted(base, std::move(services));
        return c_random(std::move(base), seed);
    }
    }
    return out;
}

} // namespace siamhan
