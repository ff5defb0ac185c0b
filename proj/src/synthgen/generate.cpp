#include "catalog.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace siamhan {

using detail::Rng;

const char* to_string(IidScheme scheme) {
    switch (scheme) {
    case IidScheme::constant: return "constant";
    case IidScheme::stable: return "stable";
    case IidScheme::temporary: return "temporary";
    }
    return "?";
}

GeneratorConfig GeneratorConfig::distinguishable() {
    GeneratorConfig c;
    c.users = 40;
    c.change_fraction = 1.0;
    c.temporary_min_days = 8.0;
    c.temporary_max_days = 15.0;
    c.stable_min_days = 8.0;
    c.stable_max_days = 15.0;
    c.catalog_size = 1200;
    c.popular_services = 20;
    c.personal_services_min = 5;
    c.personal_services_max = 8;
    c.personal_share = 0.95;
    c.unique_browsers = true;
    c.second_browser_fraction = 0.2;
    c.sessions_per_day_min = 0.8;
    c.sessions_per_day_max = 1.6;
    return c;
}

void GeneratorConfig::validate() const {
    auto fail = [](const std::string& what) { throw SynthError(SynthErrc::bad_config, what); };
    auto fraction = [&](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0)) fail(std::string(name) + " must lie in [0, 1]");
    };
    if (users < 1) fail("users must be positive");
    if (months < 1) fail("months must be positive");
    if (days_per_month < 1) fail("days_per_month must be positive");
    fraction(change_fraction, "change_fraction");
    fraction(subnet_update_fraction, "subnet_update_fraction");
    fraction(constant_iid_fraction, "constant_iid_fraction");
    fraction(temporary_iid_fraction, "temporary_iid_fraction");
    fraction(personal_share, "personal_share");
    fraction(second_browser_fraction, "second_browser_fraction");
    fraction(client_hello_rate, "client_hello_rate");
    fraction(server_hello_rate, "server_hello_rate");
    fraction(certificate_rate, "certificate_rate");
    if (constant_iid_fraction + temporary_iid_fraction > 1.0) fail("IID scheme fractions exceed 1");
    if (temporary_iid_fraction > change_fraction) fail("temporary IID users always change; fraction exceeds change_fraction");
    if (certificate_rate > server_hello_rate) fail("certificate_rate cannot exceed server_hello_rate");
    if (!(temporary_min_days > 0.0 && temporary_min_days <= temporary_max_days)) fail("bad temporary lifetime range");
    if (!(stable_min_days > 0.0 && stable_min_days <= stable_max_days)) fail("bad address change range");
    if (popular_services < 0 || catalog_size < popular_services + personal_services_max) fail("catalog too small");
    if (catalog_size > 2048) fail("catalog_size is limited to 2048 services");
    if (personal_services_min < 1 || personal_services_min > personal_services_max) fail("bad personal service range");
    if (!(sessions_per_day_min > 0.0 && sessions_per_day_min <= sessions_per_day_max)) fail("bad activity range");
    if (browser_catalog_size < 1) fail("browser catalog must be non-empty");
    if (preference_skew < 0.0) fail("preference_skew must be non-negative");
}

namespace {

struct AddressSegment {
    std::int64_t begin;
    Ipv6Address address;
};

std::uint64_t random_client_prefix(Rng& rng) {
    std::uniform_int_distribution<std::uint64_t> site(0, 0xefff);
    std::uniform_int_distribution<std::uint64_t> subnet(0, 0xffff);
    return (std::uint64_t{0x20010db8} << 32) | (site(rng) << 16) | subnet(rng);
}

std::uint64_t random_iid(Rng& rng) {
    std::uniform_int_distribution<std::uint64_t> any;
    return any(rng) | 1;  // never all-zero
}

std::vector<AddressSegment> address_timeline(const UserModel& user, const GeneratorConfig& cfg, Rng& rng) {
    const std::int64_t end = cfg.start_time + std::int64_t{cfg.months} * cfg.days_per_month * 86400;
    std::uint64_t prefix = random_client_prefix(rng);
    std::uint64_t iid = random_iid(rng);
    std::vector<AddressSegment> segments{{cfg.start_time, Ipv6Address::from_halves(prefix, iid)}};
    if (!user.changes_address) {
        return segments;
    }
    std::uniform_real_distribution<double> interval(user.min_change_days, user.max_change_days);
    std::uniform_real_distribution<double> phase(0.0, 1.0);
    std::bernoulli_distribution subnet_update(cfg.subnet_update_fraction);
    double t = static_cast<double>(cfg.start_time) + phase(rng) * interval(rng) * 86400.0;
    while (t < static_cast<double>(end)) {
        bool moved = subnet_update(rng);
        if (moved) {
            prefix = random_client_prefix(rng);
        }
        switch (user.iid_scheme) {
        case IidScheme::constant: break;
        case IidScheme::stable:
            if (moved) iid = random_iid(rng);
            break;
        case IidScheme::temporary: iid = random_iid(rng); break;
        }
        segments.push_back({static_cast<std::int64_t>(t), Ipv6Address::from_halves(prefix, iid)});
        t += interval(rng) * 86400.0;
    }
    return segments;
}

UserModel make_user(int id, const GeneratorConfig& cfg, const std::vector<BrowserProfile>& browser_catalog, Rng& rng) {
    UserModel u;
    u.id = id;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double r = unit(rng);
    if (r < cfg.constant_iid_fraction) {
        u.iid_scheme = IidScheme::constant;
    } else if (r < cfg.constant_iid_fraction + cfg.temporary_iid_fraction) {
        u.iid_scheme = IidScheme::temporary;
    } else {
        u.iid_scheme = IidScheme::stable;
    }
    if (u.iid_scheme == IidScheme::temporary) {
        u.changes_address = true;
        u.min_change_days = cfg.temporary_min_days;
        u.max_change_days = cfg.temporary_max_days;
    } else {
        double p = cfg.temporary_iid_fraction >= 1.0
                       ? 1.0
                       : (cfg.change_fraction - cfg.temporary_iid_fraction) / (1.0 - cfg.temporary_iid_fraction);
        u.changes_address = unit(rng) < std::clamp(p, 0.0, 1.0);
        u.min_change_days = cfg.stable_min_days;
        u.max_change_days = cfg.stable_max_days;
    }

    int browsers = unit(rng) < cfg.second_browser_fraction ? 2 : 1;
    if (cfg.unique_browsers) {
        for (int b = 0; b < browsers; ++b) {
            u.browsers.push_back(detail::random_browser(rng));
        }
    } else {
        auto weights = detail::zipf_weights(browser_catalog.size(), 1.0);
        std::discrete_distribution<std::size_t> popular(weights.begin(), weights.end());
        std::set<std::size_t> chosen;
        for (int attempt = 0; attempt < 16 && static_cast<int>(chosen.size()) < browsers; ++attempt) {
            chosen.insert(popular(rng));
        }
        for (auto c : chosen) {
            u.browsers.push_back(browser_catalog[c]);
        }
    }
    u.browser_weights.assign(u.browsers.size(), 1.0);
    if (u.browsers.size() == 2) {
        u.browser_weights = {0.7, 0.3};
    }

    // Personal services come from outside the popular head of the catalog.
    std::uniform_int_distribution<int> personal_count(cfg.personal_services_min, cfg.personal_services_max);
    std::vector<std::size_t> pool(static_cast<std::size_t>(cfg.catalog_size - cfg.popular_services));
    std::iota(pool.begin(), pool.end(), static_cast<std::size_t>(cfg.popular_services));
    std::vector<std::size_t> personal;
    std::sample(pool.begin(), pool.end(), std::back_inserter(personal), personal_count(rng), rng);
    std::shuffle(personal.begin(), personal.end(), rng);

    auto personal_w = detail::zipf_weights(personal.size(), cfg.preference_skew);
    double personal_sum = std::accumulate(personal_w.begin(), personal_w.end(), 0.0);
    for (std::size_t i = 0; i < personal.size(); ++i) {
        u.services.push_back(personal[i]);
        u.service_weights.push_back(cfg.personal_share * personal_w[i] / personal_sum);
    }
    if (cfg.popular_services > 0 && cfg.personal_share < 1.0) {
        auto popular_w = detail::zipf_weights(static_cast<std::size_t>(cfg.popular_services), cfg.preference_skew);
        double popular_sum = std::accumulate(popular_w.begin(), popular_w.end(), 0.0);
        for (int i = 0; i < cfg.popular_services; ++i) {
            u.services.push_back(static_cast<std::size_t>(i));
            u.service_weights.push_back((1.0 - cfg.personal_share) * popular_w[i] / popular_sum);
        }
    }

    std::uniform_real_distribution<double> rate(cfg.sessions_per_day_min, cfg.sessions_per_day_max);
    u.sessions_per_day = rate(rng);
    return u;
}

std::uint16_t negotiate(const Service& s, const BrowserProfile& b) {
    for (auto suite : s.preferred_suites) {
        if (std::find(b.cipher_suites.begin(), b.cipher_suites.end(), suite) != b.cipher_suites.end()) {
            return suite;
        }
    }
    return b.cipher_suites.front();
}

std::vector<SessionRecord> user_sessions(const UserModel& user, const std::vector<AddressSegment>& timeline,
                                         const std::vector<Service>& catalog, const GeneratorConfig& cfg, Rng& rng) {
    std::vector<SessionRecord> out;
    std::poisson_distribution<int> per_day(user.sessions_per_day);
    std::uniform_int_distribution<std::int64_t> second(0, 86399);
    std::discrete_distribution<std::size_t> service(user.service_weights.begin(), user.service_weights.end());
    std::discrete_distribution<std::size_t> browser(user.browser_weights.begin(), user.browser_weights.end());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::geometric_distribution<std::uint64_t> packets(0.05);
    const double cert_given_sh = cfg.server_hello_rate > 0.0 ? cfg.certificate_rate / cfg.server_hello_rate : 0.0;

    const int days = cfg.months * cfg.days_per_month;
    for (int day = 0; day < days; ++day) {
        const std::int64_t day_start = cfg.start_time + std::int64_t{day} * 86400;
        std::vector<std::int64_t> times(static_cast<std::size_t>(per_day(rng)));
        for (auto& t : times) {
            t = day_start + second(rng);
        }
        std::sort(times.begin(), times.end());
        for (auto t : times) {
            auto seg = std::upper_bound(timeline.begin(), timeline.end(), t,
                                        [](std::int64_t v, const AddressSegment& s) { return v < s.begin; });
            const Service& svc = catalog[user.services[service(rng)]];
            const BrowserProfile& br = user.browsers[browser(rng)];

            SessionRecord r;
            r.client_addr = std::prev(seg)->address;
            r.server_addr = svc.address;
            r.timestamp = t;
            r.flow_packet_count = 6 + packets(rng);
            if (unit(rng) < cfg.client_hello_rate) {
                r.record_version = br.record_version;
                r.client_version = br.client_version;
                r.cipher_suites = br.cipher_suites;
                r.compression = br.compression;
                r.sni = svc.sni;
            }
            if (unit(rng) < cfg.server_hello_rate) {
                r.server_record_version = svc.record_version;
                r.server_version = svc.server_version;
                r.chosen_cipher = negotiate(svc, br);
                if (unit(rng) < cert_given_sh) {
                    r.cert_algorithm_id = svc.algorithm_id;
                    r.issuer = svc.issuer;
                    r.subject = svc.subject;
                }
            }
            out.push_back(std::move(r));
        }
    }
    return out;
}

bool session_order(const SessionRecord& a, const SessionRecord& b) {
    if (a.timestamp != b.timestamp) {
        return a.timestamp < b.timestamp;
    }
    if (a.client_addr != b.client_addr) {
        return a.client_addr < b.client_addr;
    }
    return a.server_addr < b.server_addr;
}

} // namespace

SyntheticDataset generate(const GeneratorConfig& cfg) {
    cfg.validate();
    SyntheticDataset ds;

    Rng catalog_rng(detail::mix_seed(cfg.seed, 0));
    for (int i = 0; i < cfg.catalog_size; ++i) {
        ds.catalog.push_back(detail::random_service(catalog_rng, static_cast<std::size_t>(i)));
    }
    std::vector<BrowserProfile> browsers;
    for (int i = 0; i < cfg.browser_catalog_size; ++i) {
        browsers.push_back(detail::random_browser(catalog_rng));
    }

    for (int id = 0; id < cfg.users; ++id) {
        Rng rng(detail::mix_seed(cfg.seed, static_cast<std::uint64_t>(id) + 1));
        UserModel user = make_user(id, cfg, browsers, rng);
        auto timeline = address_timeline(user, cfg, rng);
        auto sessions = user_sessions(user, timeline, ds.catalog, cfg, rng);
        for (const auto& s : sessions) {
            ds.labels.emplace(s.client_addr, id);
        }
        ds.sessions.insert(ds.sessions.end(), sessions.begin(), sessions.end());
        ds.users.push_back(std::move(user));
    }
    std::stable_sort(ds.sessions.begin(), ds.sessions.end(), session_order);
    return ds;
}

std::string manifest_json(const GeneratorConfig& c) {
    nlohmann::json j = {
        {"generator", "siamhan-synthgen"},
        {"users", c.users},
        {"months", c.months},
        {"days_per_month", c.days_per_month},
        {"seed", c.seed},
        {"start_time", c.start_time},
        {"change_fraction", c.change_fraction},
        {"subnet_update_fraction", c.subnet_update_fraction},
        {"constant_iid_fraction", c.constant_iid_fraction},
        {"temporary_iid_fraction", c.temporary_iid_fraction},
        {"temporary_min_days", c.temporary_min_days},
        {"temporary_max_days", c.temporary_max_days},
        {"stable_min_days", c.stable_min_days},
        {"stable_max_days", c.stable_max_days},
        {"catalog_size", c.catalog_size},
        {"popular_services", c.popular_services},
        {"personal_services_min", c.personal_services_min},
        {"personal_services_max", c.personal_services_max},
        {"personal_share", c.personal_share},
        {"preference_skew", c.preference_skew},
        {"sessions_per_day_min", c.sessions_per_day_min},
        {"sessions_per_day_max", c.sessions_per_day_max},
        {"browser_catalog_size", c.browser_catalog_size},
        {"unique_browsers", c.unique_browsers},
        {"second_browser_fraction", c.second_browser_fraction},
        {"client_hello_rate", c.client_hello_rate},
        {"server_hello_rate", c.server_hello_rate},
        {"certificate_rate", c.certificate_rate},
    };
    return j.dump(2);
}

GeneratorConfig config_from_manifest(const std::string& text) {
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw SynthError(SynthErrc::bad_config, "manifest is not a JSON object");
    }
    GeneratorConfig c;
    try {
        c.users = j.at("users");
        c.months = j.at("months");
        c.days_per_month = j.at("days_per_month");
        c.seed = j.at("seed");
        c.start_time = j.at("start_time");
        c.change_fraction = j.at("change_fraction");
        c.subnet_update_fraction = j.at("subnet_update_fraction");
        c.constant_iid_fraction = j.at("constant_iid_fraction");
        c.temporary_iid_fraction = j.at("temporary_iid_fraction");
        c.temporary_min_days = j.at("temporary_min_days");
        c.temporary_max_days = j.at("temporary_max_days");
        c.stable_min_days = j.at("stable_min_days");
        c.stable_max_days = j.at("stable_max_days");
        c.catalog_size = j.at("catalog_size");
        c.popular_services = j.at("popular_services");
        c.personal_services_min = j.at("personal_services_min");
        c.personal_services_max = j.at("personal_services_max");
        c.personal_share = j.at("personal_share");
        c.preference_skew = j.at("preference_skew");
        c.sessions_per_day_min = j.at("sessions_per_day_min");
        c.sessions_per_day_max = j.at("sessions_per_day_max");
        c.browser_catalog_size = j.at("browser_catalog_size");
        c.unique_browsers = j.at("unique_browsers");
        c.second_browser_fraction = j.at("second_browser_fraction");
        c.client_hello_rate = j.at("client_hello_rate");
        c.server_hello_rate = j.at("server_hello_rate");
        c.certificate_rate = j.at("certificate_rate");
    } catch (const nlohmann::json::exception& e) {
        throw SynthError(SynthErrc::bad_config, std::string("incomplete manifest: ") + e.what());
    }
    c.validate();
    return c;
}

void write_labels(const std::filesystem::path& path, const std::map<Ipv6Address, int>& labels) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write labels " + path.string());
    }
    for (const auto& [addr, user] : labels) {
        out << addr.to_string() << ' ' << user << '\n';
    }
}

std::map<Ipv6Address, int> read_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IngestError(IngestErrc::io_error, "cannot open labels " + path.string());
    }
    std::map<Ipv6Address, int> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::istringstream fields(line);
        std::string addr_text;
        int user = 0;
        std::string extra;
        if (!(fields >> addr_text >> user) || (fields >> extra)) {
            throw IngestError(IngestErrc::schema_error, "labels line " + std::to_string(line_no) + ": expected '<address> <user>'",
                              line_no);
        }
        auto addr = Ipv6Address::parse(addr_text);
        if (!addr) {
            throw IngestError(IngestErrc::schema_error, "labels line " + std::to_string(line_no) + ": bad address",
                              line_no);
        }
        if (!labels.emplace(*addr, user).second) {
            throw IngestError(IngestErrc::schema_error,
                              "labels line " + std::to_string(line_no) + ": duplicate address", line_no);
        }
    }
    return labels;
}

} // namespace siamhan
