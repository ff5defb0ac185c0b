#pragma once

#include "siamhan/ingest.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace siamhan {

enum class SynthErrc { bad_config, unknown_method };

class SynthError : public std::runtime_error {
public:
    SynthError(SynthErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    SynthErrc code() const noexcept { return code_; }

private:
    SynthErrc code_;
};

enum class IidScheme { constant, stable, temporary };
const char* to_string(IidScheme scheme);

struct BrowserProfile {
    std::uint16_t record_version = 0x0301;
    std::uint16_t client_version = 0x0303;
    std::vector<std::uint16_t> cipher_suites;
    std::vector<std::uint8_t> compression{0};
};

struct Service {
    Ipv6Address address;
    std::string sni;
    std::uint16_t record_version = 0x0303;
    std::uint16_t server_version = 0x0303;
    std::vector<std::uint16_t> preferred_suites;
    std::string algorithm_id;
    std::string issuer;
    std::string subject;
};

struct UserModel {
    int id = 0;
    IidScheme iid_scheme = IidScheme::stable;
    bool changes_address = true;
    /// Days between address changes, drawn uniformly from this range.
    double min_change_days = 1.0;
    double max_change_days = 7.0;
    std::vector<BrowserProfile> browsers;
    std::vector<double> browser_weights;
    std::vector<std::size_t> services;  // indices into the service catalog
    std::vector<double> service_weights;
    double sessions_per_day = 1.0;
};

struct GeneratorConfig {
    int users = 100;
    int months = 5;
    int days_per_month = 30;
    std::uint64_t seed = 1;
    std::int64_t start_time = 1519862400;  // 2018-03-01T00:00:00Z

    // Address transform calibration.
    double change_fraction = 0.80;          // users with >= 2 addresses in a month
    double subnet_update_fraction = 0.98;   // changes that redraw the subnet identifier
    double constant_iid_fraction = 0.23;
    double temporary_iid_fraction = 0.385;  // remainder is stable
    double temporary_min_days = 1.0;
    double temporary_max_days = 7.0;
    double stable_min_days = 7.0;
    double stable_max_days = 28.0;

    // Traffic shape.
    int catalog_size = 400;
    int popular_services = 40;
    int personal_services_min = 6;
    int personal_services_max = 14;
    double personal_share = 0.6;     // probability mass on the user's personal services
    double preference_skew = 1.1;    // Zipf exponent within personal and popular sets
    double sessions_per_day_min = 0.6;
    double sessions_per_day_max = 1.5;
    int browser_catalog_size = 10;
    bool unique_browsers = false;    // each user gets freshly drawn profiles
    double second_browser_fraction = 0.1;

    // Capture loss (per connection).
    double client_hello_rate = 0.931;
    double server_hello_rate = 0.939;
    double certificate_rate = 0.784;  // unconditional; implies ServerHello

    /// Users with private service sets and private browser profiles.
    static GeneratorConfig distinguishable();

    void validate() const;
};

struct SyntheticDataset {
    std::vector<SessionRecord> sessions;  // sorted by timestamp
    std::map<Ipv6Address, int> labels;    // client address -> user id
    std::vector<UserModel> users;
    std::vector<Service> catalog;
};

SyntheticDataset generate(const GeneratorConfig& config);

std::string manifest_json(const GeneratorConfig& config);
GeneratorConfig config_from_manifest(const std::string& json_text);

// Label files: "<address> <user id>" per line.
void write_labels(const std::filesystem::path& path, const std::map<Ipv6Address, int>& labels);
std::map<Ipv6Address, int> read_labels(const std::filesystem::path& path);

enum class Obfuscation { c_random, cf_random, cf_background, sf_background, combination };
Obfuscation parse_obfuscation(std::string_view name);
const char* to_string(Obfuscation method);

struct ObfuscatedLog {
    std::vector<SessionRecord> sessions;
    /// Forged client address -> original; empty unless client addresses were forged.
    std::map<Ipv6Address, Ipv6Address> forged_to_original;
};

/// Applies a traffic obfuscation countermeasure. Background methods add, per
/// user, as many sessions as the user originally had. Labels are untouched;
/// resolve forged addresses through `forged_to_original`.
ObfuscatedLog obfuscate(const std::vector<SessionRecord>& sessions, const std::map<Ipv6Address, int>& labels,
                        Obfuscation method, std::uint64_t seed);

} // namespace siamhan
