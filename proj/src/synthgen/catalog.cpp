#include "catalog.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace siamhan::detail {

namespace {

constexpr std::array<std::uint16_t, 36> kSuitePool = {
    0xc02b, 0xc02f, 0xc02c, 0xc030, 0xcca9, 0xcca8, 0xc013, 0xc014, 0x009c, 0x009d, 0x002f, 0x0035,
    0x000a, 0xc009, 0xc00a, 0x1301, 0x1302, 0x1303, 0xc023, 0xc027, 0xc024, 0xc028, 0x003c, 0x003d,
    0x0067, 0x006b, 0x0033, 0x0039, 0xc012, 0x0016, 0x00ff, 0x0005, 0x0004, 0x009e, 0x009f, 0xc008,
};

constexpr std::array<const char*, 24> kSyllables = {
    "ka", "lo", "mi", "net", "za", "ro", "vi", "tek", "bo", "da", "sun", "lux",
    "pa", "qi", "ren", "so", "tu", "wen", "xi", "yo", "fly", "hub", "gra", "dex",
};
constexpr std::array<const char*, 10> kHosts = {"www", "cdn", "api", "static", "img", "s", "m", "mail", "edge", "assets"};
constexpr std::array<const char*, 5> kTlds = {"com", "net", "org", "io", "cn"};
constexpr std::array<const char*, 4> kAlgorithms = {
    "1.2.840.113549.1.1.11",  // sha256WithRSAEncryption
    "1.2.840.10045.4.3.2",    // ecdsa-with-SHA256
    "1.2.840.113549.1.1.5",   // sha1WithRSAEncryption
    "1.2.840.10045.4.3.3",    // ecdsa-with-SHA384
};
constexpr std::array<const char*, 8> kAuthorities = {
    "Northwind", "Bluepeak", "Oakridge", "Silverline", "Redwood", "Keystone", "Ironbark", "Lumen",
};

template <typename Array>
const auto& pick(Rng& rng, const Array& arr) {
    std::uniform_int_distribution<std::size_t> d(0, arr.size() - 1);
    return arr[d(rng)];
}

std::string random_word(Rng& rng) {
    std::uniform_int_distribution<int> parts(2, 4);
    std::string w;
    for (int i = parts(rng); i > 0; --i) {
        w += pick(rng, kSyllables);
    }
    return w;
}

} // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over the combined value
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

BrowserProfile random_browser(Rng& rng) {
    BrowserProfile b;
    std::bernoulli_distribution coin(0.7);
    b.record_version = coin(rng) ? 0x0301 : 0x0303;
    std::discrete_distribution<int> ver({85, 10, 5});
    b.client_version = std::array<std::uint16_t, 3>{0x0303, 0x0302, 0x0301}[ver(rng)];
    std::vector<std::uint16_t> pool(kSuitePool.begin(), kSuitePool.end());
    std::shuffle(pool.begin(), pool.end(), rng);
    std::uniform_int_distribution<std::size_t> count(6, 18);
    pool.resize(count(rng));
    b.cipher_suites = std::move(pool);
    b.compression = std::bernoulli_distribution(0.9)(rng) ? std::vector<std::uint8_t>{0}
                                                           : std::vector<std::uint8_t>{1, 0};
    return b;
}

Service random_service(Rng& rng, std::size_t index) {
    Service s;
    std::uniform_int_distribution<std::uint64_t> any;
    std::uint64_t prefix = (std::uint64_t{0x20010db8} << 32) | (std::uint64_t{0xf000 | (index & 0x0fff)} << 16) |
                           (any(rng) & 0xffff);
    s.address = Ipv6Address::from_halves(prefix, any(rng) | 1);

    std::string name = random_word(rng);
    std::string tld = pick(rng, kTlds);
    s.sni = std::string(pick(rng, kHosts)) + "." + name + "." + tld;

    std::bernoulli_distribution modern(0.85);
    s.record_version = 0x0303;
    s.server_version = modern(rng) ? 0x0303 : 0x0302;
    std::vector<std::uint16_t> prefs(kSuitePool.begin(), kSuitePool.end());
    std::shuffle(prefs.begin(), prefs.end(), rng);
    s.preferred_suites = std::move(prefs);

    s.algorithm_id = pick(rng, kAlgorithms);
    std::string ca = pick(rng, kAuthorities);
    std::uniform_int_distribution<int> gen(1, 3);
    s.issuer = "C=US, O=" + ca + " Trust Services, CN=" + ca + " Secure Server CA G" + std::to_string(gen(rng));
    std::string org = name;
    org[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(org[0])));
    s.subject = std::bernoulli_distribution(0.5)(rng) ? "CN=*." + name + "." + tld
                                                       : "C=US, O=" + org + " Inc, CN=*." + name + "." + tld;
    return s;
}

std::vector<double> zipf_weights(std::size_t n, double skew) {
    std::vector<double> w(n);
    for (std::size_t k = 0; k < n; ++k) {
        w[k] = 1.0 / std::pow(static_cast<double>(k + 1), skew);
    }
    return w;
}

} // namespace siamhan::detail
