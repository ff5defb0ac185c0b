#pragma once

#include "siamhan/synthgen.hpp"

#include <random>

namespace siamhan::detail {

using Rng = std::mt19937_64;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

BrowserProfile random_browser(Rng& rng);
Service random_service(Rng& rng, std::size_t index);
/// Zipf weights 1/(k+1)^skew for k in [0, n).
std::vector<double> zipf_weights(std::size_t n, double skew);

} // namespace siamhan::detail
