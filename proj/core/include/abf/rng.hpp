#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace abf {

/// Reproducible random stream addressed by (seed, stream_id).
///
/// Every stochastic operation takes an RngStream. Streams with the same
/// address replay the same draws; distinct stream ids are seeded through a
/// SplitMix64 mix of the address so they behave as independent generators.
/// Parallel code assigns one stream per work item, which makes results
/// independent of the number of workers.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    /// Uniform on [0, 1).
    double uniform();
    /// Uniform on the open interval (a, b).
    double uniform_open(double a, double b);
    double normal();
    /// Exponential with unit rate.
    double exponential();
    /// Uniform integer in [0, n).
    std::uint64_t index(std::uint64_t n);

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Purposes used to carve disjoint stream-id ranges out of one seed.
enum class StreamPurpose : std::uint64_t {
    data = 1,
    abc_draw = 2,
    filter = 3,
    mcmc = 4,
    fz_reference = 5,
    user = 99,
};

/// Stream id for work item (a, b) of a given purpose.
std::uint64_t stream_id(StreamPurpose purpose, std::uint64_t a = 0, std::uint64_t b = 0) noexcept;

/// Stable 64-bit FNV-1a hash; used for config hashes and name-keyed streams.
std::uint64_t fnv1a(std::string_view text) noexcept;

}  // namespace abf
