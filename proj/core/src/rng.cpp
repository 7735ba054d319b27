#include "abf/rng.hpp"

#include <array>
#include <cmath>

namespace abf {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
    const std::uint64_t a = splitmix64(seed);
    const std::uint64_t b = splitmix64(a ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
    std::array<std::uint32_t, 4> words{
        static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
        static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id)) {}

double RngStream::uniform() { return unit_(engine_); }

double RngStream::uniform_open(double a, double b) {
    double u = 0.0;
    do {
        u = unit_(engine_);
    } while (u == 0.0);
    return a + (b - a) * u;
}

double RngStream::normal() { return normal_(engine_); }

double RngStream::exponential() {
    double u = 0.0;
    do {
        u = unit_(engine_);
    } while (u == 0.0);
    return -std::log(u);
}

std::uint64_t RngStream::index(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
}

std::uint64_t stream_id(StreamPurpose purpose, std::uint64_t a, std::uint64_t b) noexcept {
    std::uint64_t h = splitmix64(static_cast<std::uint64_t>(purpose));
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ (b * 0x9e3779b97f4a7c15ULL));
    return h;
}

std::uint64_t fnv1a(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace abf
