#pragma once

#include <cstdint>
#include <random>

namespace volrec {

/// Seeded pseudo-random stream. Substreams are keyed by (master seed,
/// stream index) so replications can run in any order or on any thread and
/// still draw identical numbers.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : Rng(seed, 0) {}

    Rng(std::uint64_t master_seed, std::uint64_t stream) : key_(mix(master_seed, stream)) {
        std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                          static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)};
        engine_.seed(seq);
    }

    /// Independent child stream, e.g. one per replication.
    Rng substream(std::uint64_t index) const { return Rng(key_, index); }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    double normal() { return normal_(engine_); }
    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Uniform integer in [0, n).
    std::uint64_t index(std::uint64_t n) {
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
    }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        // splitmix64 finalizer over the pair
        std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace volrec
