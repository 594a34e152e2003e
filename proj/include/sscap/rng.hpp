#pragma once

// Deterministic random source. std::mt19937_64 supplies raw 64-bit draws and
// every distribution on top of it is written out here, because the standard
// library leaves <random> distribution algorithms implementation-defined and
// results must match bit for bit across compilers.

#include <cstdint>
#include <random>
#include <vector>

namespace sscap {

class Rng {
   public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random mantissa bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Rejection sampling keeps the result unbiased.
    std::uint64_t below(std::uint64_t n);

    int int_in(int lo, int hi_inclusive);

    // Standard normal via Box-Muller. The second value of each pair is cached.
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        // Fisher-Yates, back to front.
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Derives an independent child stream. SplitMix64 scrambles (seed, tag) so
    // streams with nearby tags do not correlate.
    Rng derive(std::uint64_t tag) const;

    std::uint64_t seed() const { return seed_of_record_; }

   private:
    std::mt19937_64 engine_;
    std::uint64_t seed_of_record_ = 0;
    bool have_spare_normal_ = false;
    double spare_normal_ = 0.0;

    friend Rng make_rng(std::uint64_t seed);
};

// Preferred constructor wrapper; records the seed for logging.
Rng make_rng(std::uint64_t seed);

// SplitMix64 step, exposed for stream derivation tests.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace sscap
