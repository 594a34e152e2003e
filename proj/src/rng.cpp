#include "sscap/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sscap {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    // Reject draws from the tail remainder so each residue is equally likely.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

int Rng::int_in(int lo, int hi_inclusive) {
    if (hi_inclusive < lo) throw std::invalid_argument("Rng::int_in: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi_inclusive) - lo + 1;
    return lo + static_cast<int>(below(span));
}

double Rng::normal() {
    if (have_spare_normal_) {
        have_spare_normal_ = false;
        return spare_normal_;
    }
    // Box-Muller on two uniforms; u1 is kept away from zero for the log.
    double u1;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_normal_ = r * std::sin(theta);
    have_spare_normal_ = true;
    return r * std::cos(theta);
}

Rng Rng::derive(std::uint64_t tag) const {
    std::uint64_t state = seed_of_record_;
    (void)splitmix64(state);
    state ^= tag * 0x9e3779b97f4a7c15ULL;
    const std::uint64_t child_seed = splitmix64(state);
    Rng child(child_seed);
    child.seed_of_record_ = child_seed;
    return child;
}

Rng make_rng(std::uint64_t seed) {
    Rng r(seed);
    r.seed_of_record_ = seed;
    return r;
}

}  // namespace sscap
