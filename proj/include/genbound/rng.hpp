#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "genbound/vec.hpp"

namespace genbound {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}
}  // namespace detail

// Splittable counter-style stream: the (seed, stream id) pair is hashed into
// the initial state, so distinct stream ids give independent reproducible
// sequences and equal pairs give bit-identical ones.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id = 0) {
        std::uint64_t s = seed;
        std::uint64_t a = detail::splitmix64(s);
        s = a ^ (stream_id * 0xD1B54A32D192ED03ULL + 0xEB44ACCAB455D165ULL);
        state_ = detail::splitmix64(s);
    }

    std::uint64_t next_u64() { return detail::splitmix64(state_); }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased uniform integer in [0, n).
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_below: n == 0");
        std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Box-Muller; the spare is cached, so draws come in deterministic pairs.
    double next_gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Derived stream, independent of the parent's future output.
    RngStream fork(std::uint64_t sub) const { return RngStream(state_, sub + 1); }

  private:
    std::uint64_t state_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// i.i.d. N(0, stddev^2) entries; stddev == 0 yields the zero vector without
// consuming randomness for the values.
inline Vector gaussian_sample(RngStream& rng, std::size_t dim, double stddev) {
    if (stddev < 0.0) throw std::invalid_argument("gaussian_sample: negative stddev");
    Vector v(dim, 0.0);
    if (stddev == 0.0) return v;
    for (std::size_t i = 0; i < dim; ++i) v[i] = stddev * rng.next_gaussian();
    return v;
}

// Rademacher +-1 entries.
inline Vector rademacher_sample(RngStream& rng, std::size_t dim) {
    Vector v(dim);
    for (std::size_t i = 0; i < dim; ++i) v[i] = (rng.next_u64() & 1ULL) ? 1.0 : -1.0;
    return v;
}

}  // namespace genbound
