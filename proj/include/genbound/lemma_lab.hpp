#pragma once

#include <functional>
#include <string>
#include <vector>

#include "genbound/rng.hpp"

namespace genbound {

// Sampler over R^d for the statistical lemma checks.
struct Sampler {
    std::string name;
    std::size_t dim = 1;
    std::function<Vector(RngStream&)> draw;
};

struct LemmaReport {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double tolerance = 0.0;  // 4 * stderr of the comparison
    bool pass = false;
};

// E|X - EX| <= E|X1 - X2| and E|X - EX|^2 == (1/2) E|X1 - X2|^2, both within
// 4 * stderr at m samples.
std::vector<LemmaReport> check_center_distance(const Sampler& sampler, int m,
                                               std::uint64_t seed);

// E|f(EW) - f(W)| <= 2 E f(W) + 4 * stderr for non-negative convex f;
// convexity is probe-tested on segment midpoints first.
LemmaReport check_convex_lemma(const std::function<double(const Vector&)>& f,
                               const Sampler& sampler, int m, std::uint64_t seed);

// Scalar Gaussian channel: exact MI (1/2) ln(1 + a^2 sx^2 / s^2) vs the
// variance surrogate a^2 sx^2 / (2 s^2).
struct KeyLemmaReport {
    double mi_exact = 0.0;
    double variance_bound = 0.0;
    bool pass = false;
};
KeyLemmaReport check_key_lemma_gaussian(double a, double sigma_x, double sigma);

// min_a E_x f(x, a) >= E_x min_a f(x, a) on a finite table f[x][a] with
// uniform x; exact arithmetic, no sampling.
struct InterchangeReport {
    double lhs = 0.0;  // min over a of the mean
    double rhs = 0.0;  // mean of the per-x min
    bool pass = false;
    bool equal = false;
};
InterchangeReport check_interchange(const std::vector<std::vector<double>>& table);

// The 20-family battery used by the acceptance suite.
std::vector<Sampler> default_sampler_families(std::uint64_t seed);

}  // namespace genbound
