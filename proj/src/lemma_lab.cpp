#include "genbound/lemma_lab.hpp"

#include <cmath>
#include <stdexcept>

namespace genbound {

namespace {

struct Moments {
    double mean = 0.0;
    double stderr_ = 0.0;
};

Moments sample_mean(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    double mean = s / xs.size();
    double v = 0.0;
    for (double x : xs) v += (x - mean) * (x - mean);
    v /= (xs.size() - 1);
    return {mean, std::sqrt(v / xs.size())};
}

}  // namespace

std::vector<LemmaReport> check_center_distance(const Sampler& sampler, int m,
                                               std::uint64_t seed) {
    if (m < 10000) throw std::invalid_argument("check_center_distance: m < 1e4");
    RngStream rng(seed, 0x1E44A);
    std::vector<Vector> draws(m);
    Vector mean(sampler.dim, 0.0);
    for (int i = 0; i < m; ++i) {
        draws[i] = sampler.draw(rng);
        axpy(1.0, draws[i], mean);
    }
    for (double& v : mean) v /= m;

    std::vector<double> dist_center(m), sq_center(m), dist_pair(m / 2), sq_pair(m / 2);
    for (int i = 0; i < m; ++i) {
        double d = norm(sub(draws[i], mean));
        dist_center[i] = d;
        sq_center[i] = d * d;
    }
    for (int i = 0; i + 1 < m; i += 2) {
        double d = norm(sub(draws[i], draws[i + 1]));
        dist_pair[i / 2] = d;
        sq_pair[i / 2] = d * d;
    }

    Moments c1 = sample_mean(dist_center), p1 = sample_mean(dist_pair);
    Moments c2 = sample_mean(sq_center), p2 = sample_mean(sq_pair);

    std::vector<LemmaReport> out;
    {
        LemmaReport r;
        r.name = sampler.name + "/center_distance";
        r.lhs = c1.mean;
        r.rhs = p1.mean;
        r.tolerance = 4.0 * std::sqrt(c1.stderr_ * c1.stderr_ + p1.stderr_ * p1.stderr_) +
                      1e-9 * (1.0 + std::fabs(r.lhs) + std::fabs(r.rhs));  // fp dust on degenerate laws
        r.pass = r.lhs <= r.rhs + r.tolerance;
        out.push_back(r);
    }
    {
        // The squared version is an equality.
        LemmaReport r;
        r.name = sampler.name + "/center_sq_distance";
        r.lhs = c2.mean;
        r.rhs = 0.5 * p2.mean;
        r.tolerance = 4.0 * std::sqrt(c2.stderr_ * c2.stderr_ + 0.25 * p2.stderr_ * p2.stderr_) +
                      1e-9 * (1.0 + std::fabs(r.lhs) + std::fabs(r.rhs));
        r.pass = std::fabs(r.lhs - r.rhs) <= r.tolerance;
        out.push_back(r);
    }
    return out;
}

LemmaReport check_convex_lemma(const std::function<double(const Vector&)>& f,
                               const Sampler& sampler, int m, std::uint64_t seed) {
    RngStream probe_rng(seed, 0xC0);
    // Midpoint convexity probe.
    for (int p = 0; p < 50; ++p) {
        Vector a = sampler.draw(probe_rng), b = sampler.draw(probe_rng);
        Vector mid(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) mid[i] = 0.5 * (a[i] + b[i]);
        if (f(mid) > 0.5 * (f(a) + f(b)) + 1e-9 * (1.0 + std::fabs(f(a)) + std::fabs(f(b))))
            throw std::runtime_error("check_convex_lemma: not convex");
        if (f(a) < 0.0 || f(b) < 0.0) throw std::runtime_error("check_convex_lemma: not non-negative");
    }

    RngStream rng(seed, 0xC1);
    std::vector<Vector> draws(m);
    Vector mean(sampler.dim, 0.0);
    for (int i = 0; i < m; ++i) {
        draws[i] = sampler.draw(rng);
        axpy(1.0, draws[i], mean);
    }
    for (double& v : mean) v /= m;
    double f_mean = f(mean);

    std::vector<double> lhs(m), rhs(m);
    for (int i = 0; i < m; ++i) {
        double fw = f(draws[i]);
        lhs[i] = std::fabs(f_mean - fw);
        rhs[i] = fw;
    }
    Moments L = sample_mean(lhs), Rm = sample_mean(rhs);
    LemmaReport r;
    r.name = sampler.name + "/convex";
    r.lhs = L.mean;
    r.rhs = 2.0 * Rm.mean;
    r.tolerance = 4.0 * std::sqrt(L.stderr_ * L.stderr_ + 4.0 * Rm.stderr_ * Rm.stderr_);
    r.pass = r.lhs <= r.rhs + r.tolerance;
    return r;
}

KeyLemmaReport check_key_lemma_gaussian(double a, double sigma_x, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("check_key_lemma_gaussian: sigma <= 0");
    double snr = a * a * sigma_x * sigma_x / (sigma * sigma);
    KeyLemmaReport r;
    r.mi_exact = 0.5 * std::log1p(snr);
    r.variance_bound = 0.5 * snr;
    r.pass = r.mi_exact <= r.variance_bound + 1e-15;
    return r;
}

InterchangeReport check_interchange(const std::vector<std::vector<double>>& table) {
    if (table.empty() || table[0].empty())
        throw std::invalid_argument("check_interchange: empty table");
    std::size_t nx = table.size(), na = table[0].size();
    InterchangeReport r;
    r.lhs = 0.0;
    double best = 0.0;
    for (std::size_t a = 0; a < na; ++a) {
        double mean = 0.0;
        for (std::size_t x = 0; x < nx; ++x) mean += table[x][a];
        mean /= double(nx);
        if (a == 0 || mean < best) best = mean;
    }
    r.lhs = best;
    double s = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
        double mn = table[x][0];
        for (std::size_t a = 1; a < na; ++a) mn = std::min(mn, table[x][a]);
        s += mn;
    }
    r.rhs = s / double(nx);
    r.pass = r.lhs >= r.rhs;
    r.equal = (r.lhs == r.rhs);
    return r;
}

std::vector<Sampler> default_sampler_families(std::uint64_t seed) {
    std::vector<Sampler> out;
    RngStream meta(seed, 0xFA1);

    for (int i = 0; i < 7; ++i) {
        std::size_t d = 1 + meta.next_u64() % 5;
        double s = 0.5 + 2.5 * meta.next_double();
        out.push_back({"gaussian_d" + std::to_string(d) + "_" + std::to_string(i), d,
                       [d, s](RngStream& rng) { return gaussian_sample(rng, d, s); }});
    }
    for (int i = 0; i < 7; ++i) {
        std::size_t d = 1 + meta.next_u64() % 4;
        double sep = 3.0 * meta.next_double();
        double s = 0.3 + meta.next_double();
        out.push_back({"mixture_d" + std::to_string(d) + "_" + std::to_string(i), d,
                       [d, sep, s](RngStream& rng) {
                           Vector v = gaussian_sample(rng, d, s);
                           if (rng.next_u64() & 1ULL) v[0] += sep;
                           return v;
                       }});
    }
    for (int i = 0; i < 6; ++i) {
        std::size_t d = 1 + meta.next_u64() % 3;
        double scale = 0.5 + 2.0 * meta.next_double();
        out.push_back({"discrete_d" + std::to_string(d) + "_" + std::to_string(i), d,
                       [d, scale](RngStream& rng) {
                           Vector v(d);
                           for (std::size_t j = 0; j < d; ++j)
                               v[j] = scale * double(int(rng.uniform_below(5)) - 2);
                           return v;
                       }});
    }
    return out;
}

}  // namespace genbound
