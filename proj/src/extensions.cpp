#include "genbound/extensions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace genbound {

std::vector<double> individual_trajectory_term(const Problem& problem, const Dataset& pool,
                                               const TrajectoryRecord& base,
                                               const std::vector<int>& split,
                                               const SGDConfig& config, const Vector& w0,
                                               int resamples, double sigma,
                                               std::uint64_t seed) {
    if (!problem.resample) throw std::runtime_error("individual_trajectory_term: non-resampleable problem");
    if (resamples < 2) throw std::invalid_argument("individual_trajectory_term: resamples < 2");
    if (!(sigma > 0.0)) throw std::invalid_argument("individual_trajectory_term: sigma <= 0");

    int T = base.steps();
    std::vector<double> terms(split.size(), 0.0);
    for (std::size_t pos = 0; pos < split.size(); ++pos) {
        // E[g_t | Z_{-i}]: Monte-Carlo over fresh draws of the i-th sample
        // with the seed V and all other samples fixed.
        std::vector<std::vector<Vector>> reruns(resamples);
        Dataset scratch = pool;
        for (int r = 0; r < resamples; ++r) {
            RngStream rng(seed, 0x1D0000ULL + pos * 1000 + std::uint64_t(r));
            problem.resample(rng, scratch, split[pos]);
            reruns[r] = run_sgd(problem, scratch, split, config, w0, base.split_id).g;
        }
        double term = 0.0;
        Vector mean(w0.size());
        for (int t = 0; t < T; ++t) {
            mean.assign(w0.size(), 0.0);
            for (int r = 0; r < resamples; ++r) axpy(1.0, reruns[r][t], mean);
            for (double& v : mean) v /= resamples;
            term += sqnorm(sub(base.g[t], mean)) / (sigma * sigma);
        }
        terms[pos] = term;
    }
    return terms;
}

SupersampleLayout make_supersample(const std::vector<int>& pool2n, RngStream& rng) {
    if (pool2n.size() < 2 || pool2n.size() % 2 != 0)
        throw std::invalid_argument("make_supersample: need an even pool of >= 2 indices");
    SupersampleLayout lay;
    lay.n = int(pool2n.size() / 2);
    lay.col0.assign(pool2n.begin(), pool2n.begin() + lay.n);
    lay.col1.assign(pool2n.begin() + lay.n, pool2n.end());
    lay.u.resize(lay.n);
    for (int i = 0; i < lay.n; ++i) lay.u[i] = int(rng.next_u64() & 1ULL);
    return lay;
}

double cmi_trajectory_term(const Problem& problem, const Dataset& pool,
                           const std::vector<int>& pool2n, const SGDConfig& config,
                           const Vector& w0, int resamples, double sigma,
                           std::uint64_t seed) {
    if (resamples < 2) throw std::invalid_argument("cmi_trajectory_term: resamples < 2");
    if (!(sigma > 0.0)) throw std::invalid_argument("cmi_trajectory_term: sigma <= 0");

    // Fixed supersample and V; fresh U per draw.
    std::vector<std::vector<Vector>> runs(resamples);
    for (int r = 0; r < resamples; ++r) {
        RngStream rng(seed, 0xC310000ULL + std::uint64_t(r));
        SupersampleLayout lay = make_supersample(pool2n, rng);
        runs[r] = run_sgd(problem, pool, lay.realized(), config, w0).g;
    }
    int T = int(runs[0].size());
    double term = 0.0;
    Vector mean(w0.size());
    for (int t = 0; t < T; ++t) {
        mean.assign(w0.size(), 0.0);
        for (int r = 0; r < resamples; ++r) axpy(1.0, runs[r][t], mean);
        for (double& v : mean) v /= resamples;
        double s = 0.0;
        for (int r = 0; r < resamples; ++r) s += sqnorm(sub(runs[r][t], mean));
        term += (s / resamples) / (sigma * sigma);
    }
    return term;
}

IncoherenceRecord gradient_incoherence(const TrajectoryRecord& run, const Problem& problem,
                                       const Dataset& pool, const std::vector<int>& u,
                                       double clip_norm) {
    IncoherenceRecord rec;
    rec.u = u;
    int T = run.steps();
    rec.xi.reserve(T);
    rec.overlap.reserve(T);
    std::vector<int> sorted_u = u;
    std::sort(sorted_u.begin(), sorted_u.end());
    DataView u_view{&pool, u};

    for (int t = 0; t < T; ++t) {
        const std::vector<int>& batch = run.batches[t];
        int b = int(batch.size());
        std::vector<int> bminus;
        for (int i : batch)
            if (!std::binary_search(sorted_u.begin(), sorted_u.end(), i)) bminus.push_back(i);
        int ov = b - int(bminus.size());
        rec.overlap.push_back(ov);
        double coef = double(b - ov) / double(b);
        if (coef == 0.0) {
            rec.xi.emplace_back(run.W[t].size(), 0.0);
            continue;
        }
        Vector gb = clipped_mean_grad(problem, run.W[t], DataView{&pool, bminus}, clip_norm);
        Vector gu = clipped_mean_grad(problem, run.W[t], u_view, clip_norm);
        Vector xi = sub(gb, gu);
        for (double& v : xi) v *= coef;
        rec.xi.push_back(std::move(xi));
    }
    return rec;
}

double ddp_term(const std::vector<IncoherenceRecord>& records, double sigma, double R, int n,
                int m, const std::vector<std::vector<Vector>>* delta_g_hook) {
    if (m >= n) throw std::invalid_argument("ddp_term: m >= n");
    if (!(sigma > 0.0)) throw std::invalid_argument("ddp_term: sigma <= 0");
    if (records.empty()) return 0.0;
    int T = int(records[0].xi.size());
    double inner = 0.0;
    for (int t = 0; t < T; ++t) {
        double s = 0.0;
        for (std::size_t r = 0; r < records.size(); ++r) {
            const Vector& xi = records[r].xi[t];
            if (delta_g_hook) {
                s += sqnorm(sub(xi, (*delta_g_hook)[r][t]));
            } else {
                s += sqnorm(xi);
            }
        }
        inner += (s / double(records.size())) / (sigma * sigma);
    }
    return std::sqrt(R * R / double(n - m) * inner);
}

ClbResult clb_gd_experiment(int d, int n, double eta, int T, int trials, double L,
                            std::uint64_t seed) {
    if (trials < 30) throw std::invalid_argument("clb_gd_experiment: trials < 30");
    const double radius = L / 4.0;
    Problem problem = clb_quadratic_problem(d, radius);

    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    Vector w0(d, 0.0);

    double gap_sum = 0.0, gap_sq = 0.0;
    double cd_sum = 0.0, cd_sq = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        Dataset data;
        data.n = n;
        data.d_in = d;
        data.inputs.resize(std::size_t(n) * d);
        RngStream rng(seed, 0xC1B00000ULL + std::uint64_t(trial));
        for (int i = 0; i < n; ++i) problem.resample(rng, data, i);

        TrajectoryRecord run = run_projected_gd(problem, data, all, eta, T, w0);
        const Vector& wT = run.W.back();

        // Population loss has the closed form |w|^2 + radius^2 for z uniform
        // on the scaled sign-vector corners.
        double pop = sqnorm(wT) + radius * radius;
        double emp = mean_loss(problem, wT, DataView{&data, all});
        double gap = pop - emp;
        gap_sum += gap;
        gap_sq += gap * gap;

        // Centered-distance surrogate: E|W_T - W_T'| over a resampled i-th
        // sample with Z_{-i} shared.
        double cd = 0.0;
        Dataset paired = data;
        for (int i = 0; i < n; ++i) {
            double* dst = paired.row(i);
            const double* src = data.row(i);
            std::copy(src, src + d, dst);
            RngStream rng_i(seed, 0xCD000000ULL + std::uint64_t(trial) * 1009 + std::uint64_t(i));
            problem.resample(rng_i, paired, i);
            TrajectoryRecord rerun = run_projected_gd(problem, paired, all, eta, T, w0);
            cd += norm(sub(wT, rerun.W.back()));
            // restore row i
            std::copy(src, src + d, dst);
        }
        cd *= 2.0 * L / double(n);
        cd_sum += cd;
        cd_sq += cd * cd;
    }

    ClbResult res;
    res.trials = trials;
    res.measured_gap = gap_sum / trials;
    res.gap_stderr = std::sqrt(std::max(0.0, (gap_sq - trials * res.measured_gap * res.measured_gap) /
                                                  (trials - 1)) /
                               trials);
    res.centered_distance_term = cd_sum / trials;
    res.centered_stderr =
        std::sqrt(std::max(0.0, (cd_sq - trials * res.centered_distance_term *
                                              res.centered_distance_term) /
                                    (trials - 1)) /
                  trials);
    res.theorem_bound = 8.0 * L * L * std::sqrt(double(T)) * eta + 8.0 * L * L * T * eta / n;
    return res;
}

StabilityEstimate on_average_model_stability(const Problem& problem, int n,
                                             const SGDConfig& config, int trials,
                                             std::uint64_t seed,
                                             const std::function<void(RngStream&, Dataset&)>& maker) {
    if (!problem.resample) throw std::runtime_error("on_average_model_stability: non-resampleable problem");
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    Vector w0(problem.dim, 0.0);

    double sum = 0.0, sq = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        Dataset data;
        RngStream rng(seed, 0x57AB0000ULL + std::uint64_t(trial));
        maker(rng, data);
        SGDConfig c = config;
        c.seed = RngStream(seed, 0x57AB5EEDULL + std::uint64_t(trial)).next_u64();

        TrajectoryRecord base = run_sgd(problem, data, all, c, w0);
        double eps_trial = 0.0;
        Dataset paired = data;
        for (int i = 0; i < n; ++i) {
            std::copy(data.row(i), data.row(i) + data.d_in, paired.row(i));
            if (!data.targets.empty()) paired.targets[i] = data.targets[i];
            RngStream rng_i(seed, 0x57AB9000ULL + std::uint64_t(trial) * 1013 + std::uint64_t(i));
            problem.resample(rng_i, paired, i);
            TrajectoryRecord rerun = run_sgd(problem, paired, all, c, w0);
            eps_trial += sqnorm(sub(base.W.back(), rerun.W.back()));
            std::copy(data.row(i), data.row(i) + data.d_in, paired.row(i));
            if (!data.targets.empty()) paired.targets[i] = data.targets[i];
        }
        eps_trial /= n;
        sum += eps_trial;
        sq += eps_trial * eps_trial;
    }
    StabilityEstimate est;
    est.trials = trials;
    est.epsilon = sum / trials;
    if (trials > 1)
        est.stderr_ = std::sqrt(
            std::max(0.0, (sq - trials * est.epsilon * est.epsilon) / (trials - 1)) / trials);
    return est;
}

SmoothBounds smooth_bounds(double beta, double gamma2, double emp_loss, double eps_stab,
                           double eta, int T, int n, double k_factor, double norm_wstar_sq) {
    if (!(gamma2 > beta)) throw std::invalid_argument("smooth_bounds: gamma2 <= beta");

    auto gen_at = [beta, emp_loss, eps_stab](double g2) {
        return 1.0 / (1.0 - beta / g2) *
               (2.0 * beta / g2 * emp_loss + (beta + g2) / 2.0 * (eps_stab / 2.0));
    };

    SmoothBounds out;
    out.gen_bound = gen_at(gamma2);

    // Golden-section over gamma2 in (beta, 1000 beta].
    {
        const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
        double lo = beta * (1.0 + 1e-9), hi = beta * 1000.0;
        double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
        double f1 = gen_at(x1), f2 = gen_at(x2);
        for (int it = 0; it < 200; ++it) {
            if (f1 < f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = gen_at(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = gen_at(x2);
            }
        }
        out.gamma2_opt = 0.5 * (lo + hi);
        out.gen_bound_opt = gen_at(out.gamma2_opt);
    }

    if (T > 0 && n > 0 && eta > 0.0) {
        if (eta > 1.0 / (2.0 * beta) + 1e-12)
            throw std::invalid_argument("smooth_bounds: eta > 1/(2 beta)");
        if (!(k_factor > 1.0)) throw std::invalid_argument("smooth_bounds: k_factor <= 1");
        const double e = std::exp(1.0);
        double shape = (k_factor + 1.0) / (k_factor - 1.0) * norm_wstar_sq;
        out.excess_risk_separable =
            (4.0 * e * k_factor * beta * beta * eta / n +
             double(T) / (double(n) * n) * 4.0 * e * k_factor * beta * beta * eta +
             (0.5 + beta * eta) / (double(T) * eta)) *
            shape;
        out.excess_risk_separable_opt_T =
            (4.0 * e * k_factor * beta * beta * eta / n +
             2.0 / n * std::sqrt(4.0 * e * k_factor * beta * beta * (0.5 + beta * eta))) *
            shape;
    }
    return out;
}

}  // namespace genbound
