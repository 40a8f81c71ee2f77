#pragma once

#include <cstdint>
#include <vector>

#include "genbound/bounds.hpp"
#include "genbound/trainer.hpp"

namespace genbound {

// ------------------------------------------------------------------
// Individual-sample and CMI-supersample trajectory terms
// ------------------------------------------------------------------

// For each sample index i of the base run's split: estimate
// sum_t (1/sigma^2) E |g_t - E[g_t | Z_{-i}]|^2 by re-running training with
// Z_i resampled (fixed seed V, fixed Z_{-i}). Requires problem.resample.
std::vector<double> individual_trajectory_term(const Problem& problem, const Dataset& pool,
                                               const TrajectoryRecord& base,
                                               const std::vector<int>& split,
                                               const SGDConfig& config, const Vector& w0,
                                               int resamples, double sigma,
                                               std::uint64_t seed);

// 2n supersample layout with binary selectors.
struct SupersampleLayout {
    int n = 0;
    std::vector<int> col0, col1;  // pool indices, n each
    std::vector<int> u;           // n binary selectors

    std::vector<int> realized() const {
        std::vector<int> s(n);
        for (int i = 0; i < n; ++i) s[i] = u[i] ? col1[i] : col0[i];
        return s;
    }
};

SupersampleLayout make_supersample(const std::vector<int>& pool2n, RngStream& rng);

// sum_t (1/sigma^2) E |g_t - E[g_t | S~]|^2 with the conditional mean
// estimated by Monte-Carlo over fresh U draws (fixed supersample, fixed V).
double cmi_trajectory_term(const Problem& problem, const Dataset& pool,
                           const std::vector<int>& pool2n, const SGDConfig& config,
                           const Vector& w0, int resamples, double sigma,
                           std::uint64_t seed);

// ------------------------------------------------------------------
// Data-dependent-prior gradient incoherence
// ------------------------------------------------------------------

struct IncoherenceRecord {
    std::vector<int> u;                 // held-out prior indices (pool indices)
    std::vector<Vector> xi;             // T incoherence vectors
    std::vector<int> overlap;           // |U cap B_t| per step
};

// xi_t = ((b - |U cap B_t|) / b) (clip-mean grad over B_t \ U - clip-mean
// grad over U) at the recorded W_{t-1}; empty index sets contribute 0.
IncoherenceRecord gradient_incoherence(const TrajectoryRecord& run, const Problem& problem,
                                       const Dataset& pool, const std::vector<int>& u,
                                       double clip_norm);

// sqrt(R^2 / (n - m) * sum_t (1/sigma^2) mean_runs |xi_t - dg_t|^2); the
// dg hook may be empty (treated as zero).
double ddp_term(const std::vector<IncoherenceRecord>& records, double sigma, double R, int n,
                int m, const std::vector<std::vector<Vector>>* delta_g_hook = nullptr);

// ------------------------------------------------------------------
// CLB / projected GD minimax experiment
// ------------------------------------------------------------------

struct ClbResult {
    double measured_gap = 0.0;
    double gap_stderr = 0.0;
    double centered_distance_term = 0.0;  // (2L/n) sum_i E|W_T - W_T'|
    double centered_stderr = 0.0;
    double theorem_bound = 0.0;           // 8 L^2 sqrt(T) eta + 8 L^2 T eta / n
    int trials = 0;
};

// Monte-Carlo over data draws of projected GD on the scaled CLB quadratic
// (radius L/4 so the loss is L-Lipschitz); the centered-distance term pairs
// runs sharing Z_{-i} with a resampled i-th sample.
ClbResult clb_gd_experiment(int d, int n, double eta, int T, int trials, double L,
                            std::uint64_t seed);

// ------------------------------------------------------------------
// Smooth-loss stability
// ------------------------------------------------------------------

struct StabilityEstimate {
    double epsilon = 0.0;   // l2 on-average model stability
    double stderr_ = 0.0;
    int trials = 0;
};

// Mean squared distance between SGD outputs on S and on S^(i) (i-th sample
// replaced), shared seed V, averaged over i, data draws, and seeds.
// Requires problem.resample and a data `maker` that fills a fresh dataset.
StabilityEstimate on_average_model_stability(const Problem& problem, int n,
                                             const SGDConfig& config, int trials,
                                             std::uint64_t seed,
                                             const std::function<void(RngStream&, Dataset&)>& maker);

struct SmoothBounds {
    double gen_bound = 0.0;            // at the given gamma2
    double gen_bound_opt = 0.0;        // gamma2-minimized (golden section)
    double gamma2_opt = 0.0;
    double excess_risk_separable = 0.0;       // constant-step separable form
    double excess_risk_separable_opt_T = 0.0; // T-minimized form (~1/n)
};

// Closed forms of the smooth-loss stability bound and the separable-case
// excess risk, constant step eta <= 1/(2 beta), gamma2 = k_factor * beta.
SmoothBounds smooth_bounds(double beta, double gamma2, double emp_loss, double eps_stab,
                           double eta, int T, int n, double k_factor, double norm_wstar_sq);

}  // namespace genbound
