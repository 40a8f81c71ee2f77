#pragma once

#include <cstdint>
#include <string>

#include "genbound/hessian.hpp"
#include "genbound/trainer.hpp"

namespace genbound {

// Which surrogates feed the closed-form perturbation. Defaults follow the
// experimental choices: H_pen = empirical Hessian at W_T (keeps the inverses
// population-free), H_flat = empirical-minus-population difference, J =
// empirical-minus-population gradient.
struct PerturbationChoice {
    enum class HSel { delta_h, emp_h };
    enum class JSel { delta_grad, emp_grad };
    HSel h_flat = HSel::delta_h;
    HSel h_pen = HSel::emp_h;
    JSel j = JSel::delta_grad;
    double lambda = 1.0;
};

struct McConfig {
    int trace_probes = 64;
    int mc_samples = 2000;
    std::uint64_t seed = 0;
    double cg_tol = 0.01;
    int cg_max_iter = 20;
};

struct OmniscientPerturbation {
    Vector delta_g;
    double C = 0.0;
    double lambda = 0.0;
    double cg_residual_ratio = 0.0;
    int cg_iters = 0;
};

struct BoundReport {
    std::string name;
    double trajectory = 0.0;  // expectation feeding the trajectory factor
    double penalty = 0.0;     // direct loss-difference penalty term
    double flatness = 0.0;    // |trace| expectation feeding the flatness factor
    double sigma_star = 0.0;
    double total = 0.0;
    double measured_gap = 0.0;
    double lambda = 0.0;
    double R = 0.0;
    int k = 0;
    int n = 0;  // per-run training set size
    int T = 0;
    std::string flags;
    bool zero_variance = false;
    // The Taylor residual r of the flatness theorem is never instantiated by
    // the source material; it is carried as a label, not a number.
    std::string residual_note = "r unquantified";
};

// Mean over runs of [test loss - own-split train loss] at W_T.
double measured_gap(const Problem& problem, const Dataset& pool, const RunEnsemble& ens,
                    const DataView& test);

// sum_t (1 / sigma^2) * (1/k) sum_i |g_t^i - mean_i g_t^i|^2 (plug-in
// cross-run mean). raw_trajectory_variance is the sigma-free inner sum.
double raw_trajectory_variance(const RunEnsemble& ens, bool bessel_corrected = false);
double wang_trajectory_term(const RunEnsemble& ens, double sigma);

// Mean of Delta W_T over all runs except i.
Vector leave_one_out_mean(const RunEnsemble& ens, int i);

// C = (3/2) (R^2 / n * |trace(H_flat)|)^(1/3); errors when the trace is 0.
double flatness_constant(double R, double n, double trace_h_flat);

// Closed-form perturbation: Delta G = -(2 lambda C I + H_pen)^{-1}
// (2 lambda C (Delta W_T - loo_mean) + J), solved matrix-free via the
// shifted-CG route.
OmniscientPerturbation omniscient_delta_g(const Vector& delta_w, const Vector& loo_mean,
                                          const Vector& J, const LinearOperator& h_pen,
                                          double C, double lambda, double cg_tol = 0.01,
                                          int cg_max_iter = 20);

// [L_S(w + dg) - L_S(w)] - [L_test(w + dg) - L_test(w)] for one run.
double penalty_direct(const Problem& problem, const Vector& w_T, const Vector& delta_g,
                      const DataView& own_split, const DataView& test);

enum class PenaltyMode { mc, second_order };

// Gaussian-smoothed loss difference at `center` with covariance variance * I,
// train-minus-test with shared draws (mc) or shared probes (second order).
// An empty test view evaluates the single-view smoothed difference.
double gaussian_penalty(const Problem& problem, const Vector& center, double variance,
                        const DataView& train, const DataView& test, PenaltyMode mode,
                        int mc_samples, RngStream& rng, double* stderr_out = nullptr);

// Minimizer of A / sigma + sigma^2 B for A, B > 0:
// sigma* = (A / 2B)^(1/3), value = 3 (A/2)^(2/3) B^(1/3).
struct SigmaOpt {
    double sigma_star;
    double value;
};
SigmaOpt optimal_sigma(double A, double B);

// The omniscient-trajectory flatness bound, assembled per run with
// leave-one-out means. force_zero_delta_g hard-sets Delta G = 0, which must
// reproduce the isotropic terminal-variance bound term by term.
BoundReport flatness_bound(const Problem& problem, const Dataset& pool, const RunEnsemble& ens,
                           const PerturbationChoice& choice, const McConfig& mc,
                           bool force_zero_delta_g = false);

// Gradient-variance trajectory bound with sigma-optimized second-order
// flatness term (empirical Hessian trace; optionally minus the validation
// trace when use_population_hessian is set).
BoundReport wang_bound(const Problem& problem, const Dataset& pool, const RunEnsemble& ens,
                       const McConfig& mc, bool use_population_hessian = false);

// Isotropic terminal-variance bound (the Delta G = 0 path).
BoundReport neu_isotropic_bound(const Problem& problem, const Dataset& pool,
                                const RunEnsemble& ens, const McConfig& mc);

}  // namespace genbound
