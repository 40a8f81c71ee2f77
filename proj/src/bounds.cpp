#include "genbound/bounds.hpp"

#include <cmath>
#include <stdexcept>

namespace genbound {

namespace {

constexpr std::uint64_t kStreamTraceC = 0xC7A11000ULL;
constexpr std::uint64_t kStreamTraceFlat = 0xF1A77000ULL;
constexpr std::uint64_t kStreamTraceWang = 0x3A6E9000ULL;

double mean_split_size(const RunEnsemble& ens) {
    double s = 0.0;
    for (const auto& sp : ens.plan.train_splits) s += double(sp.size());
    return s / double(ens.plan.train_splits.size());
}

LinearOperator hessian_op(const Problem& problem, const Dataset& pool,
                          const std::vector<int>& idx, const Vector& w) {
    HvpOperator h{&problem, DataView{&pool, idx}, w, problem.has_hvp()};
    return h.op();
}

double require_R(const Problem& problem) {
    if (!(problem.R > 0.0))
        throw std::runtime_error("bounds: sub-Gaussian scale R not declared; refusing to compute");
    return problem.R;
}

}  // namespace

double measured_gap(const Problem& problem, const Dataset& pool, const RunEnsemble& ens,
                    const DataView& test) {
    double gap = 0.0;
    for (const auto& run : ens.runs) {
        DataView own{&pool, ens.plan.train_splits[run.split_id]};
        gap += mean_loss(problem, run.W.back(), test) - mean_loss(problem, run.W.back(), own);
    }
    return gap / ens.k();
}

double raw_trajectory_variance(const RunEnsemble& ens, bool bessel_corrected) {
    int k = ens.k();
    if (k < 2) throw std::invalid_argument("raw_trajectory_variance: k < 2");
    int T = ens.runs[0].steps();
    std::size_t d = ens.W0.size();
    double total = 0.0;
    Vector mean(d);
    for (int t = 0; t < T; ++t) {
        mean.assign(d, 0.0);
        for (const auto& run : ens.runs) axpy(1.0, run.g[t], mean);
        for (double& v : mean) v /= k;
        double s = 0.0;
        for (const auto& run : ens.runs) s += sqnorm(sub(run.g[t], mean));
        total += s / (bessel_corrected ? (k - 1) : k);
    }
    return total;
}

double wang_trajectory_term(const RunEnsemble& ens, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("wang_trajectory_term: sigma <= 0");
    return raw_trajectory_variance(ens) / (sigma * sigma);
}

Vector leave_one_out_mean(const RunEnsemble& ens, int i) {
    int k = ens.k();
    if (k < 2) throw std::invalid_argument("leave_one_out_mean: k < 2");
    Vector mean(ens.W0.size(), 0.0);
    for (int j = 0; j < k; ++j) {
        if (j == i) continue;
        axpy(1.0, ens.runs[j].delta_w(), mean);
    }
    for (double& v : mean) v /= (k - 1);
    return mean;
}

double flatness_constant(double R, double n, double trace_h_flat) {
    if (trace_h_flat == 0.0) throw std::runtime_error("flatness_constant: degenerate C (zero trace)");
    return 1.5 * std::cbrt(R * R / n * std::fabs(trace_h_flat));
}

OmniscientPerturbation omniscient_delta_g(const Vector& delta_w, const Vector& loo_mean,
                                          const Vector& J, const LinearOperator& h_pen,
                                          double C, double lambda, double cg_tol,
                                          int cg_max_iter) {
    double two_lambda_c = 2.0 * lambda * C;
    if (!(two_lambda_c > 0.0)) throw std::invalid_argument("omniscient_delta_g: 2*lambda*C <= 0");
    Vector d = sub(delta_w, loo_mean);
    // rhs of (2 lambda C I + H_pen) x = 2 lambda C d + J, rescaled for the
    // (I + H_pen / 2 lambda C) system.
    Vector rhs(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) rhs[i] = d[i] + J[i] / two_lambda_c;

    LinearOperator shifted{h_pen.dim, [&h_pen, two_lambda_c](const Vector& v) {
                               Vector hv = h_pen(v);
                               Vector out(v.size());
                               for (std::size_t i = 0; i < v.size(); ++i)
                                   out[i] = v[i] + hv[i] / two_lambda_c;
                               return out;
                           }};
    CgResult res = cg_solve(shifted, rhs, cg_tol, cg_max_iter);

    OmniscientPerturbation pert;
    pert.C = C;
    pert.lambda = lambda;
    pert.cg_residual_ratio = res.residual_ratio;
    pert.cg_iters = res.iters;
    pert.delta_g = scaled(res.x, -1.0);
    return pert;
}

double penalty_direct(const Problem& problem, const Vector& w_T, const Vector& delta_g,
                      const DataView& own_split, const DataView& test) {
    Vector shifted = add(w_T, delta_g);
    double train_diff = mean_loss(problem, shifted, own_split) - mean_loss(problem, w_T, own_split);
    double test_diff = mean_loss(problem, shifted, test) - mean_loss(problem, w_T, test);
    return train_diff - test_diff;
}

double gaussian_penalty(const Problem& problem, const Vector& center, double variance,
                        const DataView& train, const DataView& test, PenaltyMode mode,
                        int mc_samples, RngStream& rng, double* stderr_out) {
    if (variance < 0.0) throw std::invalid_argument("gaussian_penalty: negative variance");
    const bool two_sided = test.size() > 0;
    if (stderr_out) *stderr_out = 0.0;
    if (variance == 0.0) return 0.0;

    if (mode == PenaltyMode::second_order) {
        HvpOperator ht{&problem, train, center, problem.has_hvp()};
        if (!two_sided) {
            TraceEstimate tr = hutchinson_trace(ht.op(), 64, rng);
            if (stderr_out) *stderr_out = 0.5 * variance * tr.stderr_;
            return 0.5 * variance * tr.value;
        }
        HvpOperator hs{&problem, test, center, problem.has_hvp()};
        TraceEstimate tr = delta_trace(ht.op(), hs.op(), 64, rng);
        if (stderr_out) *stderr_out = 0.5 * variance * tr.stderr_;
        return 0.5 * variance * tr.value;
    }

    if (mc_samples < 2) throw std::invalid_argument("gaussian_penalty: mc_samples < 2");
    double base_train = mean_loss(problem, center, train);
    double base_test = two_sided ? mean_loss(problem, center, test) : 0.0;
    double stddev = std::sqrt(variance);
    double sum = 0.0, sumsq = 0.0;
    for (int m = 0; m < mc_samples; ++m) {
        Vector xi = gaussian_sample(rng, center.size(), stddev);
        Vector shifted = add(center, xi);
        double v = mean_loss(problem, shifted, train) - base_train;
        if (two_sided) v -= mean_loss(problem, shifted, test) - base_test;
        sum += v;
        sumsq += v * v;
    }
    double mean = sum / mc_samples;
    if (stderr_out) {
        double var = (sumsq - mc_samples * mean * mean) / (mc_samples - 1);
        *stderr_out = std::sqrt(std::max(var, 0.0) / mc_samples);
    }
    return mean;
}

SigmaOpt optimal_sigma(double A, double B) {
    if (!(A > 0.0) || !(B > 0.0)) throw std::invalid_argument("optimal_sigma: A, B must be > 0");
    double sigma = std::cbrt(A / (2.0 * B));
    return {sigma, 3.0 * std::pow(0.5 * A, 2.0 / 3.0) * std::cbrt(B)};
}

namespace {

// Trace of the selected flatness surrogate at w for run i: either the
// empirical-minus-test difference (shared probes) or the empirical trace.
double flat_trace_at(const Problem& problem, const Dataset& pool, const RunEnsemble& ens,
                     int run, const Vector& w, PerturbationChoice::HSel sel,
                     const std::vector<int>& test_idx, const McConfig& mc,
                     std::uint64_t stream_base) {
    RngStream rng(mc.seed, stream_base + std::uint64_t(run));
    LinearOperator h_s = hessian_op(problem, pool, ens.plan.train_splits[run], w);
    if (sel == PerturbationChoice::HSel::emp_h)
        return hutchinson_trace(h_s, mc.trace_probes, rng).value;
    LinearOperator h_mu = hessian_op(problem, pool, test_idx, w);
    return delta_trace(h_s, h_mu, mc.trace_probes, rng).value;
}

BoundReport assemble(const std::string& name, const Problem& problem, const Dataset& pool,
                     const RunEnsemble& ens, double traj_exp, double flat_exp,
                     double penalty, double lambda, const std::string& flags) {
    double R = require_R(problem);
    double n = mean_split_size(ens);
    int T = ens.runs[0].steps();

    BoundReport rep;
    rep.name = name;
    rep.trajectory = traj_exp;
    rep.flatness = flat_exp;
    rep.penalty = penalty;
    rep.lambda = lambda;
    rep.R = R;
    rep.k = ens.k();
    rep.n = int(n + 0.5);
    rep.T = T;
    rep.flags = flags;

    double middle = 1.5 * std::cbrt(R * R / n * flat_exp * traj_exp);
    double A = std::sqrt(R * R / (n * double(T)) * traj_exp);
    double B = 0.5 * double(T) * flat_exp;
    if (A > 0.0 && B > 0.0) {
        rep.sigma_star = std::cbrt(A / (2.0 * B));
    } else {
        rep.sigma_star = 0.0;
        rep.zero_variance = true;
    }
    rep.total = penalty + middle;
    rep.measured_gap = measured_gap(problem, pool, ens, DataView{&pool, ens.plan.test});
    return rep;
}

std::string choice_flags(const PerturbationChoice& c) {
    std::string s = "hflat=";
    s += (c.h_flat == PerturbationChoice::HSel::delta_h) ? "dH" : "HS";
    s += ";hpen=";
    s += (c.h_pen == PerturbationChoice::HSel::delta_h) ? "dH" : "HS";
    s += ";J=";
    s += (c.j == PerturbationChoice::JSel::delta_grad) ? "dG" : "GS";
    return s;
}

}  // namespace

BoundReport flatness_bound(const Problem& problem, const Dataset& pool, const RunEnsemble& ens,
                           const PerturbationChoice& choice, const McConfig& mc,
                           bool force_zero_delta_g) {
    int k = ens.k();
    if (k < 2) throw std::invalid_argument("flatness_bound: k < 2");
    double R = require_R(problem);
    double n = mean_split_size(ens);
    const std::vector<int>& test_idx = ens.plan.test;
    const std::vector<int>& val_idx = ens.plan.val.empty() ? ens.plan.test : ens.plan.val;
    DataView test{&pool, test_idx};

    double C = 0.0;
    if (!force_zero_delta_g) {
        double tr = 0.0;
        for (int i = 0; i < k; ++i)
            tr += flat_trace_at(problem, pool, ens, i, ens.runs[i].W.back(), choice.h_flat,
                                test_idx, mc, kStreamTraceC);
        C = flatness_constant(R, n, tr / k);
    }

    double traj_exp = 0.0, flat_exp = 0.0, penalty = 0.0;
    for (int i = 0; i < k; ++i) {
        const Vector& w_T = ens.runs[i].W.back();
        Vector delta_w = ens.runs[i].delta_w();
        Vector loo = leave_one_out_mean(ens, i);
        Vector d = sub(delta_w, loo);

        Vector dg(d.size(), 0.0);
        if (!force_zero_delta_g) {
            Vector J = mean_grad(problem, w_T, DataView{&pool, ens.plan.train_splits[i]});
            if (choice.j == PerturbationChoice::JSel::delta_grad) {
                Vector jpop = mean_grad(problem, w_T, DataView{&pool, val_idx});
                J = sub(J, jpop);
            }
            LinearOperator h_pen;
            if (choice.h_pen == PerturbationChoice::HSel::emp_h) {
                h_pen = hessian_op(problem, pool, ens.plan.train_splits[i], w_T);
            } else {
                LinearOperator hs = hessian_op(problem, pool, ens.plan.train_splits[i], w_T);
                LinearOperator hv = hessian_op(problem, pool, val_idx, w_T);
                h_pen = {hs.dim, [hs, hv](const Vector& v) { return sub(hs(v), hv(v)); }};
            }
            OmniscientPerturbation pert = omniscient_delta_g(delta_w, loo, J, h_pen, C,
                                                             choice.lambda, mc.cg_tol,
                                                             mc.cg_max_iter);
            dg = std::move(pert.delta_g);
        }

        traj_exp += sqnorm(add(d, dg));
        Vector w_shift = add(w_T, dg);
        flat_exp += std::fabs(flat_trace_at(problem, pool, ens, i, w_shift, choice.h_flat,
                                            test_idx, mc, kStreamTraceFlat));
        penalty += penalty_direct(problem, w_T, dg, DataView{&pool, ens.plan.train_splits[i]},
                                  test);
    }
    traj_exp /= k;
    flat_exp /= k;
    penalty /= k;

    std::string name = force_zero_delta_g ? "flatness_zero_dg" : "flatness";
    return assemble(name, problem, pool, ens, traj_exp, flat_exp, penalty, choice.lambda,
                    choice_flags(choice));
}

BoundReport neu_isotropic_bound(const Problem& problem, const Dataset& pool,
                                const RunEnsemble& ens, const McConfig& mc) {
    int k = ens.k();
    if (k < 2) throw std::invalid_argument("neu_isotropic_bound: k < 2");

    double traj_exp = 0.0, flat_exp = 0.0;
    for (int i = 0; i < k; ++i) {
        Vector d = sub(ens.runs[i].delta_w(), leave_one_out_mean(ens, i));
        traj_exp += sqnorm(d);
        flat_exp += std::fabs(flat_trace_at(problem, pool, ens, i, ens.runs[i].W.back(),
                                            PerturbationChoice::HSel::delta_h, ens.plan.test,
                                            mc, kStreamTraceFlat));
    }
    traj_exp /= k;
    flat_exp /= k;
    return assemble("neu_isotropic", problem, pool, ens, traj_exp, flat_exp, 0.0, 0.0,
                    "dg=0");
}

BoundReport wang_bound(const Problem& problem, const Dataset& pool, const RunEnsemble& ens,
                       const McConfig& mc, bool use_population_hessian) {
    int k = ens.k();
    if (k < 2) throw std::invalid_argument("wang_bound: k < 2");
    double R = require_R(problem);
    double n = mean_split_size(ens);
    int T = ens.runs[0].steps();

    double raw = raw_trajectory_variance(ens);

    double tr = 0.0;
    for (int i = 0; i < k; ++i)
        tr += flat_trace_at(problem, pool, ens, i, ens.runs[i].W.back(),
                            use_population_hessian ? PerturbationChoice::HSel::delta_h
                                                   : PerturbationChoice::HSel::emp_h,
                            ens.plan.val.empty() ? ens.plan.test : ens.plan.val, mc,
                            kStreamTraceWang);
    tr = std::fabs(tr / k);

    BoundReport rep;
    rep.name = "wang";
    rep.trajectory = raw;
    rep.flatness = tr;
    rep.penalty = 0.0;
    rep.lambda = 0.0;
    rep.R = R;
    rep.k = k;
    rep.n = int(n + 0.5);
    rep.T = T;
    rep.flags = use_population_hessian ? "tr=dH" : "tr=HS";
    rep.measured_gap = measured_gap(problem, pool, ens, DataView{&pool, ens.plan.test});

    double A = std::sqrt(R * R / n * raw);
    double B = 0.5 * double(T) * tr;
    if (A > 0.0 && B > 0.0) {
        SigmaOpt opt = optimal_sigma(A, B);
        rep.sigma_star = opt.sigma_star;
        rep.total = opt.value;
    } else {
        rep.sigma_star = 0.0;
        rep.total = 0.0;
        rep.zero_variance = true;
    }
    return rep;
}

}  // namespace genbound
