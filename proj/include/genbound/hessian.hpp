#pragma once

#include "genbound/cg.hpp"
#include "genbound/problem.hpp"
#include "genbound/rng.hpp"

namespace genbound {

// Matrix-free Hessian of the mean loss over a data view at weight w.
// Exact mode requires the problem's per-sample HVP; finite-difference mode
// uses a central difference of the mean gradient with step 1e-4 * (1 + |w|).
struct HvpOperator {
    const Problem* problem = nullptr;
    DataView view;
    Vector w;
    bool exact = true;

    std::size_t dim() const { return std::size_t(problem->dim); }
    LinearOperator op() const;
};

Vector hvp(const HvpOperator& op, const Vector& v);

struct TraceEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    int probes = 0;
};

enum class ProbeDist { rademacher, gaussian };

// Unbiased stochastic trace: mean of z^T (op z) over i.i.d. probes.
TraceEstimate hutchinson_trace(const LinearOperator& op, int probes, RngStream& rng,
                               ProbeDist dist = ProbeDist::rademacher);

// CG solve of (I + H_pen / (2 lambda C)) v = u under the squared-residual
// stopping rule (1% of |u|^2, max 20 iterations by default).
Vector ihvp_shifted(const LinearOperator& h_pen, const Vector& u, double two_lambda_c,
                    double rel_tol = 0.01, int max_iter = 20);

// Dense Hessian oracle via columnwise HVPs, symmetrized; d <= 200 enforced.
std::vector<Vector> exact_hessian(const Problem& problem, const DataView& view, const Vector& w);

// tr(H_a - H_b) with probes shared across both operators (the shared draw
// makes identical operators cancel exactly).
TraceEstimate delta_trace(const LinearOperator& h_a, const LinearOperator& h_b, int probes,
                          RngStream& rng, ProbeDist dist = ProbeDist::rademacher);

}  // namespace genbound
