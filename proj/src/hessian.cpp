#include "genbound/hessian.hpp"

#include <cmath>
#include <stdexcept>

namespace genbound {

Vector hvp(const HvpOperator& op, const Vector& v) {
    if (v.size() != op.dim()) throw std::invalid_argument("hvp: dim mismatch");
    double nv = norm(v);
    if (nv == 0.0) return Vector(v.size(), 0.0);

    if (op.exact) {
        if (!op.problem->has_hvp()) throw std::runtime_error("hvp: problem has no exact HVP");
        Vector acc(v.size(), 0.0), out(v.size(), 0.0);
        if (op.view.size() == 0) return acc;
        for (int i : op.view.idx) {
            op.problem->hvp(op.w, *op.view.ds, i, v, out);
            axpy(1.0, out, acc);
        }
        for (double& x : acc) x /= op.view.size();
        return acc;
    }

    // Central difference along the unit direction, rescaled by |v|.
    const double h = 1e-4 * (1.0 + norm(op.w));
    Vector unit = scaled(v, 1.0 / nv);
    Vector wp = op.w, wm = op.w;
    axpy(h, unit, wp);
    axpy(-h, unit, wm);
    Vector gp = mean_grad(*op.problem, wp, op.view);
    Vector gm = mean_grad(*op.problem, wm, op.view);
    Vector out = sub(gp, gm);
    for (double& x : out) x *= nv / (2.0 * h);
    return out;
}

LinearOperator HvpOperator::op() const {
    HvpOperator self = *this;
    return {dim(), [self](const Vector& v) { return hvp(self, v); }};
}

TraceEstimate hutchinson_trace(const LinearOperator& op, int probes, RngStream& rng,
                               ProbeDist dist) {
    if (probes < 2) throw std::invalid_argument("hutchinson_trace: probes < 2");
    double sum = 0.0, sumsq = 0.0;
    for (int p = 0; p < probes; ++p) {
        Vector z = (dist == ProbeDist::rademacher) ? rademacher_sample(rng, op.dim)
                                                   : gaussian_sample(rng, op.dim, 1.0);
        double q = dot(z, op(z));
        sum += q;
        sumsq += q * q;
    }
    double mean = sum / probes;
    double var = (sumsq - probes * mean * mean) / (probes - 1);
    if (var < 0.0) var = 0.0;
    return {mean, std::sqrt(var / probes), probes};
}

Vector ihvp_shifted(const LinearOperator& h_pen, const Vector& u, double two_lambda_c,
                    double rel_tol, int max_iter) {
    if (!(two_lambda_c > 0.0)) throw std::invalid_argument("ihvp_shifted: 2*lambda*C <= 0");
    LinearOperator shifted{h_pen.dim, [&h_pen, two_lambda_c](const Vector& v) {
                               Vector hv = h_pen(v);
                               Vector out(v.size());
                               for (std::size_t i = 0; i < v.size(); ++i)
                                   out[i] = v[i] + hv[i] / two_lambda_c;
                               return out;
                           }};
    CgResult res = cg_solve(shifted, u, rel_tol, max_iter);
    return res.x;
}

std::vector<Vector> exact_hessian(const Problem& problem, const DataView& view, const Vector& w) {
    int d = problem.dim;
    if (d > 200) throw std::invalid_argument("exact_hessian: d > 200");
    HvpOperator op{&problem, view, w, problem.has_hvp()};
    std::vector<Vector> H(d);
    for (int j = 0; j < d; ++j) {
        Vector e(d, 0.0);
        e[j] = 1.0;
        H[j] = hvp(op, e);
    }
    // Symmetrize (A + A^T) / 2.
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            double m = 0.5 * (H[i][j] + H[j][i]);
            H[i][j] = m;
            H[j][i] = m;
        }
    return H;
}

TraceEstimate delta_trace(const LinearOperator& h_a, const LinearOperator& h_b, int probes,
                          RngStream& rng, ProbeDist dist) {
    if (probes < 2) throw std::invalid_argument("delta_trace: probes < 2");
    if (h_a.dim != h_b.dim) throw std::invalid_argument("delta_trace: dim mismatch");
    double sum = 0.0, sumsq = 0.0;
    for (int p = 0; p < probes; ++p) {
        Vector z = (dist == ProbeDist::rademacher) ? rademacher_sample(rng, h_a.dim)
                                                   : gaussian_sample(rng, h_a.dim, 1.0);
        double q = dot(z, h_a(z)) - dot(z, h_b(z));
        sum += q;
        sumsq += q * q;
    }
    double mean = sum / probes;
    double var = (sumsq - probes * mean * mean) / (probes - 1);
    if (var < 0.0) var = 0.0;
    return {mean, std::sqrt(var / probes), probes};
}

}  // namespace genbound
