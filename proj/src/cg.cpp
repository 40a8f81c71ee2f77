#include "genbound/cg.hpp"

#include <cmath>
#include <stdexcept>

namespace genbound {

CgResult cg_solve(const LinearOperator& op, const Vector& rhs, double rel_tol, int max_iter) {
    if (rhs.size() != op.dim) throw std::invalid_argument("cg_solve: dim mismatch");
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw std::invalid_argument("cg_solve: rel_tol out of (0,1)");
    if (!all_finite(rhs)) throw std::runtime_error("cg_solve: numerical breakdown (non-finite rhs)");

    const double rhs_sq = sqnorm(rhs);
    Vector x(rhs.size(), 0.0);
    if (rhs_sq == 0.0) return {x, 0.0, 0};

    Vector r = rhs;  // residual for x = 0
    Vector p = r;
    double rr = rhs_sq;
    int it = 0;
    while (it < max_iter && rr > rel_tol * rhs_sq) {
        Vector ap = op(p);
        double pap = dot(p, ap);
        if (!std::isfinite(pap) || pap == 0.0) throw std::runtime_error("cg_solve: numerical breakdown");
        double alpha = rr / pap;
        axpy(alpha, p, x);
        axpy(-alpha, ap, r);
        double rr_new = dot(r, r);
        if (!std::isfinite(rr_new)) throw std::runtime_error("cg_solve: numerical breakdown");
        double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
        ++it;
    }
    return {x, rr / rhs_sq, it};
}

}  // namespace genbound
