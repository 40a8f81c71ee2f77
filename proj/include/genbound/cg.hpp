#pragma once

#include "genbound/vec.hpp"

namespace genbound {

struct CgResult {
    Vector x;
    double residual_ratio = 0.0;  // |op(x) - rhs|^2 / |rhs|^2
    int iters = 0;
};

// Conjugate gradient on a symmetric positive definite operator. The stopping
// rule follows squared-residual semantics: stop once |op(x) - rhs|^2 <=
// rel_tol * |rhs|^2, or when max_iter is reached (best iterate returned with
// the reported residual ratio). Defaults are rel_tol = 0.01, max_iter = 20.
CgResult cg_solve(const LinearOperator& op, const Vector& rhs, double rel_tol = 0.01,
                  int max_iter = 20);

}  // namespace genbound
