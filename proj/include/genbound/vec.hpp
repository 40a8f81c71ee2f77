#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace genbound {

// Flattened parameter-space vector. All reductions over entries use a fixed
// left-to-right order so a fixed seed gives bit-identical results on one
// platform.
using Vector = std::vector<double>;

inline double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dim mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double sqnorm(const Vector& a) { return dot(a, a); }
inline double norm(const Vector& a) { return std::sqrt(sqnorm(a)); }

// y += a * x
inline void axpy(double a, const Vector& x, Vector& y) {
    if (x.size() != y.size()) throw std::invalid_argument("axpy: dim mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline Vector scaled(const Vector& x, double a) {
    Vector y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i];
    return y;
}

inline Vector sub(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("sub: dim mismatch");
    Vector y(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) y[i] = a[i] - b[i];
    return y;
}

inline Vector add(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("add: dim mismatch");
    Vector y(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) y[i] = a[i] + b[i];
    return y;
}

inline bool all_finite(const Vector& a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

inline void require_finite(const Vector& a, const std::string& what) {
    if (!all_finite(a)) throw std::runtime_error(what + ": non-finite entries");
}

// Matrix-free symmetric operator: only a dimension and an apply.
struct LinearOperator {
    std::size_t dim = 0;
    std::function<Vector(const Vector&)> apply;

    Vector operator()(const Vector& v) const {
        if (v.size() != dim) throw std::invalid_argument("LinearOperator: dim mismatch");
        return apply(v);
    }
};

inline LinearOperator identity_op(std::size_t d) {
    return {d, [](const Vector& v) { return v; }};
}

inline LinearOperator diag_op(Vector diag) {
    auto d = diag.size();
    return {d, [diag = std::move(diag)](const Vector& v) {
                Vector y(v.size());
                for (std::size_t i = 0; i < v.size(); ++i) y[i] = diag[i] * v[i];
                return y;
            }};
}

inline LinearOperator zero_op(std::size_t d) {
    return {d, [](const Vector& v) { return Vector(v.size(), 0.0); }};
}

// x^T (A x); the |x|_A^2 weighted square norm.
inline double weighted_sqnorm(const Vector& x, const LinearOperator& op) {
    if (x.size() != op.dim) throw std::invalid_argument("weighted_sqnorm: dim mismatch");
    return dot(x, op(x));
}

}  // namespace genbound
