#pragma once

#include <functional>
#include <string>

#include "genbound/dataset.hpp"
#include "genbound/rng.hpp"
#include "genbound/vec.hpp"

namespace genbound {

// Loss landscape definition over a dataset: per-sample loss and gradient,
// optional exact per-sample Hessian-vector product, optional projection onto
// the feasible domain, and the constants the bounds need. Constants < 0 mean
// "not declared"; bound computations refuse to run without R.
struct Problem {
    int dim = 0;

    std::function<double(const Vector& w, const Dataset& ds, int i)> loss;
    std::function<void(const Vector& w, const Dataset& ds, int i, Vector& out)> grad;
    // Optional exact per-sample HVP (out = H_i(w) v); empty -> finite differences.
    std::function<void(const Vector& w, const Dataset& ds, int i, const Vector& v, Vector& out)> hvp;

    double R = -1.0;     // sub-Gaussian scale
    double L = -1.0;     // Lipschitz constant
    double D = -1.0;     // domain diameter
    double beta = -1.0;  // smoothness
    double cap = -1.0;   // loss cap (capped losses only)

    std::function<Vector(const Vector&)> project;              // empty -> unconstrained
    std::function<void(RngStream&, Dataset&, int)> resample;   // redraw sample i in place

    bool has_hvp() const { return bool(hvp); }
    bool has_projection() const { return bool(project); }
};

// min(CE(logits, label), 12 ln c); nonnegative, monotone in the margin.
double capped_cross_entropy(const Vector& logits, int label, int num_classes);

// Mean loss / mean gradient over a view, fixed left-to-right reduction.
double mean_loss(const Problem& p, const Vector& w, const DataView& view);
Vector mean_grad(const Problem& p, const Vector& w, const DataView& view);
// Samplewise clipped mean gradient: each per-sample gradient clipped to norm
// <= clip before averaging; empty view yields the zero vector.
Vector clipped_mean_grad(const Problem& p, const Vector& w, const DataView& view, double clip);

// Multiclass softmax linear model with capped cross entropy.
// Weights: row-major [classes x (d_in + 1)], last column is the bias.
Problem make_softmax_linear(int d_in, int classes);

// 2-layer MLP (tanh or relu) with capped cross entropy and hand-derived
// backprop; HVPs come from finite differences.
Problem make_mlp(int d_in, int hidden, int classes, const std::string& activation = "tanh");

// Quadratic fixture 1/2 w^T diag(a) w shared by every sample (test oracle).
Problem make_diag_quadratic(Vector diag);

// Per-sample quadratic 1/2 (scale_i) |w|^2, scale taken from targets (1-D and
// up); used for analytic trace-difference fixtures.
Problem make_scaled_quadratic(int dim);

// Least squares 1/2 (w . x - y)^2 with targets as y; convex and smooth.
Problem make_least_squares(int d_in);

// CLB instance: loss |w - z|^2 on the ball of radius `radius`, samples z on
// the sphere of the same radius, radial-clip projection, L = 4 * radius,
// D = 2 * radius.
Problem clb_quadratic_problem(int d, double radius = 1.0);

}  // namespace genbound
