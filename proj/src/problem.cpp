#include "genbound/problem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace genbound {

double capped_cross_entropy(const Vector& logits, int label, int num_classes) {
    if (num_classes < 2) throw std::invalid_argument("capped_cross_entropy: num_classes < 2");
    if (label < 0 || label >= num_classes) throw std::out_of_range("capped_cross_entropy: label");
    double mx = logits[0];
    for (int c = 1; c < num_classes; ++c) mx = std::max(mx, logits[c]);
    double lse = 0.0;
    for (int c = 0; c < num_classes; ++c) lse += std::exp(logits[c] - mx);
    double ce = std::log(lse) + mx - logits[label];
    double cap = 12.0 * std::log(double(num_classes));
    return std::min(std::max(ce, 0.0), cap);
}

double mean_loss(const Problem& p, const Vector& w, const DataView& view) {
    if (view.size() == 0) return 0.0;
    double s = 0.0;
    for (int i : view.idx) s += p.loss(w, *view.ds, i);
    return s / view.size();
}

Vector mean_grad(const Problem& p, const Vector& w, const DataView& view) {
    Vector acc(p.dim, 0.0), g(p.dim, 0.0);
    if (view.size() == 0) return acc;
    for (int i : view.idx) {
        p.grad(w, *view.ds, i, g);
        axpy(1.0, g, acc);
    }
    for (double& v : acc) v /= view.size();
    return acc;
}

Vector clipped_mean_grad(const Problem& p, const Vector& w, const DataView& view, double clip) {
    Vector acc(p.dim, 0.0), g(p.dim, 0.0);
    if (view.size() == 0) return acc;
    for (int i : view.idx) {
        p.grad(w, *view.ds, i, g);
        double nz = norm(g);
        double s = (nz > clip && nz > 0.0) ? clip / nz : 1.0;
        axpy(s, g, acc);
    }
    for (double& v : acc) v /= view.size();
    return acc;
}

namespace {

// Softmax probabilities into `p`, returning the (uncapped) CE for `label`.
double softmax_ce(const double* s, int c, int label, std::vector<double>& p) {
    double mx = s[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, s[j]);
    double lse = 0.0;
    p.resize(c);
    for (int j = 0; j < c; ++j) {
        p[j] = std::exp(s[j] - mx);
        lse += p[j];
    }
    for (int j = 0; j < c; ++j) p[j] /= lse;
    return std::log(lse) + mx - s[label];
}

}  // namespace

Problem make_softmax_linear(int d_in, int classes) {
    Problem prob;
    const int cols = d_in + 1;
    prob.dim = classes * cols;
    prob.cap = 12.0 * std::log(double(classes));
    prob.R = prob.cap / 2.0;

    auto logits = [d_in, classes, cols](const Vector& w, const Dataset& ds, int i,
                                        std::vector<double>& s) {
        const double* x = ds.row(i);
        s.assign(classes, 0.0);
        for (int c = 0; c < classes; ++c) {
            const double* wc = w.data() + std::size_t(c) * cols;
            double a = wc[d_in];
            for (int j = 0; j < d_in; ++j) a += wc[j] * x[j];
            s[c] = a;
        }
    };

    prob.loss = [logits, classes](const Vector& w, const Dataset& ds, int i) {
        std::vector<double> s;
        logits(w, ds, i, s);
        return capped_cross_entropy(s, ds.labels[i], classes);
    };

    double cap = prob.cap;
    prob.grad = [logits, classes, cols, d_in, cap](const Vector& w, const Dataset& ds, int i,
                                                   Vector& out) {
        std::vector<double> s, p;
        logits(w, ds, i, s);
        int y = ds.labels[i];
        double ce = softmax_ce(s.data(), classes, y, p);
        out.assign(w.size(), 0.0);
        if (ce >= cap) return;  // flat past the cap
        const double* x = ds.row(i);
        for (int c = 0; c < classes; ++c) {
            double coef = p[c] - (c == y ? 1.0 : 0.0);
            double* oc = out.data() + std::size_t(c) * cols;
            for (int j = 0; j < d_in; ++j) oc[j] = coef * x[j];
            oc[d_in] = coef;
        }
    };

    prob.hvp = [logits, classes, cols, d_in, cap](const Vector& w, const Dataset& ds, int i,
                                                  const Vector& v, Vector& out) {
        std::vector<double> s, p;
        logits(w, ds, i, s);
        int y = ds.labels[i];
        double ce = softmax_ce(s.data(), classes, y, p);
        out.assign(w.size(), 0.0);
        if (ce >= cap) return;
        const double* x = ds.row(i);
        // u_c = v_c . [x;1]; q = (diag(p) - p p^T) u; out_c = q_c [x;1]
        std::vector<double> u(classes, 0.0);
        for (int c = 0; c < classes; ++c) {
            const double* vc = v.data() + std::size_t(c) * cols;
            double a = vc[d_in];
            for (int j = 0; j < d_in; ++j) a += vc[j] * x[j];
            u[c] = a;
        }
        double pu = 0.0;
        for (int c = 0; c < classes; ++c) pu += p[c] * u[c];
        for (int c = 0; c < classes; ++c) {
            double q = p[c] * (u[c] - pu);
            double* oc = out.data() + std::size_t(c) * cols;
            for (int j = 0; j < d_in; ++j) oc[j] = q * x[j];
            oc[d_in] = q;
        }
    };
    return prob;
}

Problem make_mlp(int d_in, int hidden, int classes, const std::string& activation) {
    if (activation != "tanh" && activation != "relu")
        throw std::invalid_argument("make_mlp: activation must be tanh or relu");
    const bool use_tanh = (activation == "tanh");
    Problem prob;
    // Layout: W1 [hidden x d_in], b1 [hidden], W2 [classes x hidden], b2 [classes].
    const int off_b1 = hidden * d_in;
    const int off_w2 = off_b1 + hidden;
    const int off_b2 = off_w2 + classes * hidden;
    prob.dim = off_b2 + classes;
    prob.cap = 12.0 * std::log(double(classes));
    prob.R = prob.cap / 2.0;

    auto forward = [=](const Vector& w, const Dataset& ds, int i, std::vector<double>& h,
                       std::vector<double>& pre, std::vector<double>& s) {
        const double* x = ds.row(i);
        pre.assign(hidden, 0.0);
        h.assign(hidden, 0.0);
        for (int a = 0; a < hidden; ++a) {
            const double* w1 = w.data() + std::size_t(a) * d_in;
            double z = w[off_b1 + a];
            for (int j = 0; j < d_in; ++j) z += w1[j] * x[j];
            pre[a] = z;
            h[a] = use_tanh ? std::tanh(z) : std::max(z, 0.0);
        }
        s.assign(classes, 0.0);
        for (int c = 0; c < classes; ++c) {
            const double* w2 = w.data() + off_w2 + std::size_t(c) * hidden;
            double z = w[off_b2 + c];
            for (int a = 0; a < hidden; ++a) z += w2[a] * h[a];
            s[c] = z;
        }
    };

    prob.loss = [=](const Vector& w, const Dataset& ds, int i) {
        std::vector<double> h, pre, s;
        forward(w, ds, i, h, pre, s);
        return capped_cross_entropy(s, ds.labels[i], classes);
    };

    double cap = prob.cap;
    prob.grad = [=](const Vector& w, const Dataset& ds, int i, Vector& out) {
        std::vector<double> h, pre, s, p;
        forward(w, ds, i, h, pre, s);
        int y = ds.labels[i];
        double ce = softmax_ce(s.data(), classes, y, p);
        out.assign(w.size(), 0.0);
        if (ce >= cap) return;
        const double* x = ds.row(i);
        // Output layer.
        std::vector<double> ds_out(classes);
        for (int c = 0; c < classes; ++c) ds_out[c] = p[c] - (c == y ? 1.0 : 0.0);
        for (int c = 0; c < classes; ++c) {
            double* g2 = out.data() + off_w2 + std::size_t(c) * hidden;
            for (int a = 0; a < hidden; ++a) g2[a] = ds_out[c] * h[a];
            out[off_b2 + c] = ds_out[c];
        }
        // Hidden layer.
        for (int a = 0; a < hidden; ++a) {
            double back = 0.0;
            for (int c = 0; c < classes; ++c) back += ds_out[c] * w[off_w2 + std::size_t(c) * hidden + a];
            double act_d = use_tanh ? 1.0 - h[a] * h[a] : (pre[a] > 0.0 ? 1.0 : 0.0);
            double delta = back * act_d;
            double* g1 = out.data() + std::size_t(a) * d_in;
            for (int j = 0; j < d_in; ++j) g1[j] = delta * x[j];
            out[off_b1 + a] = delta;
        }
    };
    return prob;
}

Problem make_diag_quadratic(Vector diag) {
    Problem prob;
    prob.dim = int(diag.size());
    prob.loss = [diag](const Vector& w, const Dataset&, int) {
        double s = 0.0;
        for (std::size_t j = 0; j < diag.size(); ++j) s += 0.5 * diag[j] * w[j] * w[j];
        return s;
    };
    prob.grad = [diag](const Vector& w, const Dataset&, int, Vector& out) {
        out.resize(w.size());
        for (std::size_t j = 0; j < diag.size(); ++j) out[j] = diag[j] * w[j];
    };
    prob.hvp = [diag](const Vector&, const Dataset&, int, const Vector& v, Vector& out) {
        out.resize(v.size());
        for (std::size_t j = 0; j < diag.size(); ++j) out[j] = diag[j] * v[j];
    };
    return prob;
}

Problem make_scaled_quadratic(int dim) {
    Problem prob;
    prob.dim = dim;
    prob.loss = [](const Vector& w, const Dataset& ds, int i) {
        return 0.5 * ds.targets[i] * sqnorm(w);
    };
    prob.grad = [](const Vector& w, const Dataset& ds, int i, Vector& out) {
        out = scaled(w, ds.targets[i]);
    };
    prob.hvp = [](const Vector&, const Dataset& ds, int i, const Vector& v, Vector& out) {
        out = scaled(v, ds.targets[i]);
    };
    return prob;
}

Problem make_least_squares(int d_in) {
    Problem prob;
    prob.dim = d_in;
    prob.loss = [d_in](const Vector& w, const Dataset& ds, int i) {
        const double* x = ds.row(i);
        double r = -ds.targets[i];
        for (int j = 0; j < d_in; ++j) r += w[j] * x[j];
        return 0.5 * r * r;
    };
    prob.grad = [d_in](const Vector& w, const Dataset& ds, int i, Vector& out) {
        const double* x = ds.row(i);
        double r = -ds.targets[i];
        for (int j = 0; j < d_in; ++j) r += w[j] * x[j];
        out.resize(w.size());
        for (int j = 0; j < d_in; ++j) out[j] = r * x[j];
    };
    prob.hvp = [d_in](const Vector&, const Dataset& ds, int i, const Vector& v, Vector& out) {
        const double* x = ds.row(i);
        double xv = 0.0;
        for (int j = 0; j < d_in; ++j) xv += x[j] * v[j];
        out.resize(v.size());
        for (int j = 0; j < d_in; ++j) out[j] = xv * x[j];
    };
    return prob;
}

Problem clb_quadratic_problem(int d, double radius) {
    if (d < 1) throw std::invalid_argument("clb_quadratic_problem: d < 1");
    Problem prob;
    prob.dim = d;
    prob.L = 4.0 * radius;
    prob.D = 2.0 * radius;
    prob.loss = [d](const Vector& w, const Dataset& ds, int i) {
        const double* z = ds.row(i);
        double s = 0.0;
        for (int j = 0; j < d; ++j) {
            double r = w[j] - z[j];
            s += r * r;
        }
        return s;
    };
    prob.grad = [d](const Vector& w, const Dataset& ds, int i, Vector& out) {
        const double* z = ds.row(i);
        out.resize(w.size());
        for (int j = 0; j < d; ++j) out[j] = 2.0 * (w[j] - z[j]);
    };
    prob.hvp = [](const Vector&, const Dataset&, int, const Vector& v, Vector& out) {
        out = scaled(v, 2.0);
    };
    prob.project = [radius](const Vector& w) {
        double nw = norm(w);
        if (nw <= radius) return w;
        return scaled(w, radius / nw);
    };
    prob.resample = [d, radius](RngStream& rng, Dataset& ds, int i) {
        // Scaled sign vectors: |z| == radius.
        double* z = ds.row(i);
        double s = radius / std::sqrt(double(d));
        for (int j = 0; j < d; ++j) z[j] = (rng.next_u64() & 1ULL) ? s : -s;
    };
    return prob;
}

}  // namespace genbound
