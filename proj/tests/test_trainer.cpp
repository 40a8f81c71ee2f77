#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>

#include "genbound/trainer.hpp"

using namespace genbound;

namespace {

// loss independent of the sample: 1/2 |w|^2
Problem quadratic_problem(int dim) {
    Problem p;
    p.dim = dim;
    p.loss = [](const Vector& w, const Dataset&, int) { return 0.5 * sqnorm(w); };
    p.grad = [](const Vector& w, const Dataset&, int, Vector& out) { out = w; };
    p.R = 1.0;
    return p;
}

// constant gradient c (linear loss), for the momentum closed form
Problem linear_problem(Vector c) {
    Problem p;
    p.dim = int(c.size());
    p.loss = [c](const Vector& w, const Dataset&, int) { return dot(w, c); };
    p.grad = [c](const Vector&, const Dataset&, int, Vector& out) { out = c; };
    p.R = 1.0;
    return p;
}

Dataset dummy_data(int n) {
    Dataset ds;
    ds.n = n;
    ds.d_in = 1;
    ds.inputs.assign(std::size_t(n), 0.0);
    return ds;
}

}  // namespace

TEST_CASE("hand gradient step") {
    Problem p = quadratic_problem(1);
    Dataset ds = dummy_data(4);
    SGDConfig cfg{0.5, 4, 1, 0.9, false, 1};
    auto run = run_sgd(p, ds, {0, 1, 2, 3}, cfg, {2.0});
    CHECK(run.g[0][0] == doctest::Approx(1.0));
    CHECK(run.W[1][0] == doctest::Approx(1.0));
}

TEST_CASE("momentum geometric series") {
    Vector c = {3.0, -2.0};
    Problem p = linear_problem(c);
    Dataset ds = dummy_data(5);
    double eta = 0.1;
    SGDConfig cfg{eta, 5, 5, 0.9, false, 2};
    auto run = run_sgd(p, ds, {0, 1, 2, 3, 4}, cfg, Vector(2, 0.0));
    // momentum m_t = 0.9 m_{t-1} + g: update_t = eta * g * (1 - 0.9^t) / 0.1
    for (int t = 1; t <= 5; ++t) {
        double factor = eta * (1.0 - std::pow(0.9, t)) / 0.1;
        for (int j = 0; j < 2; ++j)
            CHECK(run.g[t - 1][j] == doctest::Approx(factor * c[j]).epsilon(1e-12));
    }
}

TEST_CASE("determinism and reconstruction") {
    Dataset pool = synth_gaussian_mixture(5, 40, 3, 2, 2.0);
    Problem p = make_softmax_linear(3, 2);
    std::vector<int> split = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    SGDConfig cfg{0.1, 3, 20, 0.9, false, 99};
    Vector w0(std::size_t(p.dim), 0.01);
    auto a = run_sgd(p, pool, split, cfg, w0);
    auto b = run_sgd(p, pool, split, cfg, w0);
    for (std::size_t t = 0; t < a.W.size(); ++t) CHECK(a.W[t] == b.W[t]);
    CHECK(a.batches == b.batches);

    // bitwise reconstruction W_t = W_{t-1} - g_t
    for (int t = 0; t < a.steps(); ++t) {
        for (std::size_t j = 0; j < w0.size(); ++j)
            CHECK(a.W[t][j] - a.g[t][j] == a.W[t + 1][j]);
    }
    // batch indices come from the split, no repeats within a step
    for (const auto& batch : a.batches) {
        CHECK(batch.size() == 3);
        for (std::size_t x = 0; x < batch.size(); ++x) {
            CHECK(batch[x] <= 9);
            for (std::size_t y = x + 1; y < batch.size(); ++y) CHECK(batch[x] != batch[y]);
        }
    }
}

TEST_CASE("sgd converges on a strongly convex quadratic") {
    Problem p = quadratic_problem(3);
    Dataset ds = dummy_data(8);
    SGDConfig cfg{0.2, 8, 200, 0.9, false, 7};
    auto run = run_sgd(p, ds, {0, 1, 2, 3, 4, 5, 6, 7}, cfg, {2.0, -1.0, 0.5});
    CHECK(norm(run.W.back()) < 1e-3);
    // distance decays after a burn-in; momentum rings, so compare window maxima
    auto window_max = [&](int lo, int hi) {
        double mx = 0.0;
        for (int t = lo; t < hi; ++t) mx = std::max(mx, norm(run.W[t]));
        return mx;
    };
    CHECK(window_max(150, 201) < window_max(50, 100));
    CHECK(window_max(100, 150) < window_max(20, 60));
}

TEST_CASE("projected gd on the clb quadratic") {
    Problem p = clb_quadratic_problem(2);
    Dataset ds;
    ds.n = 1;
    ds.d_in = 2;
    ds.inputs = {0.6, 0.8};  // unit norm z
    auto run = run_projected_gd(p, ds, {0}, 0.25, 1, Vector(2, 0.0));
    CHECK(run.W[1][0] == doctest::Approx(0.3));
    CHECK(run.W[1][1] == doctest::Approx(0.4));

    auto longer = run_projected_gd(p, ds, {0}, 0.9, 30, Vector(2, 0.0));
    for (const auto& w : longer.W) CHECK(norm(w) <= 1.0 + 1e-12);

    // path-length Lipschitz bound for small eta
    double eta = 1e-3;
    auto tiny = run_projected_gd(p, ds, {0}, eta, 50, Vector(2, 0.0));
    CHECK(norm(sub(tiny.W.back(), tiny.W.front())) <= eta * 50 * 2.0 * p.L + 1e-12);
}

TEST_CASE("ensemble structure") {
    Dataset pool = synth_gaussian_mixture(8, 120, 3, 2, 2.0);
    Problem p = make_softmax_linear(3, 2);
    SplitPlan plan = partition(pool, 6, 0.2, 0.1, 11);
    SGDConfig cfg{0.1, 4, 10, 0.9, false, 17};
    RunEnsemble ens = run_ensemble(p, pool, plan, cfg, 17);
    CHECK(ens.k() == 6);
    for (const auto& run : ens.runs) CHECK(run.W.front() == ens.W0);

    // disjoint batch supports across runs (splits are disjoint)
    std::vector<int> owner(pool.n, -1);
    for (int s = 0; s < 6; ++s)
        for (int i : plan.train_splits[s]) owner[i] = s;
    for (int s = 0; s < 6; ++s)
        for (const auto& batch : ens.runs[s].batches)
            for (int i : batch) CHECK(owner[i] == s);

    // per-split streams are isolated: rerunning one split alone reproduces it
    auto solo = run_sgd(p, pool, plan.train_splits[3], {0.1, 4, 10, 0.9, false,
                        ens.runs[3].seed}, ens.W0, 3);
    for (std::size_t t = 0; t < solo.W.size(); ++t) CHECK(solo.W[t] == ens.runs[3].W[t]);
}

TEST_CASE("container round-trip is lossless") {
    Dataset pool = synth_gaussian_mixture(13, 60, 3, 2, 2.0);
    Problem p = make_softmax_linear(3, 2);
    SplitPlan plan = partition(pool, 2, 0.2, 0.0, 1);
    SGDConfig cfg{0.05, 5, 8, 0.9, false, 23};
    RunEnsemble ens = run_ensemble(p, pool, plan, cfg, 23);

    std::string path = "/tmp/genbound_roundtrip.traj";
    save_ensemble(ens, path);
    RunEnsemble back = load_ensemble(path);
    CHECK(back.k() == ens.k());
    CHECK(back.W0 == ens.W0);
    CHECK(back.plan.train_splits == ens.plan.train_splits);
    CHECK(back.plan.test == ens.plan.test);
    for (int i = 0; i < ens.k(); ++i) {
        CHECK(back.runs[i].W == ens.runs[i].W);
        CHECK(back.runs[i].g == ens.runs[i].g);
        CHECK(back.runs[i].batches == ens.runs[i].batches);
        CHECK(back.runs[i].seed == ens.runs[i].seed);
    }
    std::remove(path.c_str());
    std::remove((path + ".json").c_str());
}

TEST_CASE("non-finite losses abort with the step index") {
    Problem p;
    p.dim = 1;
    p.loss = [](const Vector& w, const Dataset&, int) { return w[0]; };
    p.grad = [](const Vector& w, const Dataset&, int, Vector& out) {
        out = {w[0] > 1e50 ? std::numeric_limits<double>::infinity() : -1e60};
    };
    p.R = 1.0;
    Dataset ds = dummy_data(2);
    SGDConfig cfg{10.0, 2, 50, 0.0, false, 1};
    CHECK_THROWS(run_sgd(p, ds, {0, 1}, cfg, {0.0}));
}
