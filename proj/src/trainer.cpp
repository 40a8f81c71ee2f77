#include "genbound/trainer.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace genbound {

namespace {

// Without-replacement batch draw: partial Fisher-Yates over a scratch copy.
std::vector<int> draw_batch(std::vector<int>& scratch, int b, RngStream& rng) {
    int n = int(scratch.size());
    std::vector<int> batch(b);
    for (int i = 0; i < b; ++i) {
        int j = i + int(rng.uniform_below(std::uint64_t(n - i)));
        std::swap(scratch[i], scratch[j]);
        batch[i] = scratch[i];
    }
    return batch;
}

}  // namespace

TrajectoryRecord run_sgd(const Problem& problem, const Dataset& pool,
                         const std::vector<int>& split, const SGDConfig& config,
                         const Vector& w0, int split_id) {
    if (config.steps < 1 || config.batch < 1 || config.batch > int(split.size()) ||
        !(config.lr >= 0.0))
        throw std::invalid_argument("run_sgd: invalid config");
    if (int(w0.size()) != problem.dim) throw std::invalid_argument("run_sgd: w0 dim mismatch");

    TrajectoryRecord rec;
    rec.seed = config.seed;
    rec.split_id = split_id;
    rec.W.reserve(config.steps + 1);
    rec.g.reserve(config.steps);
    rec.batches.reserve(config.steps);
    rec.W.push_back(w0);

    RngStream rng(config.seed, 0);
    std::vector<int> scratch = split;
    Vector momentum(problem.dim, 0.0);
    Vector grad(problem.dim, 0.0), gsum(problem.dim, 0.0);

    for (int t = 1; t <= config.steps; ++t) {
        const Vector& w = rec.W.back();
        std::vector<int> batch = draw_batch(scratch, config.batch, rng);
        gsum.assign(problem.dim, 0.0);
        for (int i : batch) {
            problem.grad(w, pool, i, grad);
            axpy(1.0, grad, gsum);
        }
        for (double& v : gsum) v /= config.batch;
        if (!all_finite(gsum))
            throw std::runtime_error("run_sgd: non-finite gradient at step " + std::to_string(t));

        for (int j = 0; j < problem.dim; ++j)
            momentum[j] = config.momentum * momentum[j] + gsum[j];
        Vector w_next(problem.dim);
        for (int j = 0; j < problem.dim; ++j) w_next[j] = w[j] - config.lr * momentum[j];
        if (config.projection) {
            if (!problem.has_projection()) throw std::runtime_error("run_sgd: no projection");
            w_next = problem.project(w_next);
        }
        rec.g.push_back(sub(w, w_next));
        rec.batches.push_back(std::move(batch));
        rec.W.push_back(std::move(w_next));
    }
    return rec;
}

TrajectoryRecord run_projected_gd(const Problem& problem, const Dataset& pool,
                                  const std::vector<int>& split, double lr, int steps,
                                  const Vector& w0) {
    if (!problem.has_projection()) throw std::invalid_argument("run_projected_gd: no projection");
    TrajectoryRecord rec;
    rec.W.reserve(steps + 1);
    rec.W.push_back(w0);
    DataView view{&pool, split};
    for (int t = 1; t <= steps; ++t) {
        const Vector& w = rec.W.back();
        Vector grad = mean_grad(problem, w, view);
        if (!all_finite(grad))
            throw std::runtime_error("run_projected_gd: non-finite gradient at step " +
                                     std::to_string(t));
        Vector w_next(w.size());
        for (std::size_t j = 0; j < w.size(); ++j) w_next[j] = w[j] - lr * grad[j];
        w_next = problem.project(w_next);
        rec.g.push_back(sub(w, w_next));
        rec.batches.push_back(split);
        rec.W.push_back(std::move(w_next));
    }
    return rec;
}

RunEnsemble run_ensemble(const Problem& problem, const Dataset& pool, const SplitPlan& plan,
                         const SGDConfig& config, std::uint64_t init_seed) {
    if (plan.train_splits.size() < 2) throw std::invalid_argument("run_ensemble: k < 2");
    RunEnsemble ens;
    ens.plan = plan;
    ens.config = config;

    RngStream init_rng(init_seed, 0xC0FFEE);
    ens.W0 = gaussian_sample(init_rng, std::size_t(problem.dim), 0.1);

    int k = int(plan.train_splits.size());
    ens.runs.reserve(k);
    for (int s = 0; s < k; ++s) {
        SGDConfig c = config;
        // Independent stream per split, stable under split reordering.
        RngStream fork(config.seed, 0x5EED0000ULL + std::uint64_t(s));
        c.seed = fork.next_u64();
        ens.runs.push_back(run_sgd(problem, pool, plan.train_splits[s], c, ens.W0, s));
    }
    return ens;
}

namespace {

constexpr char kMagic[8] = {'G', 'B', 'T', 'R', 'J', '0', '1', '\0'};

void put_u64(std::ofstream& f, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = (unsigned char)(v >> (8 * i));
    f.write(reinterpret_cast<char*>(b), 8);
}

std::uint64_t get_u64(std::ifstream& f) {
    unsigned char b[8];
    f.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    return v;
}

void put_vec(std::ofstream& f, const Vector& v) {
    f.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
}

void get_vec(std::ifstream& f, Vector& v, std::size_t n) {
    v.resize(n);
    f.read(reinterpret_cast<char*>(v.data()), std::streamsize(n * sizeof(double)));
}

void put_ints(std::ofstream& f, const std::vector<int>& v) {
    put_u64(f, v.size());
    for (int x : v) put_u64(f, std::uint64_t(std::int64_t(x)));
}

std::vector<int> get_ints(std::ifstream& f) {
    std::size_t n = get_u64(f);
    std::vector<int> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = int(std::int64_t(get_u64(f)));
    return v;
}

}  // namespace

void save_ensemble(const RunEnsemble& ens, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_ensemble: cannot open " + path);
    f.write(kMagic, 8);
    std::size_t d = ens.W0.size();
    std::size_t T = ens.runs.empty() ? 0 : ens.runs[0].g.size();
    put_u64(f, d);
    put_u64(f, T);
    put_u64(f, ens.runs.size());
    put_vec(f, ens.W0);
    for (const auto& rec : ens.runs) {
        put_u64(f, rec.seed);
        put_u64(f, std::uint64_t(std::int64_t(rec.split_id)));
        for (const auto& w : rec.W) put_vec(f, w);
        for (const auto& g : rec.g) put_vec(f, g);
        for (const auto& b : rec.batches) put_ints(f, b);
    }
    put_u64(f, ens.plan.train_splits.size());
    for (const auto& s : ens.plan.train_splits) put_ints(f, s);
    put_ints(f, ens.plan.test);
    put_ints(f, ens.plan.val);
    put_u64(f, ens.plan.seed);
    if (!f) throw std::runtime_error("save_ensemble: write failed");

    nlohmann::ordered_json j;
    j["format"] = "genbound-trajectory-v1";
    j["dim"] = d;
    j["steps"] = T;
    j["k"] = ens.runs.size();
    j["config"] = {{"lr", ens.config.lr},       {"batch", ens.config.batch},
                   {"steps", ens.config.steps}, {"momentum", ens.config.momentum},
                   {"projection", ens.config.projection}, {"seed", ens.config.seed}};
    std::vector<std::uint64_t> seeds;
    for (const auto& r : ens.runs) seeds.push_back(r.seed);
    j["run_seeds"] = seeds;
    j["split_seed"] = ens.plan.seed;
    std::ofstream jf(path + ".json");
    jf << j.dump(2) << "\n";
}

RunEnsemble load_ensemble(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_ensemble: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error("load_ensemble: bad magic");
    std::size_t d = get_u64(f);
    std::size_t T = get_u64(f);
    std::size_t k = get_u64(f);
    RunEnsemble ens;
    get_vec(f, ens.W0, d);
    ens.runs.resize(k);
    for (auto& rec : ens.runs) {
        rec.seed = get_u64(f);
        rec.split_id = int(std::int64_t(get_u64(f)));
        rec.W.resize(T + 1);
        for (auto& w : rec.W) get_vec(f, w, d);
        rec.g.resize(T);
        for (auto& g : rec.g) get_vec(f, g, d);
        rec.batches.resize(T);
        for (auto& b : rec.batches) b = get_ints(f);
    }
    std::size_t ks = get_u64(f);
    ens.plan.train_splits.resize(ks);
    for (auto& s : ens.plan.train_splits) s = get_ints(f);
    ens.plan.test = get_ints(f);
    ens.plan.val = get_ints(f);
    ens.plan.seed = get_u64(f);
    if (!f) throw std::runtime_error("load_ensemble: truncated container");

    std::ifstream jf(path + ".json");
    if (jf) {
        nlohmann::json j = nlohmann::json::parse(jf, nullptr, false);
        if (!j.is_discarded() && j.contains("config")) {
            const auto& c = j["config"];
            ens.config.lr = c.value("lr", 0.0);
            ens.config.batch = c.value("batch", 0);
            ens.config.steps = c.value("steps", int(T));
            ens.config.momentum = c.value("momentum", 0.9);
            ens.config.projection = c.value("projection", false);
            ens.config.seed = c.value("seed", std::uint64_t(0));
        }
    }
    return ens;
}

}  // namespace genbound
