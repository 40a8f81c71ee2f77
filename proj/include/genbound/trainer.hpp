#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "genbound/dataset.hpp"
#include "genbound/problem.hpp"

namespace genbound {

struct SGDConfig {
    double lr = 0.1;
    int batch = 1;
    int steps = 1;
    double momentum = 0.9;
    bool projection = false;
    std::uint64_t seed = 0;
};

// One training run with everything recorded. g_t is the realized weight
// delta W_{t-1} - W_t (momentum and projection absorbed), so the
// reconstruction W_t == W_{t-1} - g_t holds bitwise and
// Delta W_T = -sum_t g_t exactly.
struct TrajectoryRecord {
    std::vector<Vector> W;                 // T + 1 iterates
    std::vector<Vector> g;                 // T realized updates
    std::vector<std::vector<int>> batches; // T batch index lists (pool indices)
    std::uint64_t seed = 0;
    int split_id = -1;

    int steps() const { return int(g.size()); }
    Vector delta_w() const { return sub(W.back(), W.front()); }
};

struct RunEnsemble {
    std::vector<TrajectoryRecord> runs;
    SplitPlan plan;
    Vector W0;
    SGDConfig config;

    int k() const { return int(runs.size()); }
};

// Mini-batch SGD with momentum on a split (indices into the pool dataset).
// Batches are drawn uniformly without replacement within each step.
TrajectoryRecord run_sgd(const Problem& problem, const Dataset& pool,
                         const std::vector<int>& split, const SGDConfig& config,
                         const Vector& w0, int split_id = -1);

// Full-batch projected (sub)gradient descent; requires a projection.
TrajectoryRecord run_projected_gd(const Problem& problem, const Dataset& pool,
                                  const std::vector<int>& split, double lr, int steps,
                                  const Vector& w0);

// One run per training split, independent seed streams, shared W0 drawn from
// init_seed.
RunEnsemble run_ensemble(const Problem& problem, const Dataset& pool, const SplitPlan& plan,
                         const SGDConfig& config, std::uint64_t init_seed);

// Little-endian binary container (+ JSON sidecar at path + ".json") holding
// the full ensemble so bounds can be computed without retraining.
void save_ensemble(const RunEnsemble& ens, const std::string& path);
RunEnsemble load_ensemble(const std::string& path);

}  // namespace genbound
