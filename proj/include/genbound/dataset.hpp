#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "genbound/rng.hpp"
#include "genbound/vec.hpp"

namespace genbound {

// Row-major feature matrix plus either integer labels (classification) or
// real targets (regression / raw sample vectors).
struct Dataset {
    int n = 0;
    int d_in = 0;
    std::vector<double> inputs;  // n * d_in
    std::vector<int> labels;     // size n or empty
    std::vector<double> targets; // size n or empty

    const double* row(int i) const { return inputs.data() + std::size_t(i) * d_in; }
    double* row(int i) { return inputs.data() + std::size_t(i) * d_in; }
};

// A subset of a dataset by index list.
struct DataView {
    const Dataset* ds = nullptr;
    std::vector<int> idx;

    int size() const { return int(idx.size()); }
};

inline DataView full_view(const Dataset& ds) {
    DataView v{&ds, {}};
    v.idx.resize(ds.n);
    for (int i = 0; i < ds.n; ++i) v.idx[i] = i;
    return v;
}

// IDX-ubyte reader (magic 0x00000803 for images, 0x00000801 for labels),
// big-endian dims, gzip-compressed files detected by the 0x1f8b magic.
// Pixels are scaled to [0, 1].
Dataset load_idx(const std::string& path);

// Merges an image dataset and a label dataset; validates label range.
Dataset merge_idx(const Dataset& images, const Dataset& labels, int num_classes);

// Throws when a label lies outside [0, num_classes).
void validate_labels(const Dataset& ds, int num_classes);

// Class-conditional Gaussians: unit covariance, class means at pairwise
// distance `separation` (coordinate simplex directions, requires classes <=
// d_in). Deterministic in the seed.
Dataset synth_gaussian_mixture(std::uint64_t seed, int n, int d_in, int classes,
                               double separation);

struct SplitPlan {
    std::vector<std::vector<int>> train_splits;  // k pairwise disjoint sets
    std::vector<int> test;
    std::vector<int> val;
    std::uint64_t seed = 0;
};

// Shuffles the pool, carves out test and validation fractions, then cuts the
// remainder into k equal-size (+-1) disjoint training splits.
SplitPlan partition(const Dataset& pool, int k, double test_frac, double val_frac,
                    std::uint64_t seed);

}  // namespace genbound
