#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "genbound/dataset.hpp"
#include "genbound/problem.hpp"

namespace genbound {

// Experiment configuration (JSON key/value tree; see README for the schema).
struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "out";

    // problem
    std::string model = "logistic";  // logistic | mlp
    int d_in = 10;
    int classes = 4;
    int hidden = 16;
    std::string activation = "tanh";

    // data
    std::string data_type = "synthetic";  // synthetic | idx
    int n = 1200;
    double separation = 3.0;
    std::string idx_images, idx_labels;

    // split
    int k = 6;
    double test_frac = 0.2;
    double val_frac = 0.1;

    // sgd
    int steps = 500;
    double momentum = 0.9;
    std::vector<double> lr_grid{0.1};
    std::vector<int> batch_grid{25};

    // bounds
    std::vector<std::string> bound_list{"wang", "neu", "flatness"};
    std::vector<double> lambdas{1.0, 1e3, 1e9};

    // estimation
    int trace_probes = 32;
    int mc_samples = 1000;
};

ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json_text(const std::string& text);

Problem build_problem(const ExperimentConfig& cfg);
Dataset build_dataset(const ExperimentConfig& cfg);

}  // namespace genbound
