#include "genbound/config.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace genbound {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ExperimentConfig from_json(const json& j) {
    ExperimentConfig c;
    c.seed = j.value("seed", c.seed);
    c.out_dir = j.value("out", c.out_dir);
    if (j.contains("problem")) {
        const auto& p = j["problem"];
        c.model = p.value("type", c.model);
        c.d_in = p.value("d_in", c.d_in);
        c.classes = p.value("classes", c.classes);
        c.hidden = p.value("hidden", c.hidden);
        c.activation = p.value("activation", c.activation);
        if (p.contains("data")) {
            const auto& d = p["data"];
            c.data_type = d.value("type", c.data_type);
            c.n = d.value("n", c.n);
            c.separation = d.value("separation", c.separation);
            c.idx_images = d.value("images", c.idx_images);
            c.idx_labels = d.value("labels", c.idx_labels);
        }
    }
    if (j.contains("split")) {
        const auto& s = j["split"];
        c.k = s.value("k", c.k);
        c.test_frac = s.value("test_frac", c.test_frac);
        c.val_frac = s.value("val_frac", c.val_frac);
    }
    if (j.contains("sgd")) {
        const auto& s = j["sgd"];
        c.steps = s.value("steps", c.steps);
        c.momentum = s.value("momentum", c.momentum);
    }
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        if (g.contains("lr")) c.lr_grid = g["lr"].get<std::vector<double>>();
        if (g.contains("batch")) c.batch_grid = g["batch"].get<std::vector<int>>();
    }
    if (j.contains("bounds")) {
        const auto& b = j["bounds"];
        if (b.contains("list")) c.bound_list = b["list"].get<std::vector<std::string>>();
        if (b.contains("lambdas")) c.lambdas = b["lambdas"].get<std::vector<double>>();
    }
    if (j.contains("estimation")) {
        const auto& e = j["estimation"];
        c.trace_probes = e.value("trace_probes", c.trace_probes);
        c.mc_samples = e.value("mc_samples", c.mc_samples);
    }
    if (c.lr_grid.empty() || c.batch_grid.empty())
        throw std::runtime_error("config: empty grid");
    return c;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("config: cannot open " + path);
    json j = json::parse(f);
    ExperimentConfig c = from_json(j);
    if (c.data_type == "idx") {
        if (c.idx_images.empty() || c.idx_labels.empty())
            throw std::runtime_error("config: field problem.data.images/labels missing");
        std::ifstream imgs(c.idx_images);
        if (!imgs) throw std::runtime_error("config: missing dataset path (problem.data.images): " + c.idx_images);
        std::ifstream labs(c.idx_labels);
        if (!labs) throw std::runtime_error("config: missing dataset path (problem.data.labels): " + c.idx_labels);
    }
    return c;
}

ExperimentConfig config_from_json_text(const std::string& text) {
    return from_json(json::parse(text));
}

std::string config_to_json(const ExperimentConfig& c) {
    ordered_json j;
    j["seed"] = c.seed;
    j["out"] = c.out_dir;
    j["problem"] = {{"type", c.model},       {"d_in", c.d_in},
                    {"classes", c.classes},  {"hidden", c.hidden},
                    {"activation", c.activation},
                    {"data",
                     {{"type", c.data_type},
                      {"n", c.n},
                      {"separation", c.separation},
                      {"images", c.idx_images},
                      {"labels", c.idx_labels}}}};
    j["split"] = {{"k", c.k}, {"test_frac", c.test_frac}, {"val_frac", c.val_frac}};
    j["sgd"] = {{"steps", c.steps}, {"momentum", c.momentum}};
    j["grid"] = {{"lr", c.lr_grid}, {"batch", c.batch_grid}};
    j["bounds"] = {{"list", c.bound_list}, {"lambdas", c.lambdas}};
    j["estimation"] = {{"trace_probes", c.trace_probes}, {"mc_samples", c.mc_samples}};
    return j.dump(2);
}

Problem build_problem(const ExperimentConfig& cfg) {
    if (cfg.model == "logistic") return make_softmax_linear(cfg.d_in, cfg.classes);
    if (cfg.model == "mlp") return make_mlp(cfg.d_in, cfg.hidden, cfg.classes, cfg.activation);
    throw std::runtime_error("config: unknown model " + cfg.model);
}

Dataset build_dataset(const ExperimentConfig& cfg) {
    if (cfg.data_type == "synthetic")
        return synth_gaussian_mixture(cfg.seed, cfg.n, cfg.d_in, cfg.classes, cfg.separation);
    if (cfg.data_type == "idx") {
        Dataset imgs = load_idx(cfg.idx_images);
        Dataset labs = load_idx(cfg.idx_labels);
        return merge_idx(imgs, labs, cfg.classes);
    }
    throw std::runtime_error("config: unknown data type " + cfg.data_type);
}

}  // namespace genbound
