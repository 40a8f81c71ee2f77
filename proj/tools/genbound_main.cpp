#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "genbound/bounds.hpp"
#include "genbound/config.hpp"
#include "genbound/extensions.hpp"
#include "genbound/lemma_lab.hpp"
#include "genbound/report.hpp"

namespace fs = std::filesystem;
using namespace genbound;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct Cell {
    int index = 0;
    double lr = 0.0;
    int batch = 0;
    std::string path;
    std::uint64_t seed = 0;
};

std::vector<Cell> grid_cells(const ExperimentConfig& cfg, const std::string& out_dir) {
    std::vector<Cell> cells;
    int idx = 0;
    for (double lr : cfg.lr_grid)
        for (int b : cfg.batch_grid) {
            Cell c;
            c.index = idx;
            c.lr = lr;
            c.batch = b;
            c.seed = RngStream(cfg.seed, 0xCE11ULL + std::uint64_t(idx)).next_u64();
            c.path = out_dir + "/cell_" + std::to_string(idx) + ".traj";
            cells.push_back(c);
            ++idx;
        }
    return cells;
}

void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
    if (jobs <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    for (int w = 0; w < std::min(jobs, count); ++w)
        workers.emplace_back([&] {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= count) return;
                fn(i);
            }
        });
    for (auto& t : workers) t.join();
}

int cmd_train(const std::string& config_path, const std::string& out_override,
              std::uint64_t seed_override, int jobs) {
    ExperimentConfig cfg = load_config(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (seed_override) cfg.seed = seed_override;
    if (const char* env = std::getenv("GENBOUND_OUT")) cfg.out_dir = env;
    fs::create_directories(cfg.out_dir);

    Problem problem = build_problem(cfg);
    Dataset pool = build_dataset(cfg);
    SplitPlan plan = partition(pool, cfg.k, cfg.test_frac, cfg.val_frac, cfg.seed);
    std::vector<Cell> cells = grid_cells(cfg, cfg.out_dir);

    parallel_for(int(cells.size()), jobs, [&](int i) {
        const Cell& c = cells[i];
        SGDConfig sc{c.lr, c.batch, cfg.steps, cfg.momentum, false, c.seed};
        RunEnsemble ens = run_ensemble(problem, pool, plan, sc, c.seed);
        save_ensemble(ens, c.path);
    });

    ordered_json manifest;
    manifest["config"] = json::parse(config_to_json(cfg));
    ordered_json jcells = ordered_json::array();
    for (const Cell& c : cells)
        jcells.push_back({{"index", c.index}, {"lr", c.lr}, {"batch", c.batch},
                          {"path", c.path}, {"seed", c.seed}});
    manifest["cells"] = jcells;
    std::ofstream mf(cfg.out_dir + "/manifest.json");
    mf << manifest.dump(2) << "\n";
    std::cout << "trained " << cells.size() << " cells -> " << cfg.out_dir << "\n";
    return 0;
}

int cmd_bounds(const std::string& manifest_path, const std::string& out_csv, int jobs,
               bool plot) {
    std::ifstream mf(manifest_path);
    if (!mf) {
        std::cerr << "cannot open manifest " << manifest_path << "\n";
        return 1;
    }
    json manifest = json::parse(mf);
    ExperimentConfig cfg = config_from_json_text(manifest["config"].dump());
    Problem problem = build_problem(cfg);
    Dataset pool = build_dataset(cfg);

    struct CellRows {
        std::vector<CsvRow> rows;
        bool error = false;
    };
    const auto& cells = manifest["cells"];
    std::vector<CellRows> per_cell(cells.size());

    parallel_for(int(cells.size()), jobs, [&](int i) {
        const auto& c = cells[i];
        double lr = c["lr"];
        int batch = c["batch"];
        std::uint64_t seed = c["seed"];
        try {
            RunEnsemble ens = load_ensemble(c["path"]);
            McConfig mc{cfg.trace_probes, cfg.mc_samples, seed, 0.01, 20};
            for (const std::string& b : cfg.bound_list) {
                if (b == "wang") {
                    per_cell[i].rows.push_back(
                        row_from_report(wang_bound(problem, pool, ens, mc), lr, batch, seed));
                } else if (b == "neu") {
                    per_cell[i].rows.push_back(row_from_report(
                        neu_isotropic_bound(problem, pool, ens, mc), lr, batch, seed));
                } else if (b == "flatness") {
                    for (double lam : cfg.lambdas) {
                        PerturbationChoice ch;
                        ch.lambda = lam;
                        per_cell[i].rows.push_back(row_from_report(
                            flatness_bound(problem, pool, ens, ch, mc), lr, batch, seed));
                    }
                } else {
                    std::cerr << "unknown bound '" << b << "', skipped\n";
                }
            }
        } catch (const std::exception& e) {
            std::cerr << "cell " << i << " (lr=" << lr << ", b=" << batch << "): " << e.what()
                      << "\n";
            per_cell[i].error = true;
            CsvRow err;
            err.bound_name = "error";
            err.lr = lr;
            err.batch_size = batch;
            err.seed = seed;
            per_cell[i].rows.push_back(err);
        }
    });

    std::vector<CsvRow> rows;
    for (const auto& pc : per_cell) rows.insert(rows.end(), pc.rows.begin(), pc.rows.end());
    write_csv(out_csv, rows);
    std::cout << "wrote " << rows.size() << " rows -> " << out_csv << "\n";

    if (plot) {
        std::vector<double> xs;
        SvgSeries gap{"measured_gap", {}}, total{"bound_total", {}};
        for (const auto& r : rows) {
            if (r.bound_name == "error") continue;
            xs.push_back(double(xs.size()));
            gap.y.push_back(r.measured_gap);
            total.y.push_back(r.total);
        }
        std::string svg = out_csv + ".svg";
        write_svg_chart(svg, "gap vs bound", xs, {gap, total});
        std::cout << "wrote " << svg << "\n";
    }
    return 0;
}

int suite_lemmas(std::uint64_t seed, const std::string& out_csv) {
    std::vector<CsvRow> rows;
    bool ok = true;
    auto push = [&](const std::string& name, double lhs, double rhs, bool pass) {
        CsvRow r;
        r.bound_name = name;
        r.trajectory = lhs;
        r.total = rhs;
        r.experiment = "lemma";
        r.has_stats = true;
        r.trials = 100000;
        rows.push_back(r);
        if (!pass) {
            ok = false;
            std::cerr << "[FAIL] " << name << " lhs=" << lhs << " rhs=" << rhs << "\n";
        }
    };

    const int m = 100000;
    auto families = default_sampler_families(seed);
    for (const auto& s : families) {
        for (const auto& rep : check_center_distance(s, m, seed))
            push(rep.name, rep.lhs, rep.rhs, rep.pass);
        auto conv = check_convex_lemma([](const Vector& w) { return sqnorm(w); }, s, m, seed);
        push(conv.name, conv.lhs, conv.rhs, conv.pass);
    }
    for (double a : {0.0, 0.3, 1.0, 3.0}) {
        auto key = check_key_lemma_gaussian(a, 1.0, 1.0);
        push("key_lemma_a" + std::to_string(a), key.mi_exact, key.variance_bound, key.pass);
    }
    {
        std::vector<std::vector<double>> table = {{0.0, 0.25, 1.0}, {1.0, 0.25, 0.0}};
        auto ic = check_interchange(table);
        push("interchange", ic.lhs, ic.rhs, ic.pass);
    }
    if (!out_csv.empty()) write_csv(out_csv, rows);
    std::cout << (ok ? "lemma suite: all checks passed\n" : "lemma suite: FAILURES\n");
    return ok ? 0 : 2;
}

int suite_clb(std::uint64_t seed, const std::string& out_csv, double eta) {
    ClbResult res = clb_gd_experiment(5, 100, eta, 100, 100, 1.0, seed);
    bool ok = res.measured_gap <= res.centered_distance_term +
                                      4.0 * (res.gap_stderr + res.centered_stderr) &&
              res.centered_distance_term <= res.theorem_bound + 4.0 * res.centered_stderr;
    std::cout << "clb: gap=" << res.measured_gap << " centered=" << res.centered_distance_term
              << " bound=" << res.theorem_bound << (ok ? " [ok]" : " [FAIL]") << "\n";
    if (!out_csv.empty()) {
        CsvRow r;
        r.bound_name = "clb_gd";
        r.measured_gap = res.measured_gap;
        r.total = res.theorem_bound;
        r.trajectory = res.centered_distance_term;
        r.experiment = "clb";
        r.trials = res.trials;
        r.stderr_ = res.gap_stderr;
        r.has_stats = true;
        write_csv(out_csv, {r});
    }
    return ok ? 0 : 2;
}

int suite_smooth(std::uint64_t seed, const std::string& out_csv) {
    // 1-D least squares, GD dynamics vs the analytic recursion.
    Problem prob = make_least_squares(1);
    prob.resample = [](RngStream& rng, Dataset& ds, int i) {
        ds.row(i)[0] = 1.0;
        ds.targets[i] = rng.next_gaussian();
    };
    const int n = 20, T = 40;
    const double eta = 0.2;
    auto maker = [n](RngStream& rng, Dataset& ds) {
        ds.n = n;
        ds.d_in = 1;
        ds.inputs.assign(n, 1.0);
        ds.targets.resize(n);
        for (int i = 0; i < n; ++i) ds.targets[i] = rng.next_gaussian();
    };
    SGDConfig cfg{eta, n, T, 0.0, false, 0};
    StabilityEstimate est = on_average_model_stability(prob, n, cfg, 30, seed, maker);
    SmoothBounds sb = smooth_bounds(1.0, 2.0, 1.0, est.epsilon, 0.25, T, n, 2.0, 1.0);
    bool ok = est.epsilon >= 0.0 && sb.gen_bound > 0.0;
    std::cout << "smooth: eps_stability=" << est.epsilon << " gen_bound=" << sb.gen_bound
              << " excess(opt T)=" << sb.excess_risk_separable_opt_T << (ok ? " [ok]" : " [FAIL]")
              << "\n";
    if (!out_csv.empty()) {
        CsvRow r;
        r.bound_name = "smooth_stability";
        r.trajectory = est.epsilon;
        r.total = sb.gen_bound;
        r.experiment = "smooth";
        r.trials = est.trials;
        r.stderr_ = est.stderr_;
        r.has_stats = true;
        write_csv(out_csv, {r});
    }
    return ok ? 0 : 2;
}

int cmd_report(const std::string& csv_path, const std::string& out_svg) {
    auto rows = parse_csv(csv_path);
    std::vector<double> xs;
    SvgSeries gap{"measured_gap", {}}, total{"bound_total", {}};
    for (const auto& r : rows) {
        if (r.bound_name == "error") continue;
        xs.push_back(double(xs.size()));
        gap.y.push_back(r.measured_gap);
        total.y.push_back(r.total);
    }
    write_svg_chart(out_svg, "gap vs bound", xs, {gap, total});
    std::cout << "wrote " << out_svg << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"genbound: SGD trajectory recording and generalization-bound estimation"};
    app.require_subcommand(1);

    std::string config_path, manifest_path, out_path, csv_path, suite_name;
    std::uint64_t seed = 0;
    int jobs = 1;
    double clb_eta = 0.01;
    bool plot = false;
    if (const char* env = std::getenv("GENBOUND_JOBS")) jobs = std::atoi(env);

    auto* train = app.add_subcommand("train", "train ensembles over the hyperparameter grid");
    train->add_option("--config", config_path)->required();
    train->add_option("--out", out_path);
    train->add_option("--seed", seed);
    train->add_option("--jobs", jobs);

    auto* bounds = app.add_subcommand("bounds", "compute bounds from trained containers");
    bounds->add_option("--manifest", manifest_path)->required();
    bounds->add_option("--out", csv_path)->required();
    bounds->add_option("--jobs", jobs);
    bounds->add_flag("--plot", plot);

    auto* sweep = app.add_subcommand("sweep", "train then compute bounds");
    sweep->add_option("--config", config_path)->required();
    sweep->add_option("--out", out_path);
    sweep->add_option("--seed", seed);
    sweep->add_option("--jobs", jobs);
    sweep->add_flag("--plot", plot);

    auto* suite = app.add_subcommand("suite", "run a verification battery (clb|smooth|lemmas)");
    suite->add_option("name", suite_name)->required();
    suite->add_option("--out", csv_path);
    suite->add_option("--seed", seed);
    suite->add_option("--eta", clb_eta);

    auto* report = app.add_subcommand("report", "CSV -> SVG gap-vs-bound chart");
    report->add_option("--csv", csv_path)->required();
    report->add_option("--out", out_path)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) return cmd_train(config_path, out_path, seed, jobs);
        if (*bounds) return cmd_bounds(manifest_path, csv_path, jobs, plot);
        if (*sweep) {
            int rc = cmd_train(config_path, out_path, seed, jobs);
            if (rc) return rc;
            ExperimentConfig cfg = load_config(config_path);
            if (!out_path.empty()) cfg.out_dir = out_path;
            if (const char* env = std::getenv("GENBOUND_OUT")) cfg.out_dir = env;
            return cmd_bounds(cfg.out_dir + "/manifest.json", cfg.out_dir + "/bounds.csv", jobs,
                              plot);
        }
        if (*suite) {
            if (suite_name == "lemmas") return suite_lemmas(seed ? seed : 7, csv_path);
            if (suite_name == "clb") return suite_clb(seed ? seed : 7, csv_path, clb_eta);
            if (suite_name == "smooth") return suite_smooth(seed ? seed : 7, csv_path);
            std::cerr << "unknown suite '" << suite_name << "' (expected clb|smooth|lemmas)\n";
            return 1;
        }
        if (*report) return cmd_report(csv_path, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
