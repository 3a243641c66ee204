#include "hfedf/runner.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "hfedf/errors.hpp"
#include "hfedf/metrics.hpp"

namespace hfedf {

namespace {

struct Cell {
    Algorithm algorithm;
    std::uint64_t seed;
    int target;
};

std::string cell_name(const Cell& c) {
    return to_string(c.algorithm) + "/s" + std::to_string(c.seed) + "/t" + std::to_string(c.target);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
}

nlohmann::json trace_record(const Cell& cell, const RoundTrace& t) {
    return {{"algorithm", to_string(cell.algorithm)},
            {"seed", cell.seed},
            {"target_domain", cell.target},
            {"round", t.round},
            {"theta_weights", t.theta_weights},
            {"theta_cosines", t.theta_cosines},
            {"nu_weights", t.nu_weights},
            {"nu_cosines", t.nu_cosines},
            {"theta_grad_norm", t.theta_grad_norm},
            {"nu_grad_norm", t.nu_grad_norm},
            {"client_losses", t.client_losses}};
}

}  // namespace

std::filesystem::path resolve_output_dir(const ExperimentConfig& config, const RunOptions& opts) {
    if (!opts.out_dir.empty()) return opts.out_dir;
    if (!config.output_dir.empty()) return config.output_dir;
    if (const char* root = std::getenv(kOutputRootEnv)) return std::filesystem::path(root) / "hfedf-run";
    return std::filesystem::path("hfedf-run");
}

RunReport run_to_directory(ExperimentConfig config, const RunOptions& opts) {
    if (opts.seed_override) config.seeds = {*opts.seed_override};
    config.validate();
    const std::filesystem::path dir = resolve_output_dir(config, opts);
    std::filesystem::create_directories(dir);

    std::vector<Cell> cells;
    for (Algorithm a : config.algorithms)
        for (std::uint64_t seed : config.seeds)
            for (int target = 0; target < config.spec.data.n_domains; ++target)
                cells.push_back({a, seed, target});

    std::vector<std::optional<CellResult>> results(cells.size());
    std::vector<std::string> errors(cells.size());
    std::atomic<std::size_t> next{0};

    const int jobs = std::max(1, opts.jobs);
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            try {
                results[i] = run_cell(config.spec, cells[i].algorithm, cells[i].seed, cells[i].target);
            } catch (const NumericError& e) {
                errors[i] = e.what();
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    RunReport report;
    report.dir = dir;
    std::string traces;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!results[i]) {
            report.failed_cells.push_back(cell_name(cells[i]) + ": " + errors[i]);
            continue;
        }
        const CellResult& cell = *results[i];
        report.table.rows.insert(report.table.rows.end(), cell.rows.begin(), cell.rows.end());
        for (const auto& t : cell.traces) traces += trace_record(cells[i], t).dump() + "\n";
    }

    write_text(dir / "manifest.json",
               make_manifest(config, opts.seed_override, report.failed_cells).dump(2) + "\n");
    write_text(dir / "results.csv", report.table.to_csv());
    write_text(dir / "summary.csv", report.table.summaries_csv());
    write_text(dir / "trace.jsonl", traces);

    if (config.export_dataset) {
        // the dataset depends only on the seed; one dump replays every cell
        for (std::uint64_t seed : config.seeds) {
            RngStream data_rng(seed, "data");
            write_domains_jsonl(dir / ("dataset-s" + std::to_string(seed) + ".jsonl"),
                                gen_synthetic_domains(config.spec.data, data_rng));
        }
    }

    if (config.export_confidences) {
        const auto conf_path = dir / "confidences.jsonl";
        std::filesystem::remove(conf_path);
        const ClientModel model(static_cast<std::size_t>(config.spec.data.feature_dim),
                                config.spec.hidden_sizes,
                                static_cast<std::size_t>(config.spec.data.n_classes));
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (!results[i]) continue;
            const EvalSplit split = build_cell_split(config.spec, cells[i].seed, cells[i].target);
            const auto& params = results[i]->final_client_params;
            for (std::size_t c = 0; c < params.size(); ++c) {
                append_confidences_jsonl(conf_path, export_confidences(model, params[c],
                                                                       split.clients[c].val_x,
                                                                       split.clients[c].val_y, "id"));
                append_confidences_jsonl(
                    conf_path, export_confidences(model, params[c], split.ood_x, split.ood_y, "ood"));
            }
        }
    }
    return report;
}

RunReport resume_from_manifest(const std::filesystem::path& manifest_path, RunOptions opts) {
    std::ifstream in(manifest_path);
    if (!in) throw ConfigError("cannot read manifest: " + manifest_path.string());
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("manifest: invalid JSON: ") + e.what());
    }
    ExperimentConfig config = config_from_manifest(manifest);
    if (opts.out_dir.empty()) config.output_dir = manifest_path.parent_path().string();
    return run_to_directory(config, opts);
}

}  // namespace hfedf
