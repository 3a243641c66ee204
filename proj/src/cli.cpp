#include "hfedf/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hfedf/errors.hpp"
#include "hfedf/runner.hpp"
#include "hfedf/version.hpp"

namespace hfedf {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void print_report(const RunReport& report) {
    std::cout << "wrote " << (report.dir / "results.csv").string() << "\n";
    for (const auto& s : report.table.summaries())
        std::cout << "  " << s.algorithm << ": id " << format_double(s.mu_id) << "  ood "
                  << format_double(s.mu_ood) << "  (" << s.n_cells << " cells)\n";
    for (const auto& f : report.failed_cells) std::cout << "  diverged: " << f << "\n";
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Federated domain-generalization simulator"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path, manifest_path, out_dir;
    int jobs = 1;
    std::uint64_t seed_override = 0;
    bool have_seed_override = false;

    auto* run = app.add_subcommand("run", "Run the experiment grid from a config file");
    run->add_option("config", config_path, "JSON config file")->required();
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--jobs", jobs, "Worker threads for grid cells")->check(CLI::PositiveNumber);
    run->add_option("--seed-override", seed_override, "Run a single seed instead of the configured list")
        ->each([&](const std::string&) { have_seed_override = true; });

    auto* validate = app.add_subcommand("validate", "Parse and validate a config file");
    validate->add_option("config", config_path, "JSON config file")->required();

    auto* resume = app.add_subcommand("resume", "Reproduce a run from its manifest");
    resume->add_option("manifest", manifest_path, "manifest.json of a previous run")->required();
    resume->add_option("--out", out_dir, "Output directory");
    resume->add_option("--jobs", jobs, "Worker threads for grid cells")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (validate->parsed()) {
            ExperimentConfig::parse(read_file(config_path));
            std::cout << "config ok\n";
            return 0;
        }
        RunOptions opts;
        opts.out_dir = out_dir;
        opts.jobs = jobs;
        if (have_seed_override) opts.seed_override = seed_override;

        RunReport report = run->parsed()
                               ? run_to_directory(ExperimentConfig::parse(read_file(config_path)), opts)
                               : resume_from_manifest(manifest_path, opts);
        print_report(report);
        return report.failed_cells.empty() ? 0 : 3;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace hfedf
