#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "hfedf/cli.hpp"
#include "hfedf/dataset.hpp"
#include "hfedf/errors.hpp"
#include "hfedf/exp_config.hpp"
#include "hfedf/runner.hpp"

using namespace hfedf;
namespace fs = std::filesystem;

namespace {

const char* kTinyConfig = R"({
  "dataset": {"n_domains": 3, "n_classes": 3, "samples_per_domain": 45, "feature_dim": 4,
              "shift_strength": 1.0},
  "n_clients": 2,
  "domains_per_client": 1,
  "hidden_sizes": [6],
  "rounds": 4,
  "local_epochs": 1,
  "batch_size": 8,
  "eval_interval": 2,
  "algorithms": ["hfedf", "fedavg"],
  "seeds": [1, 2]
})";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("minimal config picks the documented defaults") {
    auto cfg = ExperimentConfig::parse("{}");
    CHECK(cfg.spec.fed.rounds == 200);
    CHECK(cfg.spec.fed.local_epochs == 2);
    CHECK(cfg.spec.fed.batch_size == 64);
    CHECK(cfg.spec.fed.server_lr == 1e-3);
    CHECK(cfg.spec.fed.client_lr == 1e-3);
    CHECK(cfg.spec.fed.client_weight_decay == 1e-3);
    CHECK(cfg.spec.fed.server_weight_decay == 1e-5);
    CHECK(cfg.spec.fed.ema_decay == 0.95);
    CHECK(cfg.spec.fed.gradalign_sign == GradAlignSign::Plain);
    CHECK(cfg.spec.fed.embedding_mode == EmbeddingMode::Learned);
    CHECK(cfg.spec.fedprox_coeff == 1e-2);
    CHECK(cfg.spec.embedding_dim == 0);  // the 1 + N/4 rule applies
}

TEST_CASE("config errors name the offending field") {
    CHECK_THROWS_WITH_AS(ExperimentConfig::parse(R"({"domains_per_client": 0})"),
                         doctest::Contains("domains_per_client"), ConfigError);
    CHECK_THROWS_WITH_AS(ExperimentConfig::parse(R"({"no_such_key": 1})"),
                         doctest::Contains("no_such_key"), ConfigError);
    CHECK_THROWS_WITH_AS(ExperimentConfig::parse(R"({"dataset": {"n_domains": "three"}})"),
                         doctest::Contains("dataset.n_domains"), ConfigError);
    CHECK_THROWS_WITH_AS(ExperimentConfig::parse(R"({"dataset": {"typo": 3}})"),
                         doctest::Contains("dataset.typo"), ConfigError);
    CHECK_THROWS_WITH_AS(ExperimentConfig::parse(R"({"algorithms": ["bogus"]})"),
                         doctest::Contains("bogus"), ConfigError);
    CHECK_THROWS_WITH_AS(ExperimentConfig::parse(R"({"n_clients": 9, "domains_per_client": 3,
                          "dataset": {"n_domains": 3}})"),
                         doctest::Contains("domains_per_client"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse("not json"), ConfigError);
}

TEST_CASE("config serialization round-trips") {
    auto cfg = ExperimentConfig::parse(kTinyConfig);
    auto back = ExperimentConfig::from_json(cfg.to_json());
    CHECK(back == cfg);
}

TEST_CASE("explicit values always win over defaults") {
    auto cfg = ExperimentConfig::parse(R"({"server_lr": 0.5, "ema_decay": 0.1})");
    CHECK(cfg.spec.fed.server_lr == 0.5);
    CHECK(cfg.spec.fed.ema_decay == 0.1);
}

TEST_CASE("run writes manifest, results, summary, and trace") {
    auto cfg = ExperimentConfig::parse(kTinyConfig);
    RunOptions opts;
    const fs::path dir = fresh_dir("hfedf_cli_run");
    opts.out_dir = dir.string();
    RunReport report = run_to_directory(cfg, opts);

    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "results.csv"));
    CHECK(fs::exists(dir / "summary.csv"));
    CHECK(fs::exists(dir / "trace.jsonl"));
    CHECK(report.failed_cells.empty());

    // 2 algorithms x 2 seeds x 3 targets cells, each with rounds {0,2,4}
    CHECK(report.table.rows.size() == 2 * 2 * 3 * 3);

    // every grid cell is present
    for (const auto& alg : {"hfedf", "fedavg"})
        for (std::uint64_t seed : {1, 2})
            for (int target = 0; target < 3; ++target) {
                bool found = false;
                for (const auto& r : report.table.rows)
                    found = found || (r.algorithm == alg && r.seed == seed && r.target_domain == target &&
                                      r.round == 4);
                CHECK(found);
            }
    fs::remove_all(dir);
}

TEST_CASE("reruns and resume reproduce results byte for byte") {
    auto cfg = ExperimentConfig::parse(kTinyConfig);

    const fs::path d1 = fresh_dir("hfedf_cli_a");
    const fs::path d2 = fresh_dir("hfedf_cli_b");
    const fs::path d3 = fresh_dir("hfedf_cli_c");

    RunOptions o1{d1.string(), 1, std::nullopt};
    RunOptions o2{d2.string(), 3, std::nullopt};  // parallel cells
    run_to_directory(cfg, o1);
    run_to_directory(cfg, o2);
    CHECK(slurp(d1 / "results.csv") == slurp(d2 / "results.csv"));
    CHECK(slurp(d1 / "summary.csv") == slurp(d2 / "summary.csv"));
    CHECK(slurp(d1 / "trace.jsonl") == slurp(d2 / "trace.jsonl"));

    RunOptions o3{d3.string(), 2, std::nullopt};
    resume_from_manifest(d1 / "manifest.json", o3);
    CHECK(slurp(d1 / "results.csv") == slurp(d3 / "results.csv"));

    fs::remove_all(d1);
    fs::remove_all(d2);
    fs::remove_all(d3);
}

TEST_CASE("seed override restricts the grid and is recorded") {
    auto cfg = ExperimentConfig::parse(kTinyConfig);
    const fs::path dir = fresh_dir("hfedf_cli_seed");
    RunOptions opts{dir.string(), 1, 7};
    RunReport report = run_to_directory(cfg, opts);
    for (const auto& r : report.table.rows) CHECK(r.seed == 7);

    auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest.at("seed_override").get<std::uint64_t>() == 7);
    CHECK(manifest.at("config").at("seeds").get<std::vector<std::uint64_t>>() ==
          std::vector<std::uint64_t>{7});
    fs::remove_all(dir);
}

TEST_CASE("zero rounds still evaluates the initial models near chance") {
    auto cfg = ExperimentConfig::parse(kTinyConfig);
    cfg.spec.fed.rounds = 0;
    cfg.algorithms = {Algorithm::FedAvg, Algorithm::Local};
    const fs::path dir = fresh_dir("hfedf_cli_zero");
    RunOptions opts{dir.string(), 1, std::nullopt};
    RunReport report = run_to_directory(cfg, opts);
    for (const auto& r : report.table.rows) {
        CHECK(r.round == 0);
        CHECK(r.ood_acc < 0.75);  // chance is 1/3 on 45 samples
        CHECK(r.ood_acc >= 0.0);
    }
    fs::remove_all(dir);
}

TEST_CASE("diverging cells are flagged in the manifest without killing the grid") {
    auto cfg = ExperimentConfig::parse(kTinyConfig);
    cfg.spec.fed.client_lr = 1e100;  // guarantees a non-finite loss within a round
    cfg.algorithms = {Algorithm::FedAvg, Algorithm::Local};
    const fs::path dir = fresh_dir("hfedf_cli_diverge");
    RunOptions opts{dir.string(), 1, std::nullopt};
    RunReport report = run_to_directory(cfg, opts);

    CHECK(!report.failed_cells.empty());
    auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest.at("failed_cells").size() == report.failed_cells.size());
    CHECK(fs::exists(dir / "results.csv"));
    fs::remove_all(dir);
}

TEST_CASE("optional exports write confidences and the dataset") {
    auto cfg = ExperimentConfig::parse(kTinyConfig);
    cfg.spec.fed.rounds = 2;
    cfg.algorithms = {Algorithm::FedAvg};
    cfg.seeds = {1};
    cfg.export_confidences = true;
    cfg.export_dataset = true;
    const fs::path dir = fresh_dir("hfedf_cli_exports");
    RunOptions opts{dir.string(), 1, std::nullopt};
    run_to_directory(cfg, opts);

    CHECK(fs::exists(dir / "confidences.jsonl"));
    REQUIRE(fs::exists(dir / "dataset-s1.jsonl"));
    auto domains = read_domains_jsonl(dir / "dataset-s1.jsonl");
    CHECK(domains.size() == 3);
    CHECK(domains[0].size() == 45);

    std::ifstream conf(dir / "confidences.jsonl");
    std::string line;
    std::size_t records = 0, ood_records = 0;
    while (std::getline(conf, line)) {
        if (line.empty()) continue;
        auto rec = nlohmann::json::parse(line);
        const double p = rec.at("max_prob").get<double>();
        CHECK(p > 0.0);
        CHECK(p <= 1.0);
        if (rec.at("tag").get<std::string>() == "ood") ++ood_records;
        ++records;
    }
    // 3 targets x 2 clients x (45 ood samples each), plus the id records
    CHECK(ood_records == 3 * 2 * 45);
    CHECK(records > ood_records);
    fs::remove_all(dir);
}

TEST_CASE("environment root is used when no directory is given") {
    auto cfg = ExperimentConfig::parse("{}");
    const fs::path root = fresh_dir("hfedf_env_root");
    setenv(kOutputRootEnv, root.string().c_str(), 1);
    RunOptions opts;
    CHECK(resolve_output_dir(cfg, opts) == root / "hfedf-run");
    unsetenv(kOutputRootEnv);
    cfg.output_dir = "explicit";
    CHECK(resolve_output_dir(cfg, opts) == fs::path("explicit"));
    opts.out_dir = "flag";
    CHECK(resolve_output_dir(cfg, opts) == fs::path("flag"));
}

TEST_CASE("cli entry point handles run and validate") {
    const fs::path cfg_path = fs::temp_directory_path() / "hfedf_cli_cfg.json";
    {
        std::ofstream out(cfg_path);
        out << kTinyConfig;
    }
    const fs::path dir = fresh_dir("hfedf_cli_main");

    const std::string dir_str = dir.string();
    const char* validate_argv[] = {"hfedf", "validate", cfg_path.c_str()};
    CHECK(cli_main(3, validate_argv) == 0);

    const char* run_argv[] = {"hfedf", "run", cfg_path.c_str(), "--out", dir_str.c_str(), "--jobs", "2"};
    CHECK(cli_main(7, run_argv) == 0);
    CHECK(fs::exists(dir / "results.csv"));

    const char* bad_argv[] = {"hfedf", "validate", "/nonexistent/config.json"};
    CHECK(cli_main(3, bad_argv) == 1);

    fs::remove(cfg_path);
    fs::remove_all(dir);
}
