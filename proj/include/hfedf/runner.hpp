#pragma once

#include <filesystem>
#include <optional>

#include "hfedf/exp_config.hpp"
#include "hfedf/results.hpp"

namespace hfedf {

struct RunOptions {
    std::string out_dir;  // overrides config.output_dir and the env root
    int jobs = 1;
    std::optional<std::uint64_t> seed_override;
};

struct RunReport {
    std::filesystem::path dir;
    ResultTable table;
    std::vector<std::string> failed_cells;  // "algorithm/seed/target: reason"
};

/// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "HFEDF_OUT_ROOT";

std::filesystem::path resolve_output_dir(const ExperimentConfig& config, const RunOptions& opts);

/// Runs the full (algorithm x seed x target) grid, optionally across worker
/// threads, and writes manifest.json, results.csv, summary.csv, trace.jsonl
/// (and confidences.jsonl when enabled) into the run directory. Output bytes
/// do not depend on the job count.
RunReport run_to_directory(ExperimentConfig config, const RunOptions& opts);

/// Re-runs a finished experiment from its manifest alone.
RunReport resume_from_manifest(const std::filesystem::path& manifest_path, RunOptions opts);

}  // namespace hfedf
