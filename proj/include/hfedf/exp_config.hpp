#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hfedf/experiment.hpp"

namespace hfedf {

/// Declarative description of a full run: the experiment spec plus the
/// algorithm list, seeds, and output options. Parsing is strict; unknown
/// keys, type errors, and constraint violations are reported with the field
/// path, and defaults are applied only for absent keys.
struct ExperimentConfig {
    ExperimentSpec spec;
    std::vector<Algorithm> algorithms = {Algorithm::HFedF, Algorithm::FedAvg, Algorithm::Local};
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    std::string output_dir;
    bool export_confidences = false;
    bool export_dataset = false;

    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    void validate() const;

    bool operator==(const ExperimentConfig&) const;
};

/// Reproduction record: the fully resolved config, every defaulted decision,
/// the code version, and the stream-derivation scheme.
nlohmann::json make_manifest(const ExperimentConfig& config,
                             std::optional<std::uint64_t> seed_override,
                             const std::vector<std::string>& failed_cells);

ExperimentConfig config_from_manifest(const nlohmann::json& manifest);

}  // namespace hfedf
