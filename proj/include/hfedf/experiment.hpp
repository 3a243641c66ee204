#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hfedf/dataset.hpp"
#include "hfedf/federation.hpp"
#include "hfedf/results.hpp"

namespace hfedf {

enum class Algorithm {
    HFedF,
    HFedFNoGA,
    HFedFNoEMA,
    HFedFNoGANoEMA,
    FedAvg,
    FedProx,
    Local,
    Central,
};

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);
bool is_hfedf_family(Algorithm a);

/// Everything needed to run one algorithm on the synthetic benchmark:
/// dataset geometry, client/split layout, model shape, and training knobs.
struct ExperimentSpec {
    SyntheticSpec data;
    int n_clients = 3;
    int domains_per_client = 1;
    int few_shot_shots = 0;
    std::vector<std::size_t> hidden_sizes = {32};
    HFedFConfig fed;
    double fedprox_coeff = 1e-2;
    int eval_interval = 5;
    std::size_t embedding_dim = 0;  // 0: use the 1 + N/4 rule
    double holdout_frac = 0.10;
};

struct CellResult {
    std::vector<ResultRow> rows;
    std::vector<RoundTrace> traces;                // populated by the hfedf family
    std::vector<ParamVector> final_client_params;  // one per client at the final round
};

/// Trains one (algorithm, seed, target domain) cell for T rounds, recording
/// id/ood accuracy at round 0, every eval_interval rounds, and the final
/// round. Deterministic given its arguments.
CellResult run_cell(const ExperimentSpec& spec, Algorithm algorithm, std::uint64_t seed, int target_domain);

/// Full leave-one-domain-out sweep for one algorithm across seeds.
ResultTable run_algorithm(const ExperimentSpec& spec, Algorithm algorithm,
                          const std::vector<std::uint64_t>& seeds);

/// The split/holdout/injection pipeline shared by every algorithm in a cell.
EvalSplit build_cell_split(const ExperimentSpec& spec, std::uint64_t seed, int target_domain);

}  // namespace hfedf
