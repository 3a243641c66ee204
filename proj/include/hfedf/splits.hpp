#pragma once

#include <vector>

#include "hfedf/dataset.hpp"
#include "hfedf/rng.hpp"

namespace hfedf {

/// Assignment of domain shards to clients: every client holds parts from
/// exactly `domains_per_client` distinct domains, parts are disjoint, and
/// their union covers every source sample.
struct SplitPlan {
    struct Part {
        int domain_id = 0;
        std::vector<std::size_t> indices;  // sample rows within that domain
    };
    int n_clients = 0;
    int domains_per_client = 0;
    std::vector<std::vector<Part>> assignments;  // [client] -> parts
};

/// Splits source domains across clients: with a = floor(N*d/|Z|) and
/// b = N*d mod |Z|, the b largest domains (ties by domain_id) are cut into
/// a+1 near-equal parts and the rest into a parts; parts are then dealt
/// round-robin so each client ends up with d distinct domains.
SplitPlan split_domains(const std::vector<DomainDataset>& domains, int n_clients, int domains_per_client,
                        RngStream& rng);

/// Identifies one sample as (domain, row) for provenance tracking.
struct SampleRef {
    int domain_id = 0;
    std::size_t index = 0;
    bool operator==(const SampleRef&) const = default;
    auto operator<=>(const SampleRef&) const = default;
};

struct ClientData {
    Matrix train_x;
    std::vector<int> train_y;
    Matrix val_x;
    std::vector<int> val_y;
    std::vector<SampleRef> train_src;
    std::vector<SampleRef> val_src;
};

/// Per-client train/validation data plus the shared out-of-distribution test
/// set drawn from the left-out target domain.
struct EvalSplit {
    std::vector<ClientData> clients;
    Matrix ood_x;
    std::vector<int> ood_y;
    std::vector<SampleRef> ood_src;
    int target_domain = -1;
};

/// Carves a stratified holdout (default 10%) out of every client shard; the
/// ood test set is the entire target domain.
EvalSplit make_eval_split(const SplitPlan& plan, const std::vector<DomainDataset>& domains, int target_domain,
                          double holdout_frac, RngStream& rng);

/// Moves `shots_per_client` distinct target-domain samples into each client's
/// training set, removing them from the ood test set.
EvalSplit inject_few_shot(const EvalSplit& split, int shots_per_client, RngStream& rng);

}  // namespace hfedf
