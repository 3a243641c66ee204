#include "hfedf/experiment.hpp"

#include <stdexcept>

#include "hfedf/errors.hpp"
#include "hfedf/metrics.hpp"

namespace hfedf {

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::HFedF: return "hfedf";
        case Algorithm::HFedFNoGA: return "hfedf-no-ga";
        case Algorithm::HFedFNoEMA: return "hfedf-no-ema";
        case Algorithm::HFedFNoGANoEMA: return "hfedf-no-ga-no-ema";
        case Algorithm::FedAvg: return "fedavg";
        case Algorithm::FedProx: return "fedprox";
        case Algorithm::Local: return "local";
        case Algorithm::Central: return "central";
    }
    throw std::invalid_argument("to_string: unknown algorithm");
}

Algorithm algorithm_from_string(const std::string& s) {
    if (s == "hfedf") return Algorithm::HFedF;
    if (s == "hfedf-no-ga") return Algorithm::HFedFNoGA;
    if (s == "hfedf-no-ema") return Algorithm::HFedFNoEMA;
    if (s == "hfedf-no-ga-no-ema") return Algorithm::HFedFNoGANoEMA;
    if (s == "fedavg") return Algorithm::FedAvg;
    if (s == "fedprox") return Algorithm::FedProx;
    if (s == "local") return Algorithm::Local;
    if (s == "central") return Algorithm::Central;
    throw ConfigError("algorithms: unknown algorithm '" + s + "'");
}

bool is_hfedf_family(Algorithm a) {
    return a == Algorithm::HFedF || a == Algorithm::HFedFNoGA || a == Algorithm::HFedFNoEMA ||
           a == Algorithm::HFedFNoGANoEMA;
}

namespace {

std::string tag_of(int target_domain) { return "t" + std::to_string(target_domain); }

struct CellEval {
    double id_acc;
    double ood_acc;
};

CellEval evaluate(const ClientModel& model, const std::vector<ParamVector>& per_client,
                  const EvalSplit& split) {
    double id = 0.0, ood = 0.0;
    for (std::size_t i = 0; i < per_client.size(); ++i) {
        const auto& cd = split.clients[i];
        id += accuracy(model, per_client[i], cd.val_x, cd.val_y);
        ood += accuracy(model, per_client[i], split.ood_x, split.ood_y);
    }
    const double n = static_cast<double>(per_client.size());
    return {id / n, ood / n};
}

}  // namespace

EvalSplit build_cell_split(const ExperimentSpec& spec, std::uint64_t seed, int target_domain) {
    if (target_domain < 0 || target_domain >= spec.data.n_domains)
        throw std::invalid_argument("run_cell: target domain out of range");
    RngStream data_rng(seed, "data");
    auto domains = gen_synthetic_domains(spec.data, data_rng);

    std::vector<DomainDataset> sources;
    for (auto& d : domains)
        if (d.domain_id != target_domain) sources.push_back(d);

    const std::string tag = tag_of(target_domain);
    RngStream split_rng(seed, tag + "/split");
    SplitPlan plan = split_domains(sources, spec.n_clients, spec.domains_per_client, split_rng);

    RngStream holdout_rng(seed, tag + "/holdout");
    EvalSplit split = make_eval_split(plan, domains, target_domain, spec.holdout_frac, holdout_rng);

    if (spec.few_shot_shots > 0) {
        RngStream fs_rng(seed, tag + "/fewshot");
        split = inject_few_shot(split, spec.few_shot_shots, fs_rng);
    }
    return split;
}

CellResult run_cell(const ExperimentSpec& spec, Algorithm algorithm, std::uint64_t seed, int target_domain) {
    spec.fed.validate();
    const EvalSplit split = build_cell_split(spec, seed, target_domain);
    const ClientModel model(static_cast<std::size_t>(spec.data.feature_dim), spec.hidden_sizes,
                            static_cast<std::size_t>(spec.data.n_classes));
    const std::string tag = tag_of(target_domain);
    const auto n = static_cast<std::size_t>(spec.n_clients);
    const int T = spec.fed.rounds;

    CellResult result;
    auto record = [&](int round, const std::vector<ParamVector>& per_client) {
        CellEval ev = evaluate(model, per_client, split);
        result.rows.push_back({to_string(algorithm), seed, target_domain, round, ev.id_acc, ev.ood_acc});
        result.final_client_params = per_client;
    };
    auto should_eval = [&](int round) {
        return round == T || (spec.eval_interval > 0 && round % spec.eval_interval == 0);
    };

    const ClientOpts opts{spec.fed.local_epochs, spec.fed.batch_size, spec.fed.client_lr,
                          spec.fed.client_weight_decay};

    if (is_hfedf_family(algorithm)) {
        HFedFConfig cfg = spec.fed;
        if (algorithm == Algorithm::HFedFNoGA || algorithm == Algorithm::HFedFNoGANoEMA)
            cfg.gradalign_enabled = false;
        if (algorithm == Algorithm::HFedFNoEMA || algorithm == Algorithm::HFedFNoGANoEMA)
            cfg.ema_enabled = false;
        FederationState state = make_federation(model, n, cfg, seed, tag, spec.embedding_dim);
        auto generated = [&]() {
            std::vector<ParamVector> out;
            for (std::size_t i = 0; i < n; ++i) out.push_back(state.hypernet.generate(i));
            return out;
        };
        record(0, generated());
        for (int t = 1; t <= T; ++t) {
            result.traces.push_back(hfedf_round(state, split));
            if (should_eval(t)) record(t, generated());
        }
    } else if (algorithm == Algorithm::FedAvg || algorithm == Algorithm::FedProx) {
        RngStream init_rng(seed, tag + "/model-init");
        ParamVector global = model.init_params(init_rng);
        std::vector<RngStream> streams;
        for (std::size_t i = 0; i < n; ++i)
            streams.emplace_back(seed, tag + "/client-" + std::to_string(i));
        record(0, std::vector<ParamVector>(n, global));
        for (int t = 1; t <= T; ++t) {
            std::vector<ParamVector> broadcast(n, global);
            global = algorithm == Algorithm::FedAvg
                         ? fedavg_round(model, broadcast, split, opts, streams)
                         : fedprox_round(model, broadcast, split, opts, spec.fedprox_coeff, streams);
            if (should_eval(t)) record(t, std::vector<ParamVector>(n, global));
        }
    } else if (algorithm == Algorithm::Local) {
        std::vector<ParamVector> params;
        std::vector<RngStream> streams;
        for (std::size_t i = 0; i < n; ++i) {
            RngStream init_rng(seed, tag + "/local-init-" + std::to_string(i));
            params.push_back(model.init_params(init_rng));
            streams.emplace_back(seed, tag + "/client-" + std::to_string(i));
        }
        record(0, params);
        for (int t = 1; t <= T; ++t) {
            for (std::size_t i = 0; i < n; ++i) {
                const auto& cd = split.clients[i];
                params[i] = client_update(model, params[i], cd.train_x, cd.train_y, opts, streams[i]).params;
            }
            if (should_eval(t)) record(t, params);
        }
    } else {  // Central: one model on the pooled source data
        RngStream init_rng(seed, tag + "/model-init");
        ParamVector global = model.init_params(init_rng);
        RngStream stream(seed, tag + "/central");
        std::vector<double> pooled_staging;
        std::vector<int> pooled_y;
        for (const auto& cd : split.clients) {
            pooled_staging.insert(pooled_staging.end(), cd.train_x.values().begin(), cd.train_x.values().end());
            pooled_y.insert(pooled_y.end(), cd.train_y.begin(), cd.train_y.end());
        }
        Matrix pooled_x(pooled_y.size(), split.ood_x.cols());
        pooled_x.values() = std::move(pooled_staging);
        record(0, std::vector<ParamVector>(n, global));
        for (int t = 1; t <= T; ++t) {
            global = client_update(model, global, pooled_x, pooled_y, opts, stream).params;
            if (should_eval(t)) record(t, std::vector<ParamVector>(n, global));
        }
    }
    return result;
}

ResultTable run_algorithm(const ExperimentSpec& spec, Algorithm algorithm,
                          const std::vector<std::uint64_t>& seeds) {
    ResultTable table;
    for (std::uint64_t seed : seeds)
        for (int target = 0; target < spec.data.n_domains; ++target) {
            CellResult cell = run_cell(spec, algorithm, seed, target);
            table.rows.insert(table.rows.end(), cell.rows.begin(), cell.rows.end());
        }
    return table;
}

}  // namespace hfedf
