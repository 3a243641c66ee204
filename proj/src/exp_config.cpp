#include "hfedf/exp_config.hpp"

#include <set>

#include "hfedf/errors.hpp"
#include "hfedf/version.hpp"

namespace hfedf {

namespace {

using nlohmann::json;

/// Strict reader over one JSON object level: every get_* records the key, and
/// finish() rejects keys nobody asked for.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "config: expected an object"
                                                             : path_ + ": expected an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        known_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(field(key) + ": wrong type");
        }
    }

    void get_algorithms(const char* key, std::vector<Algorithm>& out) {
        known_.insert(key);
        if (!j_.contains(key)) return;
        std::vector<std::string> names;
        try {
            names = j_.at(key).get<std::vector<std::string>>();
        } catch (const json::exception&) {
            throw ConfigError(field(key) + ": expected a list of algorithm names");
        }
        out.clear();
        for (const auto& n : names) out.push_back(algorithm_from_string(n));
    }

    template <typename Enum>
    void get_enum(const char* key, Enum& out, Enum (*parse)(const std::string&)) {
        known_.insert(key);
        if (!j_.contains(key)) return;
        if (!j_.at(key).is_string()) throw ConfigError(field(key) + ": expected a string");
        try {
            out = parse(j_.at(key).get<std::string>());
        } catch (const ConfigError& e) {
            throw ConfigError(field(key) + ": " + e.what());
        }
    }

    const json* child(const char* key) {
        known_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!known_.count(key)) throw ConfigError(field(key.c_str()) + ": unknown key");
    }

private:
    std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    const json& j_;
    std::string path_;
    std::set<std::string> known_;
};

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    ObjectReader top(j, "");

    if (const json* dj = top.child("dataset")) {
        ObjectReader ds(*dj, "dataset");
        ds.get("n_domains", cfg.spec.data.n_domains);
        ds.get("n_classes", cfg.spec.data.n_classes);
        ds.get("samples_per_domain", cfg.spec.data.samples_per_domain);
        ds.get("feature_dim", cfg.spec.data.feature_dim);
        ds.get("shift_strength", cfg.spec.data.shift_strength);
        ds.finish();
    }

    top.get("n_clients", cfg.spec.n_clients);
    top.get("domains_per_client", cfg.spec.domains_per_client);
    top.get("few_shot_shots", cfg.spec.few_shot_shots);
    top.get("hidden_sizes", cfg.spec.hidden_sizes);
    top.get("rounds", cfg.spec.fed.rounds);
    top.get("local_epochs", cfg.spec.fed.local_epochs);
    top.get("batch_size", cfg.spec.fed.batch_size);
    top.get("server_lr", cfg.spec.fed.server_lr);
    top.get("client_lr", cfg.spec.fed.client_lr);
    top.get("client_weight_decay", cfg.spec.fed.client_weight_decay);
    top.get("server_weight_decay", cfg.spec.fed.server_weight_decay);
    top.get("ema_decay", cfg.spec.fed.ema_decay);
    top.get("ema_warmup", cfg.spec.fed.ema_warmup);
    top.get("ema_enabled", cfg.spec.fed.ema_enabled);
    top.get("gradalign_enabled", cfg.spec.fed.gradalign_enabled);
    top.get_enum("gradalign_sign", cfg.spec.fed.gradalign_sign, gradalign_sign_from_string);
    top.get_enum("embedding_mode", cfg.spec.fed.embedding_mode, embedding_mode_from_string);
    top.get_enum("server_optimizer", cfg.spec.fed.server_optimizer, server_optimizer_from_string);
    top.get("server_decay_on_embeddings", cfg.spec.fed.server_decay_on_embeddings);
    top.get_enum("vjp_seed", cfg.spec.fed.vjp_seed, vjp_seed_from_string);
    top.get("fedprox_coeff", cfg.spec.fedprox_coeff);
    top.get("eval_interval", cfg.spec.eval_interval);
    top.get("embedding_dim", cfg.spec.embedding_dim);
    top.get("holdout_frac", cfg.spec.holdout_frac);
    top.get_algorithms("algorithms", cfg.algorithms);
    top.get("seeds", cfg.seeds);
    top.get("output_dir", cfg.output_dir);
    top.get("export_confidences", cfg.export_confidences);
    top.get("export_dataset", cfg.export_dataset);
    top.finish();

    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    return from_json(j);
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["dataset"] = {{"n_domains", spec.data.n_domains},
                    {"n_classes", spec.data.n_classes},
                    {"samples_per_domain", spec.data.samples_per_domain},
                    {"feature_dim", spec.data.feature_dim},
                    {"shift_strength", spec.data.shift_strength}};
    j["n_clients"] = spec.n_clients;
    j["domains_per_client"] = spec.domains_per_client;
    j["few_shot_shots"] = spec.few_shot_shots;
    j["hidden_sizes"] = spec.hidden_sizes;
    j["rounds"] = spec.fed.rounds;
    j["local_epochs"] = spec.fed.local_epochs;
    j["batch_size"] = spec.fed.batch_size;
    j["server_lr"] = spec.fed.server_lr;
    j["client_lr"] = spec.fed.client_lr;
    j["client_weight_decay"] = spec.fed.client_weight_decay;
    j["server_weight_decay"] = spec.fed.server_weight_decay;
    j["ema_decay"] = spec.fed.ema_decay;
    j["ema_warmup"] = spec.fed.ema_warmup;
    j["ema_enabled"] = spec.fed.ema_enabled;
    j["gradalign_enabled"] = spec.fed.gradalign_enabled;
    j["gradalign_sign"] = to_string(spec.fed.gradalign_sign);
    j["embedding_mode"] = to_string(spec.fed.embedding_mode);
    j["server_optimizer"] = to_string(spec.fed.server_optimizer);
    j["server_decay_on_embeddings"] = spec.fed.server_decay_on_embeddings;
    j["vjp_seed"] = to_string(spec.fed.vjp_seed);
    j["fedprox_coeff"] = spec.fedprox_coeff;
    j["eval_interval"] = spec.eval_interval;
    j["embedding_dim"] = spec.embedding_dim;
    j["holdout_frac"] = spec.holdout_frac;
    std::vector<std::string> algos;
    for (Algorithm a : algorithms) algos.push_back(to_string(a));
    j["algorithms"] = algos;
    j["seeds"] = seeds;
    j["output_dir"] = output_dir;
    j["export_confidences"] = export_confidences;
    j["export_dataset"] = export_dataset;
    return j;
}

void ExperimentConfig::validate() const {
    const auto& d = spec.data;
    if (d.n_domains < 2) throw ConfigError("dataset.n_domains: must be >= 2");
    if (d.n_classes < 2) throw ConfigError("dataset.n_classes: must be >= 2");
    if (d.samples_per_domain < 1) throw ConfigError("dataset.samples_per_domain: must be >= 1");
    if (d.feature_dim < 2) throw ConfigError("dataset.feature_dim: must be >= 2");
    if (d.shift_strength < 0.0) throw ConfigError("dataset.shift_strength: must be >= 0");

    if (spec.n_clients < 2) throw ConfigError("n_clients: must be >= 2");
    const int sources = d.n_domains - 1;
    if (spec.domains_per_client < 1 || spec.domains_per_client > sources)
        throw ConfigError("domains_per_client: must be in [1, n_domains-1]");
    if (spec.n_clients * spec.domains_per_client < sources)
        throw ConfigError("domains_per_client: n_clients*d must cover the n_domains-1 source domains");
    if (spec.few_shot_shots < 0) throw ConfigError("few_shot_shots: must be >= 0");
    if (spec.few_shot_shots * spec.n_clients > d.samples_per_domain)
        throw ConfigError("few_shot_shots: shots*n_clients exceeds samples_per_domain");
    for (std::size_t h : spec.hidden_sizes)
        if (h == 0) throw ConfigError("hidden_sizes: layer widths must be >= 1");
    if (spec.eval_interval < 1) throw ConfigError("eval_interval: must be >= 1");
    if (spec.fedprox_coeff < 0.0) throw ConfigError("fedprox_coeff: must be >= 0");
    if (spec.holdout_frac < 0.0 || spec.holdout_frac >= 1.0)
        throw ConfigError("holdout_frac: must be in [0,1)");
    if (algorithms.empty()) throw ConfigError("algorithms: must not be empty");
    if (seeds.empty()) throw ConfigError("seeds: must not be empty");
    spec.fed.validate();
}

bool ExperimentConfig::operator==(const ExperimentConfig& other) const {
    return to_json() == other.to_json();
}

nlohmann::json make_manifest(const ExperimentConfig& config, std::optional<std::uint64_t> seed_override,
                             const std::vector<std::string>& failed_cells) {
    nlohmann::json j;
    j["format"] = "hfedf-manifest-v1";
    j["hfedf_version"] = kVersion;
    j["config"] = config.to_json();
    j["decisions"] = {
        {"weight_init", "uniform fan-in, bound 1/sqrt(fan_in), biases included"},
        {"embedding_init", "normal(0,1)"},
        {"hypernet_heads", "affine (weight and bias)"},
        {"vjp_seed_convention", "initial minus updated parameters (descent direction)"},
        {"holdout", "stratified per class, largest-remainder rounding"},
        {"largest_domain_ties", "domain_id ascending"},
        {"id_accuracy", "unweighted mean over client validation sets"},
        {"accuracy_ties", "lowest class index"},
        {"leaky_relu_slope", 0.01},
    };
    j["streams"] = {
        {"generator", "xoshiro256++ seeded by splitmix64(seed xor fnv1a(label))"},
        {"labels",
         "data, t{target}/split, t{target}/holdout, t{target}/fewshot, t{target}/hn-init, "
         "t{target}/client-{i}, t{target}/server, t{target}/model-init, t{target}/local-init-{i}, "
         "t{target}/central"},
    };
    if (seed_override)
        j["seed_override"] = *seed_override;
    else
        j["seed_override"] = nullptr;
    j["failed_cells"] = failed_cells;
    return j;
}

ExperimentConfig config_from_manifest(const nlohmann::json& manifest) {
    if (!manifest.is_object() || !manifest.contains("config"))
        throw ConfigError("manifest: missing config section");
    ExperimentConfig cfg = ExperimentConfig::from_json(manifest.at("config"));
    if (manifest.contains("seed_override") && !manifest.at("seed_override").is_null())
        cfg.seeds = {manifest.at("seed_override").get<std::uint64_t>()};
    return cfg;
}

}  // namespace hfedf
