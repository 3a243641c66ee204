#include "hfedf/federation.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "hfedf/errors.hpp"

namespace hfedf {

void HFedFConfig::validate() const {
    if (rounds < 0) throw ConfigError("rounds: must be >= 0");
    if (local_epochs < 1) throw ConfigError("local_epochs: must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size: must be >= 1");
    if (!(server_lr > 0.0)) throw ConfigError("server_lr: must be > 0");
    if (!(client_lr > 0.0)) throw ConfigError("client_lr: must be > 0");
    if (client_weight_decay < 0.0) throw ConfigError("client_weight_decay: must be >= 0");
    if (server_weight_decay < 0.0) throw ConfigError("server_weight_decay: must be >= 0");
    if (ema_decay < 0.0 || ema_decay > 1.0) throw ConfigError("ema_decay: must be in [0,1]");
    if (ema_warmup < 0) throw ConfigError("ema_warmup: must be >= 0");
}

namespace {

LocalFit run_local(const ClientModel& model, ParamVector params, const Matrix& x, const std::vector<int>& y,
                   const ClientOpts& opts, const ParamVector* anchor, double prox_coeff, RngStream& rng) {
    if (x.rows() == 0) throw ConfigError("client_update: empty shard");
    if (x.rows() != y.size()) throw std::invalid_argument("client_update: labels do not match inputs");
    if (opts.epochs < 1) throw ConfigError("client_update: epochs must be >= 1");
    if (opts.batch_size < 1) throw ConfigError("client_update: batch_size must be >= 1");
    if (anchor && anchor->values.size() != params.values.size())
        throw std::invalid_argument("client_update: anchor layout mismatch");

    const std::size_t n = x.rows();
    const auto bs = static_cast<std::size_t>(opts.batch_size);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += bs) {
            const std::size_t len = std::min(bs, n - start);
            Matrix bx(len, x.cols());
            std::vector<int> by(len);
            for (std::size_t r = 0; r < len; ++r) {
                auto src = x.row(order[start + r]);
                std::copy(src.begin(), src.end(), bx.row(r).begin());
                by[r] = y[order[start + r]];
            }
            auto bw = model.backward(params, bx, by);
            if (!std::isfinite(bw.loss)) throw NumericError("client_update: non-finite loss");
            loss_sum += bw.loss;
            ++steps;

            auto& g = bw.grad.values;
            if (opts.weight_decay != 0.0) add_scaled(g, params.values, opts.weight_decay);
            if (anchor && prox_coeff != 0.0)
                for (std::size_t i = 0; i < g.size(); ++i)
                    g[i] += prox_coeff * (params.values[i] - anchor->values[i]);
            add_scaled(params.values, g, -opts.lr);
        }
    }
    return {std::move(params), loss_sum / static_cast<double>(steps)};
}

}  // namespace

LocalFit client_update(const ClientModel& model, ParamVector params, const Matrix& x,
                       const std::vector<int>& y, const ClientOpts& opts, RngStream& rng) {
    return run_local(model, std::move(params), x, y, opts, nullptr, 0.0, rng);
}

LocalFit client_update_prox(const ClientModel& model, ParamVector params, const Matrix& x,
                            const std::vector<int>& y, const ClientOpts& opts, const ParamVector& anchor,
                            double prox_coeff, RngStream& rng) {
    if (prox_coeff < 0.0) throw std::invalid_argument("client_update_prox: negative coefficient");
    return run_local(model, std::move(params), x, y, opts, &anchor, prox_coeff, rng);
}

AlignResult grad_align(const std::vector<std::vector<double>>& grads, GradAlignSign sign) {
    if (grads.empty()) throw std::invalid_argument("grad_align: need at least one gradient");
    const std::size_t dim = grads.front().size();
    for (const auto& g : grads)
        if (g.size() != dim) throw std::invalid_argument("grad_align: gradient length mismatch");

    std::vector<double> avg(dim, 0.0);
    for (const auto& g : grads) add_scaled(avg, g, 1.0);
    const double inv_n = 1.0 / static_cast<double>(grads.size());
    for (double& v : avg) v *= inv_n;

    AlignResult out;
    for (const auto& g : grads) out.cosines.push_back(cosine_similarity(avg, g));
    std::vector<double> scores = out.cosines;
    if (sign == GradAlignSign::Negated)
        for (double& s : scores) s = -s;
    out.weights = softmax(scores);
    return out;
}

void ema_apply(std::span<double> current, EmaState& state, int t, int warmup, double decay) {
    if (decay < 0.0 || decay > 1.0) throw std::invalid_argument("ema_apply: decay must be in [0,1]");
    if (t == warmup) {
        state.shadow.assign(current.begin(), current.end());
        state.initialized = true;
    } else if (t > warmup) {
        if (!state.initialized) throw std::logic_error("ema_apply: shadow used before the warm-up round");
        if (state.shadow.size() != current.size()) throw std::invalid_argument("ema_apply: size mismatch");
        for (std::size_t i = 0; i < current.size(); ++i) {
            state.shadow[i] = decay * current[i] + (1.0 - decay) * state.shadow[i];
            current[i] = state.shadow[i];
        }
    }
}

namespace {

void adam_update(std::span<double> params, std::span<const double> grad, AdamState& st, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    if (st.m.empty()) {
        st.m.assign(params.size(), 0.0);
        st.v.assign(params.size(), 0.0);
    }
    ++st.step;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        st.m[i] = b1 * st.m[i] + (1.0 - b1) * grad[i];
        st.v[i] = b2 * st.v[i] + (1.0 - b2) * grad[i] * grad[i];
        params[i] -= lr * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + eps);
    }
}

std::string tagged(const std::string& tag, const std::string& name) {
    return tag.empty() ? name : tag + "/" + name;
}

}  // namespace

FederationState make_federation(const ClientModel& model, std::size_t n_clients, const HFedFConfig& config,
                                std::uint64_t seed, const std::string& stream_tag,
                                std::size_t embedding_dim_override) {
    config.validate();
    if (n_clients == 0) throw ConfigError("make_federation: need at least one client");
    const std::size_t edim =
        embedding_dim_override ? embedding_dim_override : default_embedding_dim(n_clients);
    Hypernetwork hn(model.layout(), n_clients, edim, {50, 50, 50, 50});
    RngStream init_rng(seed, tagged(stream_tag, "hn-init"));
    hn.init(init_rng);

    std::vector<RngStream> client_streams;
    for (std::size_t i = 0; i < n_clients; ++i)
        client_streams.emplace_back(seed, tagged(stream_tag, "client-" + std::to_string(i)));
    return {model,          std::move(hn), config,      0, EmaState{}, EmaState{}, AdamState{}, AdamState{},
            std::move(client_streams), RngStream(seed, tagged(stream_tag, "server"))};
}

RoundTrace hfedf_round(FederationState& state, const EvalSplit& split) {
    const std::size_t n = state.hypernet.n_clients();
    if (split.clients.size() != n) throw std::invalid_argument("hfedf_round: split does not match client count");
    const HFedFConfig& cfg = state.config;
    const ClientOpts opts{cfg.local_epochs, cfg.batch_size, cfg.client_lr, cfg.client_weight_decay};

    RoundTrace trace;
    trace.round = state.round;

    std::vector<std::vector<double>> g_thetas(n), g_nus(n);
    for (std::size_t i = 0; i < n; ++i) {
        ParamVector initial = state.hypernet.generate(i);
        const auto& cd = split.clients[i];
        LocalFit fit = client_update(state.client_model, initial, cd.train_x, cd.train_y, opts,
                                     state.client_streams[i]);
        trace.client_losses.push_back(fit.mean_loss);

        std::vector<double> seed(initial.values.size());
        if (cfg.vjp_seed == VjpSeedMode::ParamDelta) {
            // negative local improvement: the loss-gradient estimate the
            // server descends along
            for (std::size_t k = 0; k < seed.size(); ++k)
                seed[k] = initial.values[k] - fit.params.values[k];
        } else {
            auto bw = state.client_model.backward(initial, cd.train_x, cd.train_y);
            seed = std::move(bw.grad.values);
        }
        GradPair gp = state.hypernet.vjp(i, seed);
        g_thetas[i] = std::move(gp.g_theta);
        g_nus[i] = std::move(gp.g_nu_row);
    }

    // alignment weights, computed separately for trunk+head and embedding
    // gradients; each client's embedding gradient lives in its own row, so
    // the cosine runs over full-size vectors that are zero elsewhere
    const std::size_t edim = state.hypernet.embedding_dim();
    std::vector<std::vector<double>> nu_full(n, std::vector<double>(n * edim, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        std::copy(g_nus[i].begin(), g_nus[i].end(), nu_full[i].begin() + static_cast<std::ptrdiff_t>(i * edim));

    AlignResult theta_align = grad_align(g_thetas, cfg.gradalign_sign);
    AlignResult nu_align = grad_align(nu_full, cfg.gradalign_sign);
    if (!cfg.gradalign_enabled) {
        const double uniform = 1.0 / static_cast<double>(n);
        theta_align.weights.assign(n, uniform);
        nu_align.weights.assign(n, uniform);
    }
    trace.theta_weights = theta_align.weights;
    trace.theta_cosines = theta_align.cosines;
    trace.nu_weights = nu_align.weights;
    trace.nu_cosines = nu_align.cosines;

    std::vector<double> g_theta(state.hypernet.theta_size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) add_scaled(g_theta, g_thetas[i], theta_align.weights[i]);
    Matrix g_nu(n, edim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < edim; ++k) g_nu(i, k) = nu_align.weights[i] * g_nus[i][k];
    trace.theta_grad_norm = l2_norm(g_theta);
    trace.nu_grad_norm = l2_norm(g_nu.values());

    std::vector<double> theta = state.hypernet.theta_flat();
    Matrix& nu = state.hypernet.embeddings();
    if (cfg.server_weight_decay != 0.0) {
        add_scaled(g_theta, theta, cfg.server_weight_decay);
        if (cfg.server_decay_on_embeddings) add_scaled(g_nu.values(), nu.values(), cfg.server_weight_decay);
    }
    if (cfg.server_optimizer == ServerOptimizer::Sgd) {
        add_scaled(theta, g_theta, -cfg.server_lr);
        add_scaled(nu.values(), g_nu.values(), -cfg.server_lr);
    } else {
        adam_update(theta, g_theta, state.adam_theta, cfg.server_lr);
        adam_update(nu.values(), g_nu.values(), state.adam_nu, cfg.server_lr);
    }
    state.hypernet.set_theta_flat(theta);

    if (cfg.ema_enabled) {
        std::vector<double> smoothed = state.hypernet.theta_flat();
        ema_apply(smoothed, state.ema_theta, state.round, cfg.ema_warmup, cfg.ema_decay);
        state.hypernet.set_theta_flat(smoothed);
        ema_apply(nu.values(), state.ema_nu, state.round, cfg.ema_warmup, cfg.ema_decay);
    }

    if (cfg.embedding_mode == EmbeddingMode::RandomizedEachRound)
        state.hypernet.embeddings() = init_normal(n, edim, 1.0, state.server_stream);

    ++state.round;
    return trace;
}

namespace {

ParamVector fed_round_common(const ClientModel& model, const std::vector<ParamVector>& client_params,
                             const EvalSplit& split, const ClientOpts& opts, bool prox, double prox_coeff,
                             std::vector<RngStream>& streams) {
    const std::size_t n = client_params.size();
    if (n == 0) throw std::invalid_argument("fed round: no clients");
    if (split.clients.size() != n || streams.size() != n)
        throw std::invalid_argument("fed round: clients, split, and streams must agree");
    for (const auto& p : client_params)
        if (p.layout != model.layout()) throw std::invalid_argument("fed round: parameter layout mismatch");

    std::vector<ParamVector> updated;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& cd = split.clients[i];
        total += static_cast<double>(cd.train_y.size());
        if (opts.epochs >= 1) {
            LocalFit fit = prox ? client_update_prox(model, client_params[i], cd.train_x, cd.train_y, opts,
                                                     client_params[i], prox_coeff, streams[i])
                                : client_update(model, client_params[i], cd.train_x, cd.train_y, opts, streams[i]);
            updated.push_back(std::move(fit.params));
        } else {
            updated.push_back(client_params[i]);
        }
    }

    ParamVector global = ParamVector::zeros(model.layout());
    for (std::size_t i = 0; i < n; ++i)
        add_scaled(global.values, updated[i].values,
                   static_cast<double>(split.clients[i].train_y.size()) / total);
    return global;
}

}  // namespace

ParamVector fedavg_round(const ClientModel& model, const std::vector<ParamVector>& client_params,
                         const EvalSplit& split, const ClientOpts& opts, std::vector<RngStream>& streams) {
    return fed_round_common(model, client_params, split, opts, false, 0.0, streams);
}

ParamVector fedprox_round(const ClientModel& model, const std::vector<ParamVector>& client_params,
                          const EvalSplit& split, const ClientOpts& opts, double prox_coeff,
                          std::vector<RngStream>& streams) {
    return fed_round_common(model, client_params, split, opts, true, prox_coeff, streams);
}

// ---- checkpointing ----

namespace {

using nlohmann::json;

json stream_to_json(const RngStream& s) {
    auto st = s.state();
    return {{"seed", s.seed()},
            {"id", s.stream_id()},
            {"state", st.s},
            {"has_spare", st.has_spare},
            {"spare", st.spare}};
}

RngStream stream_from_json(const json& j) {
    RngStream s(j.at("seed").get<std::uint64_t>(), j.at("id").get<std::string>());
    RngStream::State st;
    auto arr = j.at("state").get<std::vector<std::uint64_t>>();
    std::copy(arr.begin(), arr.end(), st.s.begin());
    st.has_spare = j.at("has_spare").get<bool>();
    st.spare = j.at("spare").get<double>();
    s.restore(st);
    return s;
}

json ema_to_json(const EmaState& e) { return {{"initialized", e.initialized}, {"shadow", e.shadow}}; }

EmaState ema_from_json(const json& j) {
    return {j.at("initialized").get<bool>(), j.at("shadow").get<std::vector<double>>()};
}

json adam_to_json(const AdamState& a) { return {{"step", a.step}, {"m", a.m}, {"v", a.v}}; }

AdamState adam_from_json(const json& j) {
    return {j.at("step").get<long>(), j.at("m").get<std::vector<double>>(),
            j.at("v").get<std::vector<double>>()};
}

json config_to_json(const HFedFConfig& c) {
    return {{"rounds", c.rounds},
            {"local_epochs", c.local_epochs},
            {"batch_size", c.batch_size},
            {"server_lr", c.server_lr},
            {"client_lr", c.client_lr},
            {"client_weight_decay", c.client_weight_decay},
            {"server_weight_decay", c.server_weight_decay},
            {"ema_decay", c.ema_decay},
            {"ema_warmup", c.ema_warmup},
            {"ema_enabled", c.ema_enabled},
            {"gradalign_enabled", c.gradalign_enabled},
            {"gradalign_sign", to_string(c.gradalign_sign)},
            {"embedding_mode", to_string(c.embedding_mode)},
            {"server_optimizer", to_string(c.server_optimizer)},
            {"server_decay_on_embeddings", c.server_decay_on_embeddings},
            {"vjp_seed", to_string(c.vjp_seed)}};
}

HFedFConfig config_from_json(const json& j) {
    HFedFConfig c;
    c.rounds = j.at("rounds").get<int>();
    c.local_epochs = j.at("local_epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.server_lr = j.at("server_lr").get<double>();
    c.client_lr = j.at("client_lr").get<double>();
    c.client_weight_decay = j.at("client_weight_decay").get<double>();
    c.server_weight_decay = j.at("server_weight_decay").get<double>();
    c.ema_decay = j.at("ema_decay").get<double>();
    c.ema_warmup = j.at("ema_warmup").get<int>();
    c.ema_enabled = j.at("ema_enabled").get<bool>();
    c.gradalign_enabled = j.at("gradalign_enabled").get<bool>();
    c.gradalign_sign = gradalign_sign_from_string(j.at("gradalign_sign").get<std::string>());
    c.embedding_mode = embedding_mode_from_string(j.at("embedding_mode").get<std::string>());
    c.server_optimizer = server_optimizer_from_string(j.at("server_optimizer").get<std::string>());
    c.server_decay_on_embeddings = j.at("server_decay_on_embeddings").get<bool>();
    c.vjp_seed = vjp_seed_from_string(j.at("vjp_seed").get<std::string>());
    return c;
}

}  // namespace

void save_checkpoint(const FederationState& state, const std::filesystem::path& path) {
    json j;
    j["format"] = "hfedf-checkpoint-v1";
    j["round"] = state.round;
    j["config"] = config_to_json(state.config);

    const auto& dims = state.client_model.dims();
    j["client_model"] = {{"input_dim", dims.front()},
                         {"hidden", std::vector<std::size_t>(dims.begin() + 1, dims.end() - 1)},
                         {"n_classes", dims.back()}};

    const auto& hn = state.hypernet;
    j["hypernet"] = {{"n_clients", hn.n_clients()},
                     {"embedding_dim", hn.embedding_dim()},
                     {"trunk_widths", hn.trunk_widths()},
                     {"leaky_slope", hn.leaky_slope()},
                     {"theta", hn.theta_flat()},
                     {"embeddings", hn.embeddings().values()}};

    j["ema_theta"] = ema_to_json(state.ema_theta);
    j["ema_nu"] = ema_to_json(state.ema_nu);
    j["adam_theta"] = adam_to_json(state.adam_theta);
    j["adam_nu"] = adam_to_json(state.adam_nu);

    json streams = json::array();
    for (const auto& s : state.client_streams) streams.push_back(stream_to_json(s));
    j["client_streams"] = std::move(streams);
    j["server_stream"] = stream_to_json(state.server_stream);

    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write checkpoint: " + path.string());
    out << j.dump(2) << '\n';
}

FederationState load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read checkpoint: " + path.string());
    json j = json::parse(in);
    if (j.at("format").get<std::string>() != "hfedf-checkpoint-v1")
        throw ConfigError("unrecognized checkpoint format");

    const auto& cm = j.at("client_model");
    ClientModel model(cm.at("input_dim").get<std::size_t>(),
                      cm.at("hidden").get<std::vector<std::size_t>>(), cm.at("n_classes").get<std::size_t>());

    const auto& hj = j.at("hypernet");
    Hypernetwork hn(model.layout(), hj.at("n_clients").get<std::size_t>(),
                    hj.at("embedding_dim").get<std::size_t>(),
                    hj.at("trunk_widths").get<std::vector<std::size_t>>(), hj.at("leaky_slope").get<double>());
    hn.set_theta_flat(hj.at("theta").get<std::vector<double>>());
    hn.embeddings().values() = hj.at("embeddings").get<std::vector<double>>();

    std::vector<RngStream> client_streams;
    for (const auto& sj : j.at("client_streams")) client_streams.push_back(stream_from_json(sj));

    return {std::move(model),
            std::move(hn),
            config_from_json(j.at("config")),
            j.at("round").get<int>(),
            ema_from_json(j.at("ema_theta")),
            ema_from_json(j.at("ema_nu")),
            adam_from_json(j.at("adam_theta")),
            adam_from_json(j.at("adam_nu")),
            std::move(client_streams),
            stream_from_json(j.at("server_stream"))};
}

std::string to_string(GradAlignSign s) { return s == GradAlignSign::Plain ? "plain" : "negated"; }
std::string to_string(EmbeddingMode m) {
    return m == EmbeddingMode::Learned ? "learned" : "randomized-each-round";
}
std::string to_string(ServerOptimizer o) { return o == ServerOptimizer::Sgd ? "sgd" : "adam"; }
std::string to_string(VjpSeedMode m) {
    return m == VjpSeedMode::ParamDelta ? "param-delta" : "loss-gradient";
}

GradAlignSign gradalign_sign_from_string(const std::string& s) {
    if (s == "plain") return GradAlignSign::Plain;
    if (s == "negated") return GradAlignSign::Negated;
    throw ConfigError("gradalign_sign: expected 'plain' or 'negated', got '" + s + "'");
}

EmbeddingMode embedding_mode_from_string(const std::string& s) {
    if (s == "learned") return EmbeddingMode::Learned;
    if (s == "randomized-each-round") return EmbeddingMode::RandomizedEachRound;
    throw ConfigError("embedding_mode: expected 'learned' or 'randomized-each-round', got '" + s + "'");
}

ServerOptimizer server_optimizer_from_string(const std::string& s) {
    if (s == "sgd") return ServerOptimizer::Sgd;
    if (s == "adam") return ServerOptimizer::Adam;
    throw ConfigError("server_optimizer: expected 'sgd' or 'adam', got '" + s + "'");
}

VjpSeedMode vjp_seed_from_string(const std::string& s) {
    if (s == "param-delta") return VjpSeedMode::ParamDelta;
    if (s == "loss-gradient") return VjpSeedMode::LossGradient;
    throw ConfigError("vjp_seed: expected 'param-delta' or 'loss-gradient', got '" + s + "'");
}

}  // namespace hfedf
