#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hfedf/client_model.hpp"
#include "hfedf/hypernetwork.hpp"
#include "hfedf/rng.hpp"
#include "hfedf/splits.hpp"

namespace hfedf {

enum class GradAlignSign { Plain, Negated };
enum class EmbeddingMode { Learned, RandomizedEachRound };
enum class ServerOptimizer { Sgd, Adam };

/// What the server feeds the vector-Jacobian product. ParamDelta is the
/// protocol's pseudo-gradient (initial minus locally updated parameters, so
/// the server step descends); LossGradient is the exact chain rule using the
/// full-shard loss gradient at the generated parameters.
enum class VjpSeedMode { ParamDelta, LossGradient };

struct HFedFConfig {
    int rounds = 200;        // T
    int local_epochs = 2;    // E
    int batch_size = 64;
    double server_lr = 1e-3;            // alpha
    double client_lr = 1e-3;            // mu
    double client_weight_decay = 1e-3;
    double server_weight_decay = 1e-5;
    double ema_decay = 0.95;
    int ema_warmup = 0;
    bool ema_enabled = true;
    bool gradalign_enabled = true;
    GradAlignSign gradalign_sign = GradAlignSign::Plain;
    EmbeddingMode embedding_mode = EmbeddingMode::Learned;
    ServerOptimizer server_optimizer = ServerOptimizer::Sgd;
    bool server_decay_on_embeddings = true;
    VjpSeedMode vjp_seed = VjpSeedMode::ParamDelta;

    void validate() const;  // throws ConfigError naming the offending field
    bool operator==(const HFedFConfig&) const = default;
};

struct ClientOpts {
    int epochs = 1;
    int batch_size = 64;
    double lr = 1e-3;
    double weight_decay = 0.0;
};

struct LocalFit {
    ParamVector params;
    double mean_loss = 0.0;  // mean over the minibatch steps of this call
};

/// Local epochs of minibatch SGD on cross-entropy with L2 weight decay;
/// batches are reshuffled every epoch from the client's stream.
LocalFit client_update(const ClientModel& model, ParamVector params, const Matrix& x,
                       const std::vector<int>& y, const ClientOpts& opts, RngStream& rng);

/// Same, with a proximal pull toward anchor: the gradient gains
/// prox_coeff * (params - anchor). prox_coeff 0 runs the identical code path
/// as client_update.
LocalFit client_update_prox(const ClientModel& model, ParamVector params, const Matrix& x,
                            const std::vector<int>& y, const ClientOpts& opts, const ParamVector& anchor,
                            double prox_coeff, RngStream& rng);

struct AlignResult {
    std::vector<double> weights;  // probability vector, sums to 1
    std::vector<double> cosines;  // cosine of each gradient to the mean
};

/// Cosine-similarity weighting of per-client gradients against their mean,
/// turned into a probability vector by softmax (negated exponent optional).
AlignResult grad_align(const std::vector<std::vector<double>>& grads, GradAlignSign sign);

struct EmaState {
    bool initialized = false;
    std::vector<double> shadow;
};

/// At t == warmup the shadow snapshots the current values; for t > warmup,
/// shadow <- decay*current + (1-decay)*shadow and current adopts the shadow.
void ema_apply(std::span<double> current, EmaState& state, int t, int warmup, double decay);

struct AdamState {
    long step = 0;
    std::vector<double> m, v;
};

struct RoundTrace {
    int round = 0;
    std::vector<double> theta_weights, theta_cosines;
    std::vector<double> nu_weights, nu_cosines;
    double theta_grad_norm = 0.0, nu_grad_norm = 0.0;
    std::vector<double> client_losses;
};

/// Server-side state of one federation run.
struct FederationState {
    ClientModel client_model;
    Hypernetwork hypernet;
    HFedFConfig config;
    int round = 0;
    EmaState ema_theta, ema_nu;
    AdamState adam_theta, adam_nu;
    std::vector<RngStream> client_streams;
    RngStream server_stream;
};

/// Builds an initialized state; all streams derive from (seed, stream_tag) so
/// two states built with the same arguments are identical.
FederationState make_federation(const ClientModel& model, std::size_t n_clients, const HFedFConfig& config,
                                std::uint64_t seed, const std::string& stream_tag = "",
                                std::size_t embedding_dim_override = 0);

/// One communication round: generate per-client parameters, train locally,
/// push the parameter deltas back through the hypernetwork, aggregate with
/// alignment weights, step the server optimizer, then smooth with EMA.
RoundTrace hfedf_round(FederationState& state, const EvalSplit& split);

/// Size-weighted average of locally updated client parameters. epochs 0 skips
/// local training and just averages.
ParamVector fedavg_round(const ClientModel& model, const std::vector<ParamVector>& client_params,
                         const EvalSplit& split, const ClientOpts& opts, std::vector<RngStream>& streams);

/// FedAvg with a proximal term anchored at each client's incoming parameters.
ParamVector fedprox_round(const ClientModel& model, const std::vector<ParamVector>& client_params,
                          const EvalSplit& split, const ClientOpts& opts, double prox_coeff,
                          std::vector<RngStream>& streams);

// Bit-exact checkpointing of a running federation.
void save_checkpoint(const FederationState& state, const std::filesystem::path& path);
FederationState load_checkpoint(const std::filesystem::path& path);

std::string to_string(GradAlignSign s);
std::string to_string(EmbeddingMode m);
std::string to_string(ServerOptimizer o);
std::string to_string(VjpSeedMode m);
GradAlignSign gradalign_sign_from_string(const std::string& s);
EmbeddingMode embedding_mode_from_string(const std::string& s);
ServerOptimizer server_optimizer_from_string(const std::string& s);
VjpSeedMode vjp_seed_from_string(const std::string& s);

}  // namespace hfedf
