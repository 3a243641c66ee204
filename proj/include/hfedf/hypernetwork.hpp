#pragma once

#include <optional>
#include <span>
#include <vector>

#include "hfedf/matrix.hpp"
#include "hfedf/ops.hpp"
#include "hfedf/param_vector.hpp"

namespace hfedf {

/// Gradients of a scalar function of the hypernetwork output with respect to
/// the trunk+head parameters (flat) and to one embedding row.
struct GradPair {
    std::vector<double> g_theta;
    std::vector<double> g_nu_row;
};

/// Hypernetwork h(theta, nu[i]): an embedding row feeds an MLP trunk with
/// LeakyReLU between hidden layers, ending in one affine head per client
/// model layer; the concatenated head outputs form the client ParamVector.
class Hypernetwork {
public:
    Hypernetwork(Layout client_layout, std::size_t n_clients, std::size_t embedding_dim,
                 std::vector<std::size_t> trunk_widths, double leaky_slope = 0.01);

    /// Draws trunk/head weights (uniform fan-in) and embeddings (normal(0,1)).
    void init(RngStream& rng);

    std::size_t n_clients() const { return n_clients_; }
    std::size_t embedding_dim() const { return embedding_dim_; }
    std::size_t client_param_count() const { return layout_size(client_layout_); }
    const Layout& client_layout() const { return client_layout_; }
    const std::vector<std::size_t>& trunk_widths() const { return trunk_widths_; }
    double leaky_slope() const { return leaky_slope_; }

    Matrix& embeddings() { return embeddings_; }
    const Matrix& embeddings() const { return embeddings_; }

    /// Generates the parameters for one client; pure function of (theta, nu).
    ParamVector generate(std::size_t client_id) const;

    /// Vector-Jacobian product: for s(theta, nu) = <h(theta, nu[client_id]), seed>
    /// returns (ds/dtheta, ds/dnu[client_id]) in one backward pass.
    GradPair vjp(std::size_t client_id, std::span<const double> seed) const;

    // Flat view over all trunk+head parameters, in a fixed canonical order.
    std::size_t theta_size() const { return theta_size_; }
    std::vector<double> theta_flat() const;
    void set_theta_flat(std::span<const double> flat);

    bool operator==(const Hypernetwork&) const = default;

private:
    struct TrunkCache {
        std::vector<Matrix> zs;    // pre-activations per trunk layer
        std::vector<Matrix> acts;  // acts[0] = embedding row; acts[k+1] = input to layer k+1
    };
    Matrix trunk_forward(std::size_t client_id, TrunkCache* cache) const;
    std::vector<const Matrix*> theta_refs() const;
    std::vector<Matrix*> theta_refs();

    Layout client_layout_;
    std::size_t n_clients_ = 0;
    std::size_t embedding_dim_ = 0;
    std::vector<std::size_t> trunk_widths_;
    double leaky_slope_ = 0.01;

    std::vector<Matrix> trunk_w_, trunk_b_;
    std::vector<Matrix> head_w_, head_b_;
    Matrix embeddings_;  // (n_clients, embedding_dim)
    std::size_t theta_size_ = 0;
};

/// Embedding width rule used when no explicit dimension is configured.
std::size_t default_embedding_dim(std::size_t n_clients);

}  // namespace hfedf
