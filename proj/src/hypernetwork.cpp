#include "hfedf/hypernetwork.hpp"

#include <stdexcept>

namespace hfedf {

std::size_t default_embedding_dim(std::size_t n_clients) { return 1 + n_clients / 4; }

Hypernetwork::Hypernetwork(Layout client_layout, std::size_t n_clients, std::size_t embedding_dim,
                           std::vector<std::size_t> trunk_widths, double leaky_slope)
    : client_layout_(std::move(client_layout)),
      n_clients_(n_clients),
      embedding_dim_(embedding_dim),
      trunk_widths_(std::move(trunk_widths)),
      leaky_slope_(leaky_slope) {
    if (n_clients_ == 0) throw std::invalid_argument("Hypernetwork: need at least one client");
    if (embedding_dim_ == 0) throw std::invalid_argument("Hypernetwork: embedding_dim must be positive");
    if (trunk_widths_.empty()) throw std::invalid_argument("Hypernetwork: trunk needs at least one layer");
    if (client_layout_.empty()) throw std::invalid_argument("Hypernetwork: empty client layout");

    std::size_t prev = embedding_dim_;
    for (std::size_t w : trunk_widths_) {
        if (w == 0) throw std::invalid_argument("Hypernetwork: zero trunk width");
        trunk_w_.emplace_back(prev, w);
        trunk_b_.emplace_back(1, w);
        prev = w;
    }
    for (const auto& entry : client_layout_) {
        head_w_.emplace_back(prev, entry.size());
        head_b_.emplace_back(1, entry.size());
    }
    embeddings_ = Matrix(n_clients_, embedding_dim_);
    for (const Matrix* m : theta_refs()) theta_size_ += m->size();
}

void Hypernetwork::init(RngStream& rng) {
    std::size_t prev = embedding_dim_;
    for (std::size_t k = 0; k < trunk_widths_.size(); ++k) {
        trunk_w_[k] = init_uniform_fan_in(prev, trunk_widths_[k], prev, rng);
        trunk_b_[k] = init_uniform_fan_in(1, trunk_widths_[k], prev, rng);
        prev = trunk_widths_[k];
    }
    for (std::size_t j = 0; j < head_w_.size(); ++j) {
        head_w_[j] = init_uniform_fan_in(prev, client_layout_[j].size(), prev, rng);
        head_b_[j] = init_uniform_fan_in(1, client_layout_[j].size(), prev, rng);
    }
    embeddings_ = init_normal(n_clients_, embedding_dim_, 1.0, rng);
}

std::vector<const Matrix*> Hypernetwork::theta_refs() const {
    std::vector<const Matrix*> refs;
    for (std::size_t k = 0; k < trunk_w_.size(); ++k) {
        refs.push_back(&trunk_w_[k]);
        refs.push_back(&trunk_b_[k]);
    }
    for (std::size_t j = 0; j < head_w_.size(); ++j) {
        refs.push_back(&head_w_[j]);
        refs.push_back(&head_b_[j]);
    }
    return refs;
}

std::vector<Matrix*> Hypernetwork::theta_refs() {
    std::vector<Matrix*> refs;
    for (std::size_t k = 0; k < trunk_w_.size(); ++k) {
        refs.push_back(&trunk_w_[k]);
        refs.push_back(&trunk_b_[k]);
    }
    for (std::size_t j = 0; j < head_w_.size(); ++j) {
        refs.push_back(&head_w_[j]);
        refs.push_back(&head_b_[j]);
    }
    return refs;
}

std::vector<double> Hypernetwork::theta_flat() const {
    std::vector<double> flat;
    flat.reserve(theta_size_);
    for (const Matrix* m : theta_refs()) flat.insert(flat.end(), m->values().begin(), m->values().end());
    return flat;
}

void Hypernetwork::set_theta_flat(std::span<const double> flat) {
    if (flat.size() != theta_size_) throw std::invalid_argument("set_theta_flat: length mismatch");
    std::size_t off = 0;
    for (Matrix* m : theta_refs()) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                  flat.begin() + static_cast<std::ptrdiff_t>(off + m->size()), m->values().begin());
        off += m->size();
    }
}

Matrix Hypernetwork::trunk_forward(std::size_t client_id, TrunkCache* cache) const {
    if (client_id >= n_clients_) throw std::invalid_argument("Hypernetwork: client_id out of range");
    Matrix a = Matrix::row_vector(embeddings_.row(client_id));
    if (cache) cache->acts.push_back(a);
    for (std::size_t k = 0; k < trunk_w_.size(); ++k) {
        Matrix z = matmul(a, trunk_w_[k]);
        for (std::size_t c = 0; c < z.cols(); ++c) z(0, c) += trunk_b_[k](0, c);
        if (cache) cache->zs.push_back(z);
        // activation between hidden layers only; the last trunk layer is linear
        a = (k + 1 < trunk_w_.size()) ? leaky_relu(z, leaky_slope_) : std::move(z);
        if (cache && k + 1 < trunk_w_.size()) cache->acts.push_back(a);
    }
    return a;
}

ParamVector Hypernetwork::generate(std::size_t client_id) const {
    Matrix a = trunk_forward(client_id, nullptr);
    ParamVector out = ParamVector::zeros(client_layout_);
    std::size_t off = 0;
    for (std::size_t j = 0; j < head_w_.size(); ++j) {
        Matrix o = matmul(a, head_w_[j]);
        for (std::size_t c = 0; c < o.cols(); ++c) out.values[off + c] = o(0, c) + head_b_[j](0, c);
        off += client_layout_[j].size();
    }
    return out;
}

GradPair Hypernetwork::vjp(std::size_t client_id, std::span<const double> seed) const {
    if (seed.size() != client_param_count()) throw std::invalid_argument("vjp: seed layout mismatch");
    TrunkCache cache;
    Matrix a_last = trunk_forward(client_id, &cache);

    std::vector<Matrix> g_trunk_w(trunk_w_.size()), g_trunk_b(trunk_b_.size());
    std::vector<Matrix> g_head_w(head_w_.size()), g_head_b(head_b_.size());

    // heads: out_j = a_last * H_j + c_j, seeded by the matching slice
    Matrix da(1, a_last.cols());
    std::size_t off = 0;
    for (std::size_t j = 0; j < head_w_.size(); ++j) {
        const std::size_t m = client_layout_[j].size();
        Matrix s = Matrix::row_vector(seed.subspan(off, m));
        g_head_w[j] = matmul(transpose(a_last), s);
        g_head_b[j] = s;
        Matrix contrib = matmul(s, transpose(head_w_[j]));
        for (std::size_t c = 0; c < da.cols(); ++c) da(0, c) += contrib(0, c);
        off += m;
    }

    // trunk, walking back through the cached pre-activations
    for (std::size_t k = trunk_w_.size(); k-- > 0;) {
        Matrix dz = std::move(da);
        if (k + 1 < trunk_w_.size()) {
            Matrix mask = leaky_relu_mask(cache.zs[k], leaky_slope_);
            for (std::size_t i = 0; i < dz.values().size(); ++i) dz.values()[i] *= mask.values()[i];
        }
        g_trunk_w[k] = matmul(transpose(cache.acts[k]), dz);
        g_trunk_b[k] = dz;
        da = matmul(dz, transpose(trunk_w_[k]));
    }

    GradPair out;
    out.g_theta.reserve(theta_size_);
    for (std::size_t k = 0; k < trunk_w_.size(); ++k) {
        out.g_theta.insert(out.g_theta.end(), g_trunk_w[k].values().begin(), g_trunk_w[k].values().end());
        out.g_theta.insert(out.g_theta.end(), g_trunk_b[k].values().begin(), g_trunk_b[k].values().end());
    }
    for (std::size_t j = 0; j < head_w_.size(); ++j) {
        out.g_theta.insert(out.g_theta.end(), g_head_w[j].values().begin(), g_head_w[j].values().end());
        out.g_theta.insert(out.g_theta.end(), g_head_b[j].values().begin(), g_head_b[j].values().end());
    }
    out.g_nu_row.assign(da.values().begin(), da.values().end());
    return out;
}

}  // namespace hfedf
