#include "hfedf/client_model.hpp"

#include <stdexcept>

namespace hfedf {

ClientModel::ClientModel(std::size_t input_dim, std::vector<std::size_t> hidden_sizes, std::size_t n_classes) {
    if (input_dim == 0 || n_classes == 0) throw std::invalid_argument("ClientModel: zero-width layer");
    for (std::size_t h : hidden_sizes)
        if (h == 0) throw std::invalid_argument("ClientModel: zero-width hidden layer");
    dims_.push_back(input_dim);
    dims_.insert(dims_.end(), hidden_sizes.begin(), hidden_sizes.end());
    dims_.push_back(n_classes);
    for (std::size_t k = 0; k + 1 < dims_.size(); ++k) {
        const std::string base = "fc" + std::to_string(k);
        layout_.push_back({base + ".weight", dims_[k], dims_[k + 1]});
        layout_.push_back({base + ".bias", 1, dims_[k + 1]});
    }
}

ParamVector ClientModel::init_params(RngStream& rng) const {
    std::vector<Matrix> mats;
    for (std::size_t k = 0; k + 1 < dims_.size(); ++k) {
        mats.push_back(init_uniform_fan_in(dims_[k], dims_[k + 1], dims_[k], rng));
        mats.push_back(init_uniform_fan_in(1, dims_[k + 1], dims_[k], rng));
    }
    return ParamVector::from_matrices(layout_, mats);
}

void ClientModel::check(const ParamVector& params, const Matrix& x) const {
    if (params.layout != layout_) throw std::invalid_argument("ClientModel: parameter layout mismatch");
    if (params.values.size() != param_count()) throw std::invalid_argument("ClientModel: parameter length mismatch");
    if (x.cols() != input_dim()) throw std::invalid_argument("ClientModel: input width mismatch");
}

Matrix ClientModel::forward(const ParamVector& params, const Matrix& x) const {
    check(params, x);
    auto mats = params.to_matrices();
    Matrix a = x;
    for (std::size_t k = 0; k < n_layers(); ++k) {
        Matrix z = matmul(a, mats[2 * k]);
        const auto& bias = mats[2 * k + 1];
        for (std::size_t r = 0; r < z.rows(); ++r)
            for (std::size_t c = 0; c < z.cols(); ++c) z(r, c) += bias(0, c);
        a = (k + 1 < n_layers()) ? relu(z) : std::move(z);
    }
    return a;
}

ClientModel::BackwardResult ClientModel::backward(const ParamVector& params, const Matrix& x,
                                                  const std::vector<int>& labels) const {
    check(params, x);
    auto mats = params.to_matrices();

    // forward with cached pre-activations
    std::vector<Matrix> acts;  // acts[k] = input to layer k
    std::vector<Matrix> zs;    // zs[k] = pre-activation of layer k
    acts.push_back(x);
    for (std::size_t k = 0; k < n_layers(); ++k) {
        Matrix z = matmul(acts.back(), mats[2 * k]);
        const auto& bias = mats[2 * k + 1];
        for (std::size_t r = 0; r < z.rows(); ++r)
            for (std::size_t c = 0; c < z.cols(); ++c) z(r, c) += bias(0, c);
        zs.push_back(z);
        if (k + 1 < n_layers()) acts.push_back(relu(z));
    }

    auto ce = cross_entropy(zs.back(), labels);

    std::vector<Matrix> grads(layout_.size());
    Matrix delta = std::move(ce.grad);  // d(loss)/d(z_k)
    for (std::size_t k = n_layers(); k-- > 0;) {
        grads[2 * k] = matmul(transpose(acts[k]), delta);
        Matrix gb(1, delta.cols());
        for (std::size_t r = 0; r < delta.rows(); ++r)
            for (std::size_t c = 0; c < delta.cols(); ++c) gb(0, c) += delta(r, c);
        grads[2 * k + 1] = std::move(gb);
        if (k > 0) {
            Matrix da = matmul(delta, transpose(mats[2 * k]));
            Matrix mask = relu_mask(zs[k - 1]);
            for (std::size_t i = 0; i < da.values().size(); ++i) da.values()[i] *= mask.values()[i];
            delta = std::move(da);
        }
    }
    return {ce.loss, ParamVector::from_matrices(layout_, grads)};
}

}  // namespace hfedf
