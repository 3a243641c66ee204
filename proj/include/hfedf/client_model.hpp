#pragma once

#include <vector>

#include "hfedf/matrix.hpp"
#include "hfedf/ops.hpp"
#include "hfedf/param_vector.hpp"

namespace hfedf {

/// MLP classifier with ReLU hidden layers. The model itself is stateless:
/// parameters travel as ParamVectors so they can be generated, trained, and
/// aggregated interchangeably.
class ClientModel {
public:
    ClientModel(std::size_t input_dim, std::vector<std::size_t> hidden_sizes, std::size_t n_classes);

    const Layout& layout() const { return layout_; }
    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t input_dim() const { return dims_.front(); }
    std::size_t n_classes() const { return dims_.back(); }
    std::size_t n_layers() const { return dims_.size() - 1; }
    std::size_t param_count() const { return layout_size(layout_); }

    ParamVector init_params(RngStream& rng) const;

    /// Batch forward pass; x is (batch, input_dim), result is (batch, classes).
    Matrix forward(const ParamVector& params, const Matrix& x) const;

    struct BackwardResult {
        double loss;       // mean cross-entropy over the batch
        ParamVector grad;  // same layout as the parameters
    };
    BackwardResult backward(const ParamVector& params, const Matrix& x, const std::vector<int>& labels) const;

    bool operator==(const ClientModel&) const = default;

private:
    void check(const ParamVector& params, const Matrix& x) const;

    std::vector<std::size_t> dims_;  // input, hidden..., classes
    Layout layout_;
};

}  // namespace hfedf
