#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hfedf/matrix.hpp"

namespace hfedf {

struct LayoutEntry {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t size() const { return rows * cols; }
    bool operator==(const LayoutEntry&) const = default;
};

/// Ordered (layer name, shape) list describing how a flat parameter vector
/// slices into per-layer matrices.
using Layout = std::vector<LayoutEntry>;

std::size_t layout_size(const Layout& layout);

/// Flat parameter vector plus its layout: the common currency between client
/// models, the hypernetwork heads, and aggregation.
struct ParamVector {
    Layout layout;
    std::vector<double> values;

    static ParamVector zeros(const Layout& layout);

    /// inject: assemble the flat vector from shaped per-layer matrices.
    static ParamVector from_matrices(const Layout& layout, const std::vector<Matrix>& mats);
    /// extract: slice the flat vector back into shaped matrices.
    std::vector<Matrix> to_matrices() const;

    std::size_t offset_of(std::size_t entry_index) const;
    std::span<double> slice(std::size_t entry_index);
    std::span<const double> slice(std::size_t entry_index) const;

    bool operator==(const ParamVector&) const = default;
};

}  // namespace hfedf
