#include "hfedf/param_vector.hpp"

#include <stdexcept>

namespace hfedf {

std::size_t layout_size(const Layout& layout) {
    std::size_t n = 0;
    for (const auto& e : layout) n += e.size();
    return n;
}

ParamVector ParamVector::zeros(const Layout& layout) {
    return {layout, std::vector<double>(layout_size(layout), 0.0)};
}

ParamVector ParamVector::from_matrices(const Layout& layout, const std::vector<Matrix>& mats) {
    if (mats.size() != layout.size()) throw std::invalid_argument("from_matrices: entry count mismatch");
    ParamVector pv = zeros(layout);
    std::size_t off = 0;
    for (std::size_t i = 0; i < layout.size(); ++i) {
        if (mats[i].rows() != layout[i].rows || mats[i].cols() != layout[i].cols)
            throw std::invalid_argument("from_matrices: shape mismatch at " + layout[i].name);
        const auto& v = mats[i].values();
        std::copy(v.begin(), v.end(), pv.values.begin() + static_cast<std::ptrdiff_t>(off));
        off += layout[i].size();
    }
    return pv;
}

std::vector<Matrix> ParamVector::to_matrices() const {
    if (values.size() != layout_size(layout)) throw std::invalid_argument("to_matrices: value length does not match layout");
    std::vector<Matrix> mats;
    mats.reserve(layout.size());
    std::size_t off = 0;
    for (const auto& e : layout) {
        Matrix m(e.rows, e.cols);
        std::copy(values.begin() + static_cast<std::ptrdiff_t>(off),
                  values.begin() + static_cast<std::ptrdiff_t>(off + e.size()), m.values().begin());
        mats.push_back(std::move(m));
        off += e.size();
    }
    return mats;
}

std::size_t ParamVector::offset_of(std::size_t entry_index) const {
    std::size_t off = 0;
    for (std::size_t i = 0; i < entry_index; ++i) off += layout[i].size();
    return off;
}

std::span<double> ParamVector::slice(std::size_t entry_index) {
    return {values.data() + offset_of(entry_index), layout[entry_index].size()};
}

std::span<const double> ParamVector::slice(std::size_t entry_index) const {
    return {values.data() + offset_of(entry_index), layout[entry_index].size()};
}

}  // namespace hfedf
