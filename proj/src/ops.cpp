#include "hfedf/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hfedf {

Matrix leaky_relu(const Matrix& x, double slope) {
    if (!(slope > 0.0 && slope < 1.0)) throw std::invalid_argument("leaky_relu: slope must be in (0,1)");
    Matrix out = x;
    for (double& v : out.values()) v = v > 0.0 ? v : slope * v;
    return out;
}

Matrix leaky_relu_mask(const Matrix& x, double slope) {
    if (!(slope > 0.0 && slope < 1.0)) throw std::invalid_argument("leaky_relu: slope must be in (0,1)");
    Matrix out = x;
    for (double& v : out.values()) v = v > 0.0 ? 1.0 : slope;
    return out;
}

Matrix relu(const Matrix& x) {
    Matrix out = x;
    for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
    return out;
}

Matrix relu_mask(const Matrix& x) {
    Matrix out = x;
    for (double& v : out.values()) v = v > 0.0 ? 1.0 : 0.0;
    return out;
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix out = logits;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        const double m = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double& v : row) {
            v = std::exp(v - m);
            sum += v;
        }
        for (double& v : row) v /= sum;
    }
    return out;
}

CrossEntropy cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
    if (labels.size() != logits.rows()) throw std::invalid_argument("cross_entropy: one label per row required");
    const auto n_classes = static_cast<int>(logits.cols());
    for (int y : labels)
        if (y < 0 || y >= n_classes) throw std::invalid_argument("cross_entropy: label out of range");

    const std::size_t n = logits.rows();
    Matrix probs = softmax_rows(logits);
    double loss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        // log-sum-exp route for the loss; avoids log of a tiny normalized prob
        auto row = logits.row(r);
        const double m = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double v : row) sum += std::exp(v - m);
        loss += (m + std::log(sum)) - row[static_cast<std::size_t>(labels[r])];
    }
    loss /= static_cast<double>(n);

    Matrix grad = probs;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
        grad(r, static_cast<std::size_t>(labels[r])) -= 1.0;
        for (double& v : grad.row(r)) v *= inv_n;
    }
    return {loss, std::move(grad)};
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw std::invalid_argument("cosine_similarity: length mismatch");
    const double nu = l2_norm(u), nv = l2_norm(v);
    if (nu < 1e-15 || nv < 1e-15) return 0.0;
    return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

Matrix init_uniform_fan_in(std::size_t rows, std::size_t cols, std::size_t fan_in, RngStream& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix out(rows, cols);
    for (double& v : out.values()) v = rng.next_uniform(-bound, bound);
    return out;
}

Matrix init_normal(std::size_t rows, std::size_t cols, double sigma, RngStream& rng) {
    Matrix out(rows, cols);
    for (double& v : out.values()) v = sigma * rng.next_normal();
    return out;
}

Matrix init_params(std::size_t rows, std::size_t cols, InitScheme scheme, double sigma, RngStream& rng) {
    switch (scheme) {
        case InitScheme::UniformFanIn: return init_uniform_fan_in(rows, cols, rows, rng);
        case InitScheme::Normal: return init_normal(rows, cols, sigma, rng);
    }
    throw std::invalid_argument("init_params: unknown scheme");
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

void add_scaled(std::span<double> dst, std::span<const double> src, double factor) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += factor * src[i];
}

std::vector<double> softmax(std::span<const double> v) {
    std::vector<double> out(v.begin(), v.end());
    const double m = *std::max_element(out.begin(), out.end());
    double sum = 0.0;
    for (double& x : out) {
        x = std::exp(x - m);
        sum += x;
    }
    for (double& x : out) x /= sum;
    return out;
}

}  // namespace hfedf
