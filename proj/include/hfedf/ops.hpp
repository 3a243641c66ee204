#pragma once

#include <span>
#include <vector>

#include "hfedf/matrix.hpp"
#include "hfedf/rng.hpp"

namespace hfedf {

/// Elementwise max(x, slope*x); slope must lie in (0, 1).
Matrix leaky_relu(const Matrix& x, double slope);
/// Derivative of leaky_relu: 1 where x > 0, slope elsewhere.
Matrix leaky_relu_mask(const Matrix& x, double slope);

Matrix relu(const Matrix& x);
Matrix relu_mask(const Matrix& x);

/// Row-wise softmax; each output row is a probability vector.
Matrix softmax_rows(const Matrix& logits);

struct CrossEntropy {
    double loss;  // mean over rows
    Matrix grad;  // d(mean loss)/d(logits) = (softmax - one_hot) / rows
};

/// Mean cross-entropy over a batch of logits rows with integer labels.
/// Throws std::invalid_argument when a label is outside [0, cols).
CrossEntropy cross_entropy(const Matrix& logits, const std::vector<int>& labels);

/// Cosine similarity clamped to [-1, 1]. Returns 0 when either vector has
/// norm below 1e-15, so downstream weighting stays total on zero gradients.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

enum class InitScheme { UniformFanIn, Normal };

/// Uniform in (-1/sqrt(fan_in), 1/sqrt(fan_in)).
Matrix init_uniform_fan_in(std::size_t rows, std::size_t cols, std::size_t fan_in, RngStream& rng);
Matrix init_normal(std::size_t rows, std::size_t cols, double sigma, RngStream& rng);
/// Generic entry point; UniformFanIn uses fan_in = rows (the input width of
/// a (in x out) weight matrix), Normal uses the given sigma.
Matrix init_params(std::size_t rows, std::size_t cols, InitScheme scheme, double sigma, RngStream& rng);

// Small flat-vector helpers shared by the aggregation code.
double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);
void add_scaled(std::span<double> dst, std::span<const double> src, double factor);

/// Numerically stable softmax of a plain vector.
std::vector<double> softmax(std::span<const double> v);

}  // namespace hfedf
