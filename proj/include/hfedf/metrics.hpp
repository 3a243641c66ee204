#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "hfedf/client_model.hpp"

namespace hfedf {

/// Fraction of samples whose argmax logit matches the label; logit ties are
/// broken toward the lowest class index.
double accuracy(const ClientModel& model, const ParamVector& params, const Matrix& x,
                const std::vector<int>& y);

/// Per-layer mean pairwise Euclidean distance across client parameter vectors.
struct DivergenceReport {
    std::vector<std::pair<std::string, double>> per_layer;
};

DivergenceReport weight_divergence(const std::vector<ParamVector>& params);

struct ConfidenceRecord {
    int predicted = 0;
    double max_prob = 0.0;
    bool correct = false;
    std::string tag;  // "id" or "ood"
};

std::vector<ConfidenceRecord> export_confidences(const ClientModel& model, const ParamVector& params,
                                                 const Matrix& x, const std::vector<int>& y,
                                                 const std::string& tag);

void append_confidences_jsonl(const std::filesystem::path& path, const std::vector<ConfidenceRecord>& records);

}  // namespace hfedf
