#include "hfedf/metrics.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "hfedf/errors.hpp"
#include "hfedf/ops.hpp"

namespace hfedf {

namespace {

std::size_t argmax_row(std::span<const double> row) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c)
        if (row[c] > row[best]) best = c;
    return best;
}

}  // namespace

double accuracy(const ClientModel& model, const ParamVector& params, const Matrix& x,
                const std::vector<int>& y) {
    if (y.empty()) throw std::invalid_argument("accuracy: empty dataset");
    if (x.rows() != y.size()) throw std::invalid_argument("accuracy: labels do not match inputs");
    Matrix logits = model.forward(params, x);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < logits.rows(); ++r)
        if (argmax_row(logits.row(r)) == static_cast<std::size_t>(y[r])) ++hits;
    return static_cast<double>(hits) / static_cast<double>(y.size());
}

DivergenceReport weight_divergence(const std::vector<ParamVector>& params) {
    if (params.size() < 2) throw std::invalid_argument("weight_divergence: need at least two clients");
    const Layout& layout = params.front().layout;
    for (const auto& p : params)
        if (p.layout != layout) throw std::invalid_argument("weight_divergence: layout mismatch");

    DivergenceReport report;
    const std::size_t n = params.size();
    const double n_pairs = static_cast<double>(n * (n - 1)) / 2.0;
    for (std::size_t e = 0; e < layout.size(); ++e) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            auto a = params[i].slice(e);
            for (std::size_t j = i + 1; j < n; ++j) {
                auto b = params[j].slice(e);
                double d2 = 0.0;
                for (std::size_t k = 0; k < a.size(); ++k) {
                    const double diff = a[k] - b[k];
                    d2 += diff * diff;
                }
                sum += std::sqrt(d2);
            }
        }
        report.per_layer.emplace_back(layout[e].name, sum / n_pairs);
    }
    return report;
}

std::vector<ConfidenceRecord> export_confidences(const ClientModel& model, const ParamVector& params,
                                                 const Matrix& x, const std::vector<int>& y,
                                                 const std::string& tag) {
    if (y.empty()) throw std::invalid_argument("export_confidences: empty dataset");
    Matrix probs = softmax_rows(model.forward(params, x));
    std::vector<ConfidenceRecord> out;
    out.reserve(y.size());
    for (std::size_t r = 0; r < probs.rows(); ++r) {
        auto row = probs.row(r);
        const std::size_t pred = argmax_row(row);
        out.push_back({static_cast<int>(pred), row[pred], pred == static_cast<std::size_t>(y[r]), tag});
    }
    return out;
}

void append_confidences_jsonl(const std::filesystem::path& path, const std::vector<ConfidenceRecord>& records) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw ConfigError("cannot open for writing: " + path.string());
    for (const auto& r : records) {
        nlohmann::json j = {{"predicted", r.predicted},
                            {"max_prob", r.max_prob},
                            {"correct", r.correct},
                            {"tag", r.tag}};
        out << j.dump() << '\n';
    }
}

}  // namespace hfedf
