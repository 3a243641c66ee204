#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hfedf {

struct ResultRow {
    std::string algorithm;
    std::uint64_t seed = 0;
    int target_domain = 0;
    int round = 0;
    double id_acc = 0.0;
    double ood_acc = 0.0;
    bool operator==(const ResultRow&) const = default;
};

struct Summary {
    std::string algorithm;
    double mu_id = 0.0;
    double mu_ood = 0.0;
    std::size_t n_cells = 0;
};

/// Accuracy rows over the (algorithm, seed, target, round) grid. Summaries
/// are recomputed from the rows: per algorithm, the mean of each cell's
/// final-round accuracies across seeds and target domains.
struct ResultTable {
    std::vector<ResultRow> rows;

    void append(const ResultTable& other);
    std::vector<Summary> summaries() const;

    /// Fixed header: algorithm,seed,target_domain,round,id_acc,ood_acc
    std::string to_csv() const;
    static ResultTable from_csv(const std::string& text);

    std::string summaries_csv() const;
};

/// Shortest round-trip decimal form; used everywhere a double is printed so
/// re-runs are byte-identical.
std::string format_double(double v);

}  // namespace hfedf
