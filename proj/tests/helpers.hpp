#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hfedf/dataset.hpp"
#include "hfedf/splits.hpp"

namespace hfedf::test {

inline double rel_err(double a, double b, double floor = 1e-9) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Central finite difference of a scalar function at x.
inline double central_diff(const std::function<double(double)>& f, double x, double h = 1e-6) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Largest norm-relative deviation between two vectors.
inline double max_rel_dev(const std::vector<double>& a, const std::vector<double>& b) {
    double scale = 0.0;
    for (double v : b) scale = std::max(scale, std::abs(v));
    for (double v : a) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) {
        double d = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
        return d;
    }
    double dev = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dev = std::max(dev, std::abs(a[i] - b[i]) / scale);
    return dev;
}

/// Brute-force validity check of a split plan: parts disjoint, exhaustive,
/// exactly d distinct domains per client, and part sizes within one sample.
inline std::string check_split_plan(const SplitPlan& plan, const std::vector<DomainDataset>& domains,
                                    int n_clients, int d) {
    if (plan.n_clients != n_clients) return "wrong client count";
    if (static_cast<int>(plan.assignments.size()) != n_clients) return "wrong assignment count";

    std::map<int, std::set<std::size_t>> seen;        // domain -> indices used
    std::map<int, std::vector<std::size_t>> part_sizes;  // domain -> sizes of its parts
    for (const auto& parts : plan.assignments) {
        if (static_cast<int>(parts.size()) != d) return "client does not hold d parts";
        std::set<int> client_domains;
        for (const auto& p : parts) {
            client_domains.insert(p.domain_id);
            part_sizes[p.domain_id].push_back(p.indices.size());
            for (std::size_t idx : p.indices)
                if (!seen[p.domain_id].insert(idx).second) return "overlapping parts";
        }
        if (static_cast<int>(client_domains.size()) != d) return "client domains not distinct";
    }
    for (const auto& dom : domains) {
        auto it = seen.find(dom.domain_id);
        if (it == seen.end()) return "domain not covered";
        if (it->second.size() != dom.size()) return "domain not exhausted";
        for (std::size_t idx : it->second)
            if (idx >= dom.size()) return "index out of range";
        const auto& sizes = part_sizes[dom.domain_id];
        std::size_t lo = sizes.front(), hi = sizes.front();
        for (std::size_t s : sizes) {
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        }
        if (hi - lo > 1) return "part sizes differ by more than one";
    }
    return "";
}

}  // namespace hfedf::test
