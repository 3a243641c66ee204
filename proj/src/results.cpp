#include "hfedf/results.hpp"

#include <charconv>
#include <map>
#include <sstream>
#include <stdexcept>

namespace hfedf {

std::string format_double(double v) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return {buf, ptr};
}

void ResultTable::append(const ResultTable& other) {
    rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

std::vector<Summary> ResultTable::summaries() const {
    // final-round row per (algorithm, seed, target) cell
    std::map<std::tuple<std::string, std::uint64_t, int>, const ResultRow*> final_rows;
    std::vector<std::string> algo_order;
    for (const auto& r : rows) {
        auto key = std::make_tuple(r.algorithm, r.seed, r.target_domain);
        auto [it, inserted] = final_rows.try_emplace(key, &r);
        if (!inserted && r.round >= it->second->round) it->second = &r;
        bool seen = false;
        for (const auto& a : algo_order) seen = seen || a == r.algorithm;
        if (!seen) algo_order.push_back(r.algorithm);
    }

    std::vector<Summary> out;
    for (const auto& algo : algo_order) {
        Summary s;
        s.algorithm = algo;
        for (const auto& [key, row] : final_rows) {
            if (std::get<0>(key) != algo) continue;
            s.mu_id += row->id_acc;
            s.mu_ood += row->ood_acc;
            ++s.n_cells;
        }
        s.mu_id /= static_cast<double>(s.n_cells);
        s.mu_ood /= static_cast<double>(s.n_cells);
        out.push_back(std::move(s));
    }
    return out;
}

std::string ResultTable::to_csv() const {
    std::string out = "algorithm,seed,target_domain,round,id_acc,ood_acc\n";
    for (const auto& r : rows) {
        out += r.algorithm;
        out += ',';
        out += std::to_string(r.seed);
        out += ',';
        out += std::to_string(r.target_domain);
        out += ',';
        out += std::to_string(r.round);
        out += ',';
        out += format_double(r.id_acc);
        out += ',';
        out += format_double(r.ood_acc);
        out += '\n';
    }
    return out;
}

ResultTable ResultTable::from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "algorithm,seed,target_domain,round,id_acc,ood_acc")
        throw std::invalid_argument("from_csv: bad header");
    ResultTable table;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        ResultRow r;
        std::string field;
        std::getline(ls, r.algorithm, ',');
        std::getline(ls, field, ',');
        r.seed = std::stoull(field);
        std::getline(ls, field, ',');
        r.target_domain = std::stoi(field);
        std::getline(ls, field, ',');
        r.round = std::stoi(field);
        std::getline(ls, field, ',');
        r.id_acc = std::stod(field);
        std::getline(ls, field, ',');
        r.ood_acc = std::stod(field);
        table.rows.push_back(std::move(r));
    }
    return table;
}

std::string ResultTable::summaries_csv() const {
    std::string out = "algorithm,mu_id,mu_ood,n_cells\n";
    for (const auto& s : summaries()) {
        out += s.algorithm;
        out += ',';
        out += format_double(s.mu_id);
        out += ',';
        out += format_double(s.mu_ood);
        out += ',';
        out += std::to_string(s.n_cells);
        out += '\n';
    }
    return out;
}

}  // namespace hfedf
