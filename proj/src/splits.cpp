#include "hfedf/splits.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "hfedf/errors.hpp"

namespace hfedf {

namespace {

bool clients_hold_distinct_domains(const SplitPlan& plan) {
    for (const auto& parts : plan.assignments) {
        std::set<int> ids;
        for (const auto& p : parts) ids.insert(p.domain_id);
        if (ids.size() != parts.size()) return false;
    }
    return true;
}

SplitPlan deal_parts(std::map<int, std::vector<SplitPlan::Part>>& parts_by_domain, int n_clients,
                     int domains_per_client) {
    SplitPlan plan;
    plan.n_clients = n_clients;
    plan.domains_per_client = domains_per_client;
    plan.assignments.resize(static_cast<std::size_t>(n_clients));
    for (int round = 0; round < domains_per_client; ++round) {
        for (int i = 0; i < n_clients; ++i) {
            for (auto& [id, queue] : parts_by_domain) {
                if (!queue.empty()) {
                    plan.assignments[static_cast<std::size_t>(i)].push_back(std::move(queue.front()));
                    queue.erase(queue.begin());
                    break;
                }
            }
        }
    }
    return plan;
}

}  // namespace

SplitPlan split_domains(const std::vector<DomainDataset>& domains, int n_clients, int domains_per_client,
                        RngStream& rng) {
    const int n_domains = static_cast<int>(domains.size());
    if (n_clients <= 1) throw ConfigError("split_domains: need more than one client");
    if (domains_per_client < 1 || domains_per_client > n_domains)
        throw ConfigError("split_domains: domains_per_client must be in [1, n_domains]");
    if (n_clients * domains_per_client < n_domains)
        throw ConfigError("split_domains: infeasible, n_clients*domains_per_client < n_domains");
    for (const auto& d : domains)
        if (d.size() == 0) throw ConfigError("split_domains: empty domain " + std::to_string(d.domain_id));

    const int total_parts = n_clients * domains_per_client;
    const int a = total_parts / n_domains;
    const int b = total_parts % n_domains;

    // the b largest domains are split one extra time; ties by domain_id
    std::vector<std::size_t> order(domains.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (domains[x].size() != domains[y].size()) return domains[x].size() > domains[y].size();
        return domains[x].domain_id < domains[y].domain_id;
    });
    std::set<std::size_t> extra(order.begin(), order.begin() + b);

    for (int attempt = 0; attempt < 64; ++attempt) {
        std::map<int, std::vector<SplitPlan::Part>> parts_by_domain;
        for (std::size_t di = 0; di < domains.size(); ++di) {
            const auto& d = domains[di];
            const int n_parts = a + (extra.count(di) ? 1 : 0);
            std::vector<std::size_t> idx(d.size());
            std::iota(idx.begin(), idx.end(), 0);
            rng.shuffle(idx);
            // near-equal parts; remainders go to the earlier parts
            const std::size_t base = d.size() / static_cast<std::size_t>(n_parts);
            const std::size_t rem = d.size() % static_cast<std::size_t>(n_parts);
            std::size_t off = 0;
            for (int p = 0; p < n_parts; ++p) {
                const std::size_t len = base + (static_cast<std::size_t>(p) < rem ? 1 : 0);
                SplitPlan::Part part;
                part.domain_id = d.domain_id;
                part.indices.assign(idx.begin() + static_cast<std::ptrdiff_t>(off),
                                    idx.begin() + static_cast<std::ptrdiff_t>(off + len));
                std::sort(part.indices.begin(), part.indices.end());
                parts_by_domain[d.domain_id].push_back(std::move(part));
                off += len;
            }
        }
        SplitPlan plan = deal_parts(parts_by_domain, n_clients, domains_per_client);
        // the dealing order guarantees distinctness for feasible inputs; the
        // retry only re-randomizes the sample shuffles if it ever fails
        if (clients_hold_distinct_domains(plan)) return plan;
    }
    throw ConfigError("split_domains: could not satisfy the distinct-domains constraint");
}

namespace {

void append_sample(Matrix& x, std::vector<int>& y, std::vector<SampleRef>& src, const DomainDataset& d,
                   std::size_t row, std::vector<double>& staging) {
    auto r = d.features.row(row);
    staging.insert(staging.end(), r.begin(), r.end());
    y.push_back(d.labels[row]);
    src.push_back({d.domain_id, row});
    (void)x;
}

Matrix finalize_matrix(std::vector<double>&& staging, std::size_t cols) {
    const std::size_t rows = cols == 0 ? 0 : staging.size() / cols;
    Matrix m(rows, cols);
    m.values() = std::move(staging);
    return m;
}

}  // namespace

EvalSplit make_eval_split(const SplitPlan& plan, const std::vector<DomainDataset>& domains, int target_domain,
                          double holdout_frac, RngStream& rng) {
    if (holdout_frac < 0.0 || holdout_frac >= 1.0)
        throw std::invalid_argument("make_eval_split: holdout_frac must be in [0,1)");
    std::map<int, const DomainDataset*> by_id;
    for (const auto& d : domains) by_id[d.domain_id] = &d;
    if (!by_id.count(target_domain)) throw std::invalid_argument("make_eval_split: unknown target domain");
    for (const auto& parts : plan.assignments)
        for (const auto& p : parts)
            if (p.domain_id == target_domain)
                throw std::invalid_argument("make_eval_split: target domain present in the split plan");

    const std::size_t feature_dim = by_id.begin()->second->features.cols();
    EvalSplit split;
    split.target_domain = target_domain;

    for (const auto& parts : plan.assignments) {
        // gather the client's shard as (domain, row) refs grouped by class
        std::vector<SampleRef> shard;
        for (const auto& p : parts)
            for (std::size_t row : p.indices) shard.push_back({p.domain_id, row});
        if (shard.empty()) throw ConfigError("make_eval_split: empty client shard");

        std::map<int, std::vector<SampleRef>> by_class;
        for (const auto& ref : shard) by_class[by_id.at(ref.domain_id)->labels[ref.index]].push_back(ref);

        // largest-remainder stratified holdout
        const auto total_val =
            static_cast<std::size_t>(std::llround(holdout_frac * static_cast<double>(shard.size())));
        std::vector<std::pair<int, std::size_t>> take;  // class -> validation count
        std::vector<std::pair<double, int>> remainders;
        std::size_t assigned = 0;
        for (auto& [cls, refs] : by_class) {
            const double quota = holdout_frac * static_cast<double>(refs.size());
            const auto base = static_cast<std::size_t>(quota);
            take.emplace_back(cls, base);
            assigned += base;
            remainders.emplace_back(quota - static_cast<double>(base), cls);
        }
        std::sort(remainders.begin(), remainders.end(), [](const auto& x, const auto& y) {
            if (x.first != y.first) return x.first > y.first;
            return x.second < y.second;
        });
        for (std::size_t i = 0; assigned < total_val && i < remainders.size(); ++i) {
            for (auto& [cls, cnt] : take)
                if (cls == remainders[i].second && cnt < by_class[cls].size()) {
                    ++cnt;
                    ++assigned;
                    break;
                }
        }

        ClientData cd;
        std::vector<double> train_staging, val_staging;
        for (auto& [cls, refs] : by_class) {
            rng.shuffle(refs);
            std::size_t n_val = 0;
            for (auto& [c, cnt] : take)
                if (c == cls) n_val = cnt;
            for (std::size_t i = 0; i < refs.size(); ++i) {
                const auto& d = *by_id.at(refs[i].domain_id);
                if (i < n_val)
                    append_sample(cd.val_x, cd.val_y, cd.val_src, d, refs[i].index, val_staging);
                else
                    append_sample(cd.train_x, cd.train_y, cd.train_src, d, refs[i].index, train_staging);
            }
        }
        cd.train_x = finalize_matrix(std::move(train_staging), feature_dim);
        cd.val_x = finalize_matrix(std::move(val_staging), feature_dim);
        split.clients.push_back(std::move(cd));
    }

    const auto& target = *by_id.at(target_domain);
    split.ood_x = target.features;
    split.ood_y = target.labels;
    for (std::size_t i = 0; i < target.size(); ++i) split.ood_src.push_back({target_domain, i});
    return split;
}

EvalSplit inject_few_shot(const EvalSplit& split, int shots_per_client, RngStream& rng) {
    if (shots_per_client < 0) throw std::invalid_argument("inject_few_shot: negative shot count");
    if (shots_per_client == 0) return split;
    const std::size_t need = static_cast<std::size_t>(shots_per_client) * split.clients.size();
    if (need > split.ood_y.size())
        throw ConfigError("inject_few_shot: requested shots exceed the target domain size");

    // draw `need` distinct positions from the current ood set
    std::vector<std::size_t> pool(split.ood_y.size());
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < need; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next_below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }

    EvalSplit out = split;
    const std::size_t feature_dim = split.ood_x.cols();
    std::size_t cursor = 0;
    for (auto& cd : out.clients) {
        std::vector<double> staging(cd.train_x.values());
        for (int s = 0; s < shots_per_client; ++s) {
            const std::size_t pos = pool[cursor++];
            auto row = split.ood_x.row(pos);
            staging.insert(staging.end(), row.begin(), row.end());
            cd.train_y.push_back(split.ood_y[pos]);
            cd.train_src.push_back(split.ood_src[pos]);
        }
        cd.train_x = finalize_matrix(std::move(staging), feature_dim);
    }

    std::set<std::size_t> taken(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(need));
    std::vector<double> ood_staging;
    std::vector<int> ood_y;
    std::vector<SampleRef> ood_src;
    for (std::size_t i = 0; i < split.ood_y.size(); ++i) {
        if (taken.count(i)) continue;
        auto row = split.ood_x.row(i);
        ood_staging.insert(ood_staging.end(), row.begin(), row.end());
        ood_y.push_back(split.ood_y[i]);
        ood_src.push_back(split.ood_src[i]);
    }
    out.ood_x = finalize_matrix(std::move(ood_staging), feature_dim);
    out.ood_y = std::move(ood_y);
    out.ood_src = std::move(ood_src);
    return out;
}

}  // namespace hfedf
