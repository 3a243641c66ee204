#include "hfedf/dataset.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "hfedf/errors.hpp"

namespace hfedf {

namespace {

struct DomainTransform {
    std::vector<std::pair<std::size_t, std::size_t>> planes;
    std::vector<double> angles;       // one per plane
    std::vector<double> translation;  // feature_dim

    void apply(std::span<double> x) const {
        for (std::size_t p = 0; p < planes.size(); ++p) {
            auto [i, j] = planes[p];
            const double c = std::cos(angles[p]), s = std::sin(angles[p]);
            const double xi = x[i], xj = x[j];
            x[i] = c * xi - s * xj;
            x[j] = s * xi + c * xj;
        }
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += translation[i];
    }
};

}  // namespace

std::vector<DomainDataset> gen_synthetic_domains(const SyntheticSpec& spec, RngStream& rng) {
    if (spec.n_domains < 2) throw std::invalid_argument("gen_synthetic_domains: need at least 2 domains");
    if (spec.n_classes < 2) throw std::invalid_argument("gen_synthetic_domains: need at least 2 classes");
    if (spec.samples_per_domain < 1) throw std::invalid_argument("gen_synthetic_domains: need samples");
    if (spec.feature_dim < 2) throw std::invalid_argument("gen_synthetic_domains: feature_dim must be >= 2");

    const auto F = static_cast<std::size_t>(spec.feature_dim);
    const auto C = static_cast<std::size_t>(spec.n_classes);

    // shared class structure
    std::vector<std::vector<double>> means(C, std::vector<double>(F));
    for (auto& m : means)
        for (double& v : m) v = spec.class_separation * rng.next_normal();

    // per-domain transforms; all identity when shift_strength is 0
    std::vector<DomainTransform> transforms;
    for (int k = 0; k < spec.n_domains; ++k) {
        DomainTransform t;
        std::vector<std::size_t> axes(F);
        std::iota(axes.begin(), axes.end(), 0);
        rng.shuffle(axes);
        for (std::size_t p = 0; p + 1 < F; p += 2) {
            t.planes.emplace_back(axes[p], axes[p + 1]);
            t.angles.push_back(spec.shift_strength * spec.max_rotation * rng.next_uniform(-1.0, 1.0));
        }
        t.translation.resize(F);
        for (double& v : t.translation) v = spec.shift_strength * spec.translation_std * rng.next_normal();
        transforms.push_back(std::move(t));
    }

    // balanced labels: the first (n mod C) classes carry one extra sample
    const std::size_t n = static_cast<std::size_t>(spec.samples_per_domain);
    std::vector<std::size_t> class_counts(C, n / C);
    for (std::size_t c = 0; c < n % C; ++c) ++class_counts[c];

    std::vector<DomainDataset> out;
    for (int k = 0; k < spec.n_domains; ++k) {
        DomainDataset d;
        d.domain_id = k;
        d.features = Matrix(n, F);
        d.labels.reserve(n);
        std::size_t row = 0;
        for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t s = 0; s < class_counts[c]; ++s) {
                auto x = d.features.row(row);
                for (std::size_t f = 0; f < F; ++f)
                    x[f] = means[c][f] + spec.within_class_std * rng.next_normal();
                transforms[static_cast<std::size_t>(k)].apply(x);
                d.labels.push_back(static_cast<int>(c));
                ++row;
            }
        }
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<DomainDataset> gen_synthetic_domains(int n_domains, int n_classes, int samples_per_domain,
                                                 int feature_dim, double shift_strength, RngStream& rng) {
    SyntheticSpec spec;
    spec.n_domains = n_domains;
    spec.n_classes = n_classes;
    spec.samples_per_domain = samples_per_domain;
    spec.feature_dim = feature_dim;
    spec.shift_strength = shift_strength;
    return gen_synthetic_domains(spec, rng);
}

void write_domains_jsonl(const std::filesystem::path& path, const std::vector<DomainDataset>& domains) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open for writing: " + path.string());
    for (const auto& d : domains) {
        for (std::size_t r = 0; r < d.size(); ++r) {
            nlohmann::json rec;
            rec["domain"] = d.domain_id;
            rec["label"] = d.labels[r];
            auto row = d.features.row(r);
            rec["features"] = std::vector<double>(row.begin(), row.end());
            out << rec.dump() << '\n';
        }
    }
}

std::vector<DomainDataset> read_domains_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open for reading: " + path.string());
    std::map<int, std::vector<std::pair<int, std::vector<double>>>> by_domain;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto rec = nlohmann::json::parse(line);
        by_domain[rec.at("domain").get<int>()].emplace_back(rec.at("label").get<int>(),
                                                            rec.at("features").get<std::vector<double>>());
    }
    std::vector<DomainDataset> out;
    for (auto& [id, samples] : by_domain) {
        DomainDataset d;
        d.domain_id = id;
        if (samples.empty()) continue;
        d.features = Matrix(samples.size(), samples.front().second.size());
        for (std::size_t r = 0; r < samples.size(); ++r) {
            d.labels.push_back(samples[r].first);
            for (std::size_t c = 0; c < samples[r].second.size(); ++c) d.features(r, c) = samples[r].second[c];
        }
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace hfedf
