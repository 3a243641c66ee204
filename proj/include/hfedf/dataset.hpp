#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hfedf/matrix.hpp"
#include "hfedf/rng.hpp"

namespace hfedf {

/// Labeled samples belonging to one domain.
struct DomainDataset {
    int domain_id = 0;
    Matrix features;          // (n_samples, feature_dim)
    std::vector<int> labels;  // values in [0, n_classes)

    std::size_t size() const { return labels.size(); }
};

/// Parameters of the synthetic multi-domain task: class-conditional Gaussian
/// clusters shared across domains, with a per-domain rotation + translation
/// whose magnitude is a single scalar (shift_strength).
struct SyntheticSpec {
    int n_domains = 4;
    int n_classes = 5;
    int samples_per_domain = 300;
    int feature_dim = 8;
    double shift_strength = 1.0;

    // geometry of the task; fixed defaults, not part of the experiment schema
    double class_separation = 1.1;
    double within_class_std = 1.0;
    double max_rotation = 0.9;     // radians per plane at shift_strength 1
    double translation_std = 0.5;  // per-coordinate std at shift_strength 1
};

std::vector<DomainDataset> gen_synthetic_domains(const SyntheticSpec& spec, RngStream& rng);
std::vector<DomainDataset> gen_synthetic_domains(int n_domains, int n_classes, int samples_per_domain,
                                                 int feature_dim, double shift_strength, RngStream& rng);

/// JSON-lines export/import: one record per sample {domain, label, features}.
void write_domains_jsonl(const std::filesystem::path& path, const std::vector<DomainDataset>& domains);
std::vector<DomainDataset> read_domains_jsonl(const std::filesystem::path& path);

}  // namespace hfedf
