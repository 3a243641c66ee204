#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hfedf/dataset.hpp"
#include "hfedf/experiment.hpp"
#include "hfedf/federation.hpp"
#include "hfedf/ops.hpp"
#include "hfedf/runner.hpp"
#include "hfedf/splits.hpp"
#include "hfedf/version.hpp"

namespace py = pybind11;
using namespace hfedf;

namespace {

std::vector<std::vector<double>> matrix_to_lists(const Matrix& m) {
    std::vector<std::vector<double>> out;
    out.reserve(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) out.emplace_back(m.row(r).begin(), m.row(r).end());
    return out;
}

Matrix lists_to_matrix(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols()) throw std::invalid_argument("ragged rows");
        std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
    }
    return m;
}

}  // namespace

PYBIND11_MODULE(hfedf, m) {
    m.doc() = "Federated domain-generalization simulator (C++ core)";
    m.attr("__version__") = kVersion;

    py::class_<DomainDataset>(m, "DomainDataset")
        .def_readonly("domain_id", &DomainDataset::domain_id)
        .def_property_readonly("features", [](const DomainDataset& d) { return matrix_to_lists(d.features); })
        .def_readonly("labels", &DomainDataset::labels)
        .def("__len__", &DomainDataset::size);

    m.def(
        "gen_synthetic_domains",
        [](int n_domains, int n_classes, int samples_per_domain, int feature_dim, double shift_strength,
           std::uint64_t seed) {
            RngStream rng(seed, "data");
            return gen_synthetic_domains(n_domains, n_classes, samples_per_domain, feature_dim,
                                         shift_strength, rng);
        },
        py::arg("n_domains"), py::arg("n_classes"), py::arg("samples_per_domain"), py::arg("feature_dim"),
        py::arg("shift_strength"), py::arg("seed"));

    m.def(
        "split_domains",
        [](const std::vector<DomainDataset>& domains, int n_clients, int domains_per_client,
           std::uint64_t seed) {
            RngStream rng(seed, "split");
            SplitPlan plan = split_domains(domains, n_clients, domains_per_client, rng);
            std::vector<std::vector<std::pair<int, std::vector<std::size_t>>>> out;
            for (const auto& parts : plan.assignments) {
                std::vector<std::pair<int, std::vector<std::size_t>>> client;
                for (const auto& p : parts) client.emplace_back(p.domain_id, p.indices);
                out.push_back(std::move(client));
            }
            return out;
        },
        py::arg("domains"), py::arg("n_clients"), py::arg("domains_per_client"), py::arg("seed"));

    m.def(
        "grad_align",
        [](const std::vector<std::vector<double>>& grads, const std::string& sign) {
            AlignResult r = grad_align(grads, gradalign_sign_from_string(sign));
            return std::make_pair(r.weights, r.cosines);
        },
        py::arg("grads"), py::arg("sign") = "plain");

    py::class_<EmaState>(m, "EmaState")
        .def(py::init<>())
        .def_readonly("initialized", &EmaState::initialized)
        .def_readonly("shadow", &EmaState::shadow);

    m.def(
        "ema_apply",
        [](std::vector<double> current, EmaState& state, int t, int warmup, double decay) {
            ema_apply(current, state, t, warmup, decay);
            return current;
        },
        py::arg("current"), py::arg("state"), py::arg("t"), py::arg("warmup"), py::arg("decay"));

    m.def("cosine_similarity", [](const std::vector<double>& u, const std::vector<double>& v) {
        return cosine_similarity(u, v);
    });

    m.def(
        "cross_entropy",
        [](const std::vector<std::vector<double>>& logits, const std::vector<int>& labels) {
            auto ce = cross_entropy(lists_to_matrix(logits), labels);
            return std::make_pair(ce.loss, matrix_to_lists(ce.grad));
        },
        py::arg("logits"), py::arg("labels"));

    m.def(
        "run_config",
        [](const std::string& config_json, const std::string& out_dir, int jobs) {
            RunOptions opts;
            opts.out_dir = out_dir;
            opts.jobs = jobs;
            RunReport report = run_to_directory(ExperimentConfig::parse(config_json), opts);
            return report.table.to_csv();
        },
        py::arg("config_json"), py::arg("out_dir"), py::arg("jobs") = 1,
        "Run an experiment grid from a JSON config string; writes the run "
        "directory and returns the results CSV.");
}
