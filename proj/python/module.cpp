#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "bijepa/runner.hpp"

namespace py = pybind11;
using namespace bijepa;

namespace {

py::array_t<double> to_numpy(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    py::array_t<double> out(shape);
    std::copy(t.values().begin(), t.values().end(), out.mutable_data());
    return out;
}

Tensor from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    Shape shape(a.shape(), a.shape() + a.ndim());
    return Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

// Reports travel as JSON text; the Python side decodes them.
std::string run_json(const std::string& experiment, const std::string& variant, std::uint64_t seed,
                     std::optional<std::string> out_dir, std::optional<std::string> mnist_dir,
                     std::optional<std::size_t> steps, std::optional<double> alpha,
                     const std::map<std::string, std::string>& overrides) {
    RunConfig cfg;
    cfg.experiment = experiment_from_string(experiment);
    cfg.variant = variant_from_string(variant);
    cfg.seed = seed;
    if (out_dir) cfg.out_dir = *out_dir;
    if (mnist_dir) cfg.mnist_dir = *mnist_dir;
    cfg.steps = steps;
    cfg.alpha = alpha;
    cfg.overrides.assign(overrides.begin(), overrides.end());
    ExperimentReport r;
    {
        py::gil_scoped_release release;
        r = run(cfg);
    }
    return report_to_json(r).dump();
}

std::string resolved_json(const std::string& experiment, const std::string& variant,
                          const std::map<std::string, std::string>& overrides) {
    RunConfig cfg;
    cfg.experiment = experiment_from_string(experiment);
    cfg.variant = variant_from_string(variant);
    cfg.overrides.assign(overrides.begin(), overrides.end());
    const Hyperparams h = resolve_hyperparams(cfg);
    nlohmann::json j;
    visit_hyperparams(h, [&](const char* key, const auto& v) { j[key] = v; });
    return j.dump();
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "BiJEPA / classic JEPA training core";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def("run_json", &run_json, py::arg("experiment"), py::arg("variant"), py::arg("seed") = 0,
          py::arg("out_dir") = py::none(), py::arg("mnist_dir") = py::none(), py::arg("steps") = py::none(),
          py::arg("alpha") = py::none(), py::arg("overrides") = std::map<std::string, std::string>{});
    m.def("resolved_json", &resolved_json, py::arg("experiment"), py::arg("variant"),
          py::arg("overrides") = std::map<std::string, std::string>{});

    m.def(
        "sine_batch",
        [](std::uint64_t seed, std::size_t batch, double noise_std) {
            SineConfig cfg;
            cfg.batch = batch;
            cfg.noise_std = noise_std;
            const ViewBatch b = gen_sine_batch(cfg, seed);
            return py::make_tuple(to_numpy(b.x), to_numpy(b.y));
        },
        py::arg("seed"), py::arg("batch") = 64, py::arg("noise_std") = 0.05);

    m.def(
        "integrate_lorenz",
        [](std::array<double, 3> init, std::size_t n_steps, double dt, bool rk4) {
            LorenzConfig cfg;
            cfg.dt = dt;
            cfg.integrator = rk4 ? Integrator::Rk4 : Integrator::Euler;
            const auto rows = integrate_lorenz(cfg, init, n_steps);
            py::array_t<double> out({static_cast<py::ssize_t>(rows.size()), py::ssize_t{3}});
            auto v = out.mutable_unchecked<2>();
            for (std::size_t i = 0; i < rows.size(); ++i) {
                for (py::ssize_t k = 0; k < 3; ++k) v(i, k) = rows[i][k];
            }
            return out;
        },
        py::arg("init"), py::arg("n_steps"), py::arg("dt") = 0.01, py::arg("rk4") = false);

    m.def(
        "sphere_project",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& s) {
            if (s.ndim() != 2) throw py::value_error("sphere_project expects a 2-D array");
            Graph g = Graph::inference();
            return to_numpy(sphere_project(g, from_numpy(s)));
        },
        py::arg("embeddings"));

    m.def(
        "fetch_mnist",
        [](const std::filesystem::path& out_dir, const std::string& url) {
            return fetch_mnist(out_dir, url);
        },
        py::arg("out_dir"), py::arg("url") = std::string(kDefaultMnistUrl));
}
