// Python bindings for the core operations: data transforms, SOM, masked MLP,
// GEM projection, and the experiment harness.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <span>
#include <stdexcept>

#include "somlp/harness.hpp"
#include "somlp/loss.hpp"
#include "somlp/strategies.hpp"

namespace py = pybind11;
using namespace somlp;

namespace {

std::vector<float> to_vec(py::array_t<float, py::array::c_style | py::array::forcecast> a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-d float array");
  return {a.data(), a.data() + a.shape(0)};
}

DenseMatrix to_matrix(py::array_t<float, py::array::c_style | py::array::forcecast> a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d float array");
  DenseMatrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::memcpy(m.values.data(), a.data(), sizeof(float) * m.values.size());
  return m;
}

py::array_t<float> from_vec(const std::vector<float>& v) {
  py::array_t<float> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
  std::memcpy(out.mutable_data(), v.data(), sizeof(float) * v.size());
  return out;
}

py::array_t<float> from_matrix(const DenseMatrix& m) {
  return py::array_t<float>({static_cast<py::ssize_t>(m.rows), static_cast<py::ssize_t>(m.cols)},
                            m.values.data());
}

RunConfig config_from_kwargs(const std::string& method, const std::string& dataset,
                             const py::kwargs& kwargs) {
  RunConfig cfg = default_config(method_from_string(method), dataset_from_string(dataset));
  for (auto item : kwargs) {
    const std::string key = py::cast<std::string>(item.first);
    const auto& value = item.second;
    if (key == "seed") cfg.master_seed = py::cast<std::uint64_t>(value);
    else if (key == "seeds") cfg.seeds_count = py::cast<int>(value);
    else if (key == "alpha") cfg.alpha = py::cast<float>(value);
    else if (key == "sigma") cfg.sigma = py::cast<float>(value);
    else if (key == "epsilon") cfg.epsilon = py::cast<float>(value);
    else if (key == "tau") cfg.tau = py::cast<float>(value);
    else if (key == "batch_size") cfg.batch_size = py::cast<int>(value);
    else if (key == "learning_rate") cfg.learning_rate = py::cast<float>(value);
    else if (key == "memory_slots") cfg.memory_slots = py::cast<int>(value);
    else if (key == "memory_strength") cfg.memory_strength = py::cast<float>(value);
    else if (key == "hidden_units") cfg.hidden_units = py::cast<int>(value);
    else if (key == "grid_rows") cfg.grid_rows = py::cast<int>(value);
    else if (key == "grid_cols") cfg.grid_cols = py::cast<int>(value);
    else if (key == "num_tasks") cfg.num_tasks = py::cast<int>(value);
    else if (key == "samples_per_task") cfg.samples_per_task = py::cast<int>(value);
    else if (key == "eval_subset") cfg.eval_subset = py::cast<int>(value);
    else if (key == "data_dir") cfg.data_dir = py::cast<std::string>(value);
    else if (key == "quiet") cfg.quiet = py::cast<bool>(value);
    else throw std::invalid_argument("unknown config key: " + key);
  }
  cfg.quiet = kwargs.contains("quiet") ? cfg.quiet : true;
  validate(cfg);
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Continual-learning benchmark core: SOM-gated MLP and baselines";

  // --- numeric primitives ---
  m.def(
      "matvec",
      [](py::array_t<float, py::array::c_style | py::array::forcecast> a,
         py::array_t<float, py::array::c_style | py::array::forcecast> x) {
        return from_vec(matvec(to_matrix(a), to_vec(x)));
      },
      py::arg("matrix"), py::arg("x"));
  m.def(
      "softmax_xent",
      [](py::array_t<float, py::array::c_style | py::array::forcecast> logits, std::size_t label) {
        const auto r = softmax_xent(to_vec(logits), label);
        return py::make_tuple(r.loss, from_vec(r.grad));
      },
      py::arg("logits"), py::arg("label"));

  // --- data transforms ---
  m.def("gen_permutation", &gen_permutation, py::arg("master_seed"), py::arg("task_index"));
  m.def(
      "apply_permutation",
      [](py::array_t<float, py::array::c_style | py::array::forcecast> x,
         const std::vector<std::uint32_t>& perm) {
        const auto in = to_vec(x);
        std::vector<float> out(in.size());
        apply_permutation(in, perm, out);
        return from_vec(out);
      },
      py::arg("x"), py::arg("perm"));
  m.def(
      "rotate_bilinear",
      [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> image,
         float angle_degrees) {
        if (image.size() != static_cast<py::ssize_t>(kImageSize))
          throw std::invalid_argument("image must have 784 pixels");
        py::array_t<std::uint8_t> out({py::ssize_t(kImageSide), py::ssize_t(kImageSide)});
        rotate_bilinear(image.data(), out.mutable_data(), angle_degrees);
        return out;
      },
      py::arg("image"), py::arg("angle_degrees"));
  m.def("task_angles", &task_angles, py::arg("num_tasks"));

  // --- SOM ---
  py::class_<SomSchedule>(m, "SomSchedule")
      .def(py::init([](float alpha0, float sigma0, float epsilon, float tau,
                       std::int64_t n_steps) {
             return SomSchedule{alpha0, sigma0, epsilon, tau, n_steps, 0};
           }),
           py::arg("alpha0"), py::arg("sigma0"), py::arg("epsilon"), py::arg("tau"),
           py::arg("n_steps"))
      .def_readwrite("alpha0", &SomSchedule::alpha0)
      .def_readwrite("sigma0", &SomSchedule::sigma0)
      .def_readwrite("epsilon", &SomSchedule::epsilon)
      .def_readwrite("tau", &SomSchedule::tau)
      .def_readwrite("n_steps", &SomSchedule::n_steps)
      .def_readwrite("t", &SomSchedule::t);

  py::class_<SomState>(m, "SomState")
      .def_readonly("grid_rows", &SomState::grid_rows)
      .def_readonly("grid_cols", &SomState::grid_cols)
      .def_property_readonly("weights",
                             [](const SomState& s) { return from_matrix(s.weights); })
      .def("find_bmu",
           [](const SomState& s,
              py::array_t<float, py::array::c_style | py::array::forcecast> x) {
             return find_bmu(s, to_vec(x));
           })
      .def("output_mask",
           [](const SomState& s, py::array_t<float, py::array::c_style | py::array::forcecast> x,
              float epsilon) { return from_vec(output_mask(s, to_vec(x), epsilon)); })
      .def("u_matrix", [](const SomState& s) { return from_vec(u_matrix(s)); });

  m.def(
      "init_som",
      [](int grid_rows, int grid_cols, int input_dim, std::uint64_t seed) {
        Prng prng(seed, RngStream::Init);
        return init_som(grid_rows, grid_cols, input_dim, prng);
      },
      py::arg("grid_rows"), py::arg("grid_cols"), py::arg("input_dim"), py::arg("seed"));
  m.def(
      "som_update_step",
      [](SomState& som, SomSchedule& schedule,
         py::array_t<float, py::array::c_style | py::array::forcecast> batch) {
        som_update_step(som, schedule, to_matrix(batch));
      },
      py::arg("som"), py::arg("schedule"), py::arg("batch"));
  m.def(
      "decayed_params",
      [](const SomSchedule& schedule, std::int64_t t) {
        const auto p = decayed_params(schedule, t);
        return py::make_tuple(p.alpha, p.sigma);
      },
      py::arg("schedule"), py::arg("t"));

  // --- masked MLP ---
  py::class_<MlpModel>(m, "MlpModel")
      .def_property_readonly("w1", [](const MlpModel& m_) { return from_matrix(m_.w1); })
      .def_property_readonly("w2", [](const MlpModel& m_) { return from_matrix(m_.w2); })
      .def("param_count", [](const MlpModel& m_) { return param_count(m_); })
      .def("forward",
           [](const MlpModel& m_, py::array_t<float, py::array::c_style | py::array::forcecast> x,
              py::object mask) {
             std::vector<float> mask_vec;
             if (!mask.is_none())
               mask_vec = to_vec(py::cast<py::array_t<float, py::array::c_style |
                                                                  py::array::forcecast>>(mask));
             return from_vec(forward(m_, to_vec(x), mask_vec));
           },
           py::arg("x"), py::arg("mask") = py::none())
      .def("predict",
           [](const MlpModel& m_, py::array_t<float, py::array::c_style | py::array::forcecast> x) {
             return predict(m_, to_vec(x), {});
           });

  m.def(
      "init_mlp",
      [](std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
         std::uint64_t seed) {
        Prng prng(seed, RngStream::Init);
        return init_mlp(input_dim, hidden_dim, output_dim, Activation::Relu, prng);
      },
      py::arg("input_dim"), py::arg("hidden_dim"), py::arg("output_dim"), py::arg("seed"));

  // --- GEM projection ---
  m.def(
      "gem_project",
      [](py::array_t<float, py::array::c_style | py::array::forcecast> grad,
         py::array_t<float, py::array::c_style | py::array::forcecast> memory_grads,
         double margin) {
        const auto r = gem_project(to_vec(grad), to_matrix(memory_grads), margin);
        return py::make_tuple(from_vec(r.gradient), r.projected, r.fallback);
      },
      py::arg("grad"), py::arg("memory_grads"), py::arg("margin"));

  // --- experiment harness ---
  m.def(
      "run_experiment",
      [](const std::string& method, const std::string& dataset, const py::kwargs& kwargs) {
        const RunConfig cfg = config_from_kwargs(method, dataset, kwargs);
        if (cfg.data_dir.empty()) throw std::invalid_argument("data_dir is required");
        const MnistData data = load_mnist(cfg.data_dir);
        const RunResult result = run_experiment(cfg, data);
        py::dict out;
        out["final_average_mean"] = result.final_average_mean;
        out["final_average_std"] = result.final_average_std;
        out["final_average_per_seed"] = result.final_average_per_seed;
        out["metrics_csv"] = metrics_csv_string(result.metrics);
        return out;
      },
      py::arg("method"), py::arg("dataset"));
  m.def("mnist_available", &mnist_available, py::arg("data_dir"));
}
