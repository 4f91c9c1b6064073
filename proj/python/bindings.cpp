#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "alrd/classify.hpp"
#include "alrd/errors.hpp"
#include "alrd/fields.hpp"
#include "alrd/green.hpp"
#include "alrd/spectra.hpp"
#include "alrd/stable_limits.hpp"

namespace py = pybind11;
using namespace alrd;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// arrays are indexed [s, t] to match the row-major field layout
Array to_numpy(const LatticeField& f) {
  Array a({f.height, f.width});
  std::memcpy(a.mutable_data(), f.values.data(), f.values.size() * sizeof(double));
  return a;
}

LatticeField from_numpy(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("field must be a 2D array indexed [s, t]");
  LatticeField f(int(a.shape(1)), int(a.shape(0)));
  std::memcpy(f.values.data(), a.data(), f.values.size() * sizeof(double));
  return f;
}

StableLimitSpec stable_spec(const std::string& model, double alpha, double beta, double gamma) {
  StableLimitSpec s;
  s.model = WalkModel::of(parse_walk(model));
  s.alpha = alpha;
  s.mixing = MixingLaw::standard(beta);
  s.gamma = gamma;
  s.validate();
  return s;
}

GaussMethod method_of(const std::string& m) {
  if (m == "fft") return GaussMethod::SpectralFFT;
  if (m == "cholesky") return GaussMethod::ExactCholesky;
  throw ConfigError("method must be 'fft' or 'cholesky'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Lattice Green functions, spectral scaling limits, stable limit functionals and field simulation";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ResourceError>(m, "ResourceError", PyExc_MemoryError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def(
      "green",
      [](const std::string& model, double a, long long t, long long s, const std::string& backend) {
        GreenKernel k;
        k.model = WalkModel::of(parse_walk(model));
        k.a = a;
        if (backend == "series") k.backend = GreenBackend::Series;
        else if (backend == "fft") k.backend = GreenBackend::FftInversion;
        else if (backend == "line") k.backend = GreenBackend::LineIntegral;
        else throw ConfigError("backend must be series, fft or line");
        return green_eval(k, t, s);
      },
      py::arg("model"), py::arg("a"), py::arg("t"), py::arg("s"), py::arg("backend") = "series");
  m.def("h3", &h3, py::arg("t"), py::arg("s"), py::arg("z"));
  m.def("h4", &h4, py::arg("t"), py::arg("s"), py::arg("z"));
  m.def(
      "scaling_limit_probe",
      [](const std::string& model, double t, double s, double z, const std::vector<double>& lambdas) {
        py::list out;
        for (const auto& r : scaling_limit_probe(WalkModel::of(parse_walk(model)), t, s, z, lambdas))
          out.append(py::dict(py::arg("lambda") = r.lambda, py::arg("rescaled_green") = r.rescaled_green,
                              py::arg("limit_kernel") = r.limit_kernel, py::arg("rel_err") = r.rel_err,
                              py::arg("backend") = r.backend));
        return out;
      },
      py::arg("model"), py::arg("t"), py::arg("s"), py::arg("z"), py::arg("lambdas"));

  py::class_<SpectralModel>(m, "SpectralModel")
      .def_static("type_i", &SpectralModel::type_i, py::arg("H1"), py::arg("H2"), py::arg("c") = 1.0)
      .def_static("type_ii", &SpectralModel::type_ii, py::arg("d1"), py::arg("d2"))
      .def_static("lavancier", &SpectralModel::lavancier, py::arg("theta1"), py::arg("theta2"), py::arg("d"))
      .def_property_readonly("name", &SpectralModel::name)
      .def_property_readonly("gamma0", &SpectralModel::gamma0)
      .def("__repr__", &SpectralModel::name);

  py::class_<ScalingLaw>(m, "ScalingLaw")
      .def_readonly("gamma", &ScalingLaw::gamma)
      .def_readonly("H", &ScalingLaw::H)
      .def_readonly("gamma0", &ScalingLaw::gamma0)
      .def_property_readonly("regime", [](const ScalingLaw& l) { return regime_name(l.regime); });

  m.def("density", &density, py::arg("model"), py::arg("x"), py::arg("y"));
  m.def("kappa_sq", &kappa_sq, py::arg("d"));
  m.def("kappa_sq_integral", &kappa_sq_integral, py::arg("d"));
  m.def("H_of_gamma", &H_of_gamma, py::arg("model"), py::arg("gamma"));
  m.def("variance_partial_sum", &variance_partial_sum, py::arg("model"), py::arg("n"), py::arg("gamma"),
        py::arg("rel_tol") = 1e-4);
  m.def("limit_variance", &limit_variance, py::arg("model"), py::arg("gamma"), py::arg("x") = 1.0,
        py::arg("y") = 1.0);

  m.def(
      "H_table",
      [](const std::string& model, double alpha, double beta, double gamma) {
        return H_table(parse_walk(model), alpha, beta, gamma);
      },
      py::arg("model"), py::arg("alpha"), py::arg("beta"), py::arg("gamma"));
  m.def(
      "J_gamma",
      [](const std::string& model, double alpha, double beta, double gamma, double x, double y) {
        return J_gamma(stable_spec(model, alpha, beta, gamma), x, y);
      },
      py::arg("model"), py::arg("alpha"), py::arg("beta"), py::arg("gamma"), py::arg("x") = 1.0, py::arg("y") = 1.0);
  m.def(
      "J_n_gamma",
      [](const std::string& model, double alpha, double beta, double gamma, long long n) {
        return J_n_gamma(stable_spec(model, alpha, beta, gamma), n);
      },
      py::arg("model"), py::arg("alpha"), py::arg("beta"), py::arg("gamma"), py::arg("n"));

  m.def(
      "simulate_gaussian",
      [](const SpectralModel& model, int width, int height, std::uint64_t seed, const std::string& method,
         int refine) { return to_numpy(simulate_gaussian_spectral(model, width, height, seed, method_of(method), refine)); },
      py::arg("model"), py::arg("width"), py::arg("height"), py::arg("seed") = 1, py::arg("method") = "fft",
      py::arg("refine") = 4);
  m.def(
      "white_noise",
      [](int width, int height, std::uint64_t seed, double sigma) {
        return to_numpy(white_noise_field(width, height, seed, sigma));
      },
      py::arg("width"), py::arg("height"), py::arg("seed") = 1, py::arg("sigma") = 1.0);
  m.def(
      "simulate_aggregate",
      [](const std::string& model, double alpha, double beta, long long N, int width, int height, std::uint64_t seed) {
        return to_numpy(aggregate_field(stable_spec(model, alpha, beta, 0.5), N, width, height, seed));
      },
      py::arg("model"), py::arg("alpha"), py::arg("beta"), py::arg("N"), py::arg("width"), py::arg("height"),
      py::arg("seed") = 1);
  m.def("field_seed", &field_seed, py::arg("master"), py::arg("i"));

  m.def(
      "estimate_H",
      [](const std::vector<Array>& arrays, double gamma, std::vector<long long> ladder) {
        std::vector<LatticeField> fs;
        for (const auto& a : arrays) fs.push_back(from_numpy(a));
        if (fs.empty()) throw ConfigError("estimate_H needs at least one field");
        if (ladder.empty()) ladder = feasible_ladder(fs.front().width, fs.front().height, gamma);
        const HEstimate e = estimate_H(fs, gamma, ladder);
        py::list rows;
        for (const auto& r : e.rows)
          rows.append(py::dict(py::arg("n") = r.n, py::arg("m") = r.m, py::arg("count") = r.count,
                               py::arg("var") = r.var));
        return py::dict(py::arg("H") = e.H, py::arg("se") = e.se, py::arg("rows") = rows);
      },
      py::arg("fields"), py::arg("gamma") = 1.0, py::arg("ladder") = std::vector<long long>{});

  m.def(
      "classify_spectral",
      [](const SpectralModel& model, const std::vector<double>& gammas) {
        return classify(model.name(), probe_ladder(model, gammas)).to_json().dump();
      },
      py::arg("model"), py::arg("gammas"), "JSON classification report from dependence probes");
  m.def(
      "classify_walk",
      [](const std::string& model, double alpha, double beta, const std::vector<double>& gammas) {
        const StableLimitSpec s = stable_spec(model, alpha, beta, gammas.empty() ? 1.0 : gammas.front());
        return classify(model, probe_ladder(s, gammas)).to_json().dump();
      },
      py::arg("model"), py::arg("alpha"), py::arg("beta"), py::arg("gammas"));

#ifdef ALRD_VERSION
  m.attr("__version__") = ALRD_VERSION;
#endif
}
