#include <numbers>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/eigen.h>
#include <pybind11/stl.h>

#include "brachi/bvp.hpp"
#include "brachi/jacobi.hpp"
#include "brachi/models.hpp"
#include "brachi/oracle.hpp"
#include "brachi/transform.hpp"
#include "brachi/variation.hpp"

namespace py = pybind11;
using namespace brachi;

namespace {

// exception type, alive for the lifetime of the interpreter
PyObject* error_type = nullptr;

Vec to_vec(const std::vector<double>& x) {
  if (x.empty() || x.size() > static_cast<std::size_t>(kMaxDim))
    throw Error(ErrorKind::InvalidArgument, "coordinate vector of length 1.." + std::to_string(kMaxDim) + " expected");
  return Eigen::Map<const Vec>(x.data(), static_cast<Eigen::Index>(x.size()));
}

std::vector<double> to_list(const Vec& v) { return {v.data(), v.data() + v.size()}; }

py::array_t<double> stack(const std::vector<Vec>& rows) {
  const py::ssize_t n = static_cast<py::ssize_t>(rows.size()), m = rows.empty() ? 0 : rows.front().size();
  py::array_t<double> a({n, m});
  auto r = a.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < n; ++i)
    for (py::ssize_t j = 0; j < m; ++j) r(i, j) = rows[i][j];
  return a;
}

py::dict curve_dict(const Curve& c) {
  py::dict d;
  py::array_t<double> t(std::vector<py::ssize_t>{static_cast<py::ssize_t>(c.t.size())});
  auto tw = t.mutable_unchecked<1>();
  for (std::size_t i = 0; i < c.t.size(); ++i) tw(static_cast<py::ssize_t>(i)) = c.t[i];
  d["t"] = t;
  d["q"] = stack(c.q);
  d["v"] = stack(c.v);
  return d;
}

Curve curve_from(const py::array_t<double>& t, const py::array_t<double>& q, const py::array_t<double>& v) {
  auto tt = t.unchecked<1>();
  auto qq = q.unchecked<2>();
  auto vv = v.unchecked<2>();
  if (qq.shape(0) != tt.shape(0) || vv.shape(0) != tt.shape(0) || qq.shape(1) != vv.shape(1) || qq.shape(1) > kMaxDim)
    throw Error(ErrorKind::GridMismatch, "t, q, v shapes disagree");
  Curve c;
  for (py::ssize_t i = 0; i < tt.shape(0); ++i) {
    c.t.push_back(tt(i));
    Vec a(qq.shape(1)), b(qq.shape(1));
    for (py::ssize_t j = 0; j < qq.shape(1); ++j) {
      a[j] = qq(i, j);
      b[j] = vv(i, j);
    }
    c.q.push_back(a);
    c.v.push_back(b);
  }
  return c;
}

}  // namespace

PYBIND11_MODULE(_brachi, m) {
  m.doc() = "Brachistochrones in stationary spacetimes";

  error_type = (new py::exception<Error>(m, "BrachiError", PyExc_RuntimeError))->ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::reinterpret_steal<py::object>(PyObject_CallFunction(error_type, "s", e.what()));
      inst.attr("kind") = to_string(e.kind());
      PyErr_SetObject(error_type, inst.ptr());
    }
  });

  m.def("model_names", &model_names);

  py::class_<SpacetimeModel>(m, "Model")
      .def(py::init([](const std::string& name, const std::map<std::string, double>& params) {
             return make_model(ModelSpec{name, params});
           }),
           py::arg("name"), py::arg("params") = std::map<std::string, double>{})
      .def_property_readonly("name", &SpacetimeModel::name)
      .def_property_readonly("dim", &SpacetimeModel::dim)
      .def("metric", [](const SpacetimeModel& s, const std::vector<double>& q) -> Eigen::MatrixXd { return s.metric(to_vec(q)); })
      .def("killing", [](const SpacetimeModel& s, const std::vector<double>& q) { return to_list(s.killing(to_vec(q))); })
      .def("in_uk", [](const SpacetimeModel& s, const std::vector<double>& q, double k) { return s.in_uk(to_vec(q), k); });

  py::class_<BrachistochroneSolution>(m, "Solution")
      .def(py::init([](double k, double T, const py::array_t<double>& t, const py::array_t<double>& q,
                       const py::array_t<double>& v) {
             BrachistochroneSolution s;
             s.k = k;
             s.T = T;
             s.sigma = curve_from(t, q, v);
             return s;
           }),
           py::arg("k"), py::arg("T"), py::arg("t"), py::arg("q"), py::arg("v"))
      .def_readonly("k", &BrachistochroneSolution::k)
      .def_readonly("T", &BrachistochroneSolution::T)
      .def_readonly("residual_conservation_Y", &BrachistochroneSolution::residual_conservation_Y)
      .def_readonly("residual_conservation_speed", &BrachistochroneSolution::residual_conservation_speed)
      .def_readonly("residual_ode", &BrachistochroneSolution::residual_ode)
      .def_property_readonly("curve", [](const BrachistochroneSolution& s) { return curve_dict(s.sigma); });

  m.def(
      "integrate_brachistochrone",
      [](const SpacetimeModel& model, double k, const std::vector<double>& p, const std::vector<double>& direction,
         double T, int grid_N, double rtol) {
        IntegratorConfig cfg;
        cfg.grid_N = grid_N;
        cfg.tol = {rtol, rtol};
        const Event q = to_vec(p);
        return integrate_brachistochrone(model, k, q, horizontal_unit(model, q, to_vec(direction)), T, cfg);
      },
      py::arg("model"), py::arg("k"), py::arg("p"), py::arg("direction"), py::arg("T"), py::arg("grid_N") = 400,
      py::arg("rtol") = 1e-10);

  m.def("conservation_report", [](const SpacetimeModel& model, const BrachistochroneSolution& sol) {
    const ConservationReport r = conservation_report(model, sol);
    py::dict d;
    d["max_Y"] = r.max_Y;
    d["max_speed"] = r.max_speed;
    d["refined_max_Y"] = r.refined_max_Y;
    d["refined_max_speed"] = r.refined_max_speed;
    d["within_tolerance"] = r.within_tolerance;
    return d;
  });

  m.def("correspondence_report", [](const SpacetimeModel& model, const BrachistochroneSolution& sol) {
    const CorrespondenceReport r = correspondence_report(model, sol);
    py::dict d;
    d["geodesic_residual"] = r.geodesic_residual;
    d["energy_value"] = r.energy_value;
    d["energy_vs_halfT2"] = r.energy_vs_halfT2;
    d["roundtrip_error"] = r.roundtrip_error;
    d["horizontality"] = r.horizontality;
    return d;
  });

  m.def(
      "shoot",
      [](const SpacetimeModel& model, double k, const std::vector<double>& p, const std::vector<double>& anchor,
         const std::vector<double>& direction, double T) {
        const ShootResult r = shoot(ShootingProblem{model, to_vec(p), ObserverWorldline{to_vec(anchor)}, k, {}},
                                    to_vec(direction), T);
        return py::make_tuple(r.solution, r.residual, r.iterations);
      },
      py::arg("model"), py::arg("k"), py::arg("p"), py::arg("anchor"), py::arg("direction"), py::arg("T"));

  m.def(
      "survey",
      [](const SpacetimeModel& model, double k, const std::vector<double>& p, const std::vector<double>& anchor,
         int n_starts, std::uint64_t seed, double T_min, double T_max, int threads) {
        SurveyConfig cfg;
        cfg.n_starts = n_starts;
        cfg.seed = seed;
        cfg.T_min = T_min;
        cfg.T_max = T_max;
        cfg.threads = threads;
        SurveyResult res;
        {
          py::gil_scoped_release release;
          res = multistart_survey(ShootingProblem{model, to_vec(p), ObserverWorldline{to_vec(anchor)}, k, {}}, cfg);
        }
        py::list sols;
        for (const SurveyEntry& e : res.solutions) {
          py::dict d;
          d["T"] = e.solution.T;
          d["morse_index"] = e.morse_index;
          d["geometric_index"] = e.geometric_index;
          d["solution"] = e.solution;
          sols.append(d);
        }
        py::dict out;
        out["solutions"] = sols;
        out["parity"] = res.parity;
        out["truncated"] = res.truncated();
        out["consistent_with_odd"] = res.consistent_with_odd();
        return out;
      },
      py::arg("model"), py::arg("k"), py::arg("p"), py::arg("anchor"), py::arg("n_starts") = 64, py::arg("seed") = 0,
      py::arg("T_min") = 0.1, py::arg("T_max") = 5.0, py::arg("threads") = 1);

  m.def(
      "indices",
      [](const SpacetimeModel& model, const BrachistochroneSolution& sol, int n_basis) {
        const ConformalGeometry cg(model, sol.k);
        const Curve w = reverse_curve(deform_D(model, sol));
        const HessianMatrix H = assemble_hessian(cg, w, BoundaryConditions::Full, n_basis);
        py::dict d;
        d["morse_index"] = H.n_negative;
        d["n_zero"] = H.n_zero;
        d["geometric_index"] = focal_points(cg, w).geometric_index;
        return d;
      },
      py::arg("model"), py::arg("solution"), py::arg("n_basis") = 60);

  m.def(
      "discrete_minimize",
      [](const SpacetimeModel& model, double k, const std::vector<double>& p, const std::vector<double>& anchor, int N,
         std::optional<std::vector<double>> bump) {
        const Event start = to_vec(p), end = to_vec(anchor);
        Curve init = straight_polyline(start, end, N);
        if (bump)
          for (std::size_t i = 0; i < init.size(); ++i) init.q[i] += std::sin(std::numbers::pi * init.t[i]) * to_vec(*bump);
        MinimizeConfig cfg;
        cfg.N = N;
        const DiscreteCandidate c = discrete_minimize(model, start, ObserverWorldline{end}, k, init, PenaltyConfig{1e-2, k}, cfg);
        py::dict d;
        d["T"] = c.T_estimate;
        d["energy"] = c.energy;
        d["gradient_norm"] = c.gradient_norm;
        d["iterations"] = c.iterations;
        d["curve"] = curve_dict(c.polyline);
        return d;
      },
      py::arg("model"), py::arg("k"), py::arg("p"), py::arg("anchor"), py::arg("N") = 200, py::arg("bump") = py::none());
}
