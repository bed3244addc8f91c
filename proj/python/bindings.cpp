#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "isrfd/detect.hpp"
#include "isrfd/edm.hpp"
#include "isrfd/errors.hpp"
#include "isrfd/graph.hpp"
#include "isrfd/orbit.hpp"
#include "isrfd/sim.hpp"
#include "isrfd/stats.hpp"

namespace py = pybind11;
using namespace isrfd;

namespace {

LinkGraph graph_from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
  LinkGraph g(n);
  for (const auto& [i, j] : edges) g.add_edge(i, j);
  return g;
}

py::dict run_montecarlo_py(const std::string& config_json, py::kwargs overrides) {
  ScenarioConfig cfg = parse_config(config_json);
  if (overrides.contains("seed")) cfg.seed = overrides["seed"].cast<std::uint64_t>();
  if (overrides.contains("trials")) cfg.trials = overrides["trials"].cast<int>();
  if (overrides.contains("threads")) cfg.threads = overrides["threads"].cast<int>();
  auto rows = run_montecarlo(cfg);
  py::list out;
  for (const auto& r : rows) {
    py::dict d;
    d["method"] = r.method;
    d["fault_magnitude_m"] = r.fault_magnitude_m;
    d["fault_ratio"] = r.fault_ratio;
    d["alpha"] = r.alpha;
    d["sigma_r_m"] = r.sigma_r_m;
    d["p_md"] = r.p_md ? py::object(py::float_(*r.p_md)) : py::object(py::none());
    d["p_fa"] = r.p_fa ? py::object(py::float_(*r.p_fa)) : py::object(py::none());
    d["trials"] = r.trials;
    out.append(d);
  }
  py::dict res;
  res["rows"] = out;
  res["csv"] = metrics_to_csv(rows);
  return res;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Satellite clock-jump detection from inter-satellite ranges";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<OrbitalElements>(m, "OrbitalElements")
      .def(py::init([](double a_km, double e, double i_deg, double raan_deg, double argp_deg,
                       double M0_deg, double mu_km3_s2) {
             OrbitalElements el{a_km, e, i_deg, raan_deg, argp_deg, M0_deg, mu_km3_s2};
             el.validate();
             return el;
           }),
           py::arg("a_km"), py::arg("e"), py::arg("i_deg"), py::arg("raan_deg"),
           py::arg("argp_deg"), py::arg("M0_deg"), py::arg("mu_km3_s2"))
      .def_readonly("a_km", &OrbitalElements::a_km)
      .def_readonly("e", &OrbitalElements::e);

  py::class_<BodyModel>(m, "BodyModel")
      .def(py::init([](double radius_km, double mask_altitude_km, double phi_max_deg,
                       double mu_km3_s2) {
             BodyModel b{radius_km, mask_altitude_km, phi_max_deg, mu_km3_s2};
             b.validate();
             return b;
           }),
           py::arg("radius_km"), py::arg("mask_altitude_km"), py::arg("phi_max_deg"),
           py::arg("mu_km3_s2"));

  m.def("solve_kepler", &solve_kepler, py::arg("mean_anomaly_rad"), py::arg("eccentricity"),
        py::arg("tol") = 1e-12);
  m.def("orbital_period_s", &orbital_period_s);
  m.def("propagate", &propagate, py::arg("elements"), py::arg("t_s"));
  m.def("link_visible", &link_visible, py::arg("xi_km"), py::arg("xj_km"), py::arg("body"));

  m.def(
      "list_k_cliques",
      [](int n, const std::vector<std::pair<int, int>>& edges, int k) {
        return list_k_cliques(graph_from_edges(n, edges), k);
      },
      py::arg("n"), py::arg("edges"), py::arg("k"));
  m.def(
      "list_fault_detectable_5",
      [](int n, const std::vector<std::pair<int, int>>& measured_edges) {
        auto recs = list_fault_detectable_5(graph_from_edges(n, measured_edges));
        py::list out;
        for (const auto& r : recs) {
          py::dict d;
          d["members"] = r.members;
          std::vector<int> prov;
          for (auto p : r.edge_provenance)
            prov.push_back(p == EdgeProvenance::measured ? 1 : 0);
          d["measured_mask"] = prov;
          out.append(d);
        }
        return out;
      },
      py::arg("n"), py::arg("measured_edges"));

  m.def("build_edm", &build_edm, py::arg("ranges"));
  m.def("gcedm", &gcedm, py::arg("edm"));
  m.def(
      "gcedm_singular_values",
      [](const Eigen::MatrixXd& g) { return decompose_gcedm(g).singular_values; },
      py::arg("gcedm"));
  m.def(
      "test_statistic",
      [](const Eigen::MatrixXd& d_tilde, const Eigen::MatrixXd& sigma_edge) {
        EdmTestResult r = d_tilde.rows() == 5 ? test_statistic_n5(d_tilde, sigma_edge)
                                              : test_statistic_general(d_tilde, sigma_edge);
        return py::make_tuple(r.gamma, r.s2, r.dof, r.scaled);
      },
      py::arg("d_tilde"), py::arg("sigma_edge"),
      "Returns (gamma, s2, dof, gamma/s2) for a noisy distance matrix");

  m.def("chi2_cdf", &chi2_cdf, py::arg("x"), py::arg("dof"));
  m.def("chi2_quantile", &chi2_quantile, py::arg("p"), py::arg("dof"));
  m.def(
      "noncentral_chi2_cdf",
      [](double x, double dof, double lam) { return noncentral_chi2_cdf(x, {dof, lam}); },
      py::arg("x"), py::arg("dof"), py::arg("noncentrality"));
  m.def("solve_noncentrality", &solve_noncentrality, py::arg("alpha"), py::arg("power_gamma"),
        py::arg("dof"));
  m.def(
      "imhof_cdf",
      [](double q, const std::vector<double>& eigenvalues) {
        return imhof_cdf(q, QuadFormSpec{eigenvalues});
      },
      py::arg("q"), py::arg("eigenvalues"));
  m.def("correlated_threshold",
        py::overload_cast<int, double, double, double>(&correlated_threshold), py::arg("links"),
        py::arg("sigma_r"), py::arg("sigma_m"), py::arg("alpha"));

  m.def("load_config_normalized",
        [](const std::string& path) { return normalized_config_json(load_config(path)); });
  m.def("run_montecarlo", &run_montecarlo_py, py::arg("config_json"),
        "Run the Monte Carlo grid from a scenario JSON string; kwargs: seed, trials, threads");
}
