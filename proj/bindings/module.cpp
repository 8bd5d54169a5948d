#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "lpslab/czd.hpp"
#include "lpslab/forms.hpp"
#include "lpslab/functionals.hpp"
#include "lpslab/io.hpp"
#include "lpslab/probes.hpp"
#include "lpslab/scenarios.hpp"
#include "lpslab/spectral.hpp"
#include "lpslab/tent.hpp"

namespace py = pybind11;
using namespace lps;

namespace {

using ManifoldPtr = std::shared_ptr<DiscreteManifold>;

PotentialSplit make_potential(const Eigen::VectorXd& v) {
  return PotentialSplit::nonnegative(v);
}

FunctionalOptions make_options(const std::string& engine) {
  FunctionalOptions opt;
  if (engine == "exact") opt.engine = EngineChoice::Exact;
  else if (engine == "quadrature") opt.engine = EngineChoice::Quadrature;
  else throw InvalidInput("unknown engine: " + engine);
  return opt;
}

py::dict report_to_dict(const FitReport& rep) {
  py::dict d;
  py::dict consts;
  for (const auto& [k, v] : rep.constants) consts[py::str(k)] = v;
  d["constants"] = consts;
  d["columns"] = rep.columns;
  d["rows"] = rep.rows;
  d["notes"] = rep.notes;
  return d;
}

py::dict run_scenario_json(const std::string& config_text, const std::string& out_dir) {
  const ScenarioResult r = run_scenario(nlohmann::json::parse(config_text));
  if (!out_dir.empty()) write_outputs(r, out_dir);
  py::dict d;
  d["scenario"] = r.scenario;
  d["seed"] = r.seed;
  py::list crit;
  for (const auto& c : r.criteria) {
    py::dict row;
    row["name"] = c.name;
    row["paper_anchor"] = c.anchor;
    row["measured"] = c.measured;
    row["threshold"] = c.threshold;
    row["pass"] = c.pass;
    crit.append(row);
  }
  d["criteria"] = crit;
  d["passed"] = r.passed();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Littlewood-Paley square functionals on finite weighted graphs";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<NumericalGuard>(m, "NumericalGuard", PyExc_ArithmeticError);

  py::class_<DiscreteManifold, ManifoldPtr>(m, "Manifold")
      .def_static("grid",
                  [](int dim, int side) -> ManifoldPtr {
                    return std::make_shared<DiscreteManifold>(
                        DiscreteManifold::grid(dim, side));
                  },
                  py::arg("dim"), py::arg("side"))
      .def_static("dumbbell",
                  [](int dim, int side) -> ManifoldPtr {
                    return std::make_shared<DiscreteManifold>(
                        DiscreteManifold::dumbbell(dim, side));
                  },
                  py::arg("dim"), py::arg("side"))
      .def_static("binary_tree",
                  [](int depth) -> ManifoldPtr {
                    return std::make_shared<DiscreteManifold>(
                        DiscreteManifold::binary_tree(depth));
                  },
                  py::arg("depth"))
      .def_static("load",
                  [](const std::string& path) -> ManifoldPtr {
                    return std::make_shared<DiscreteManifold>(*load_model(path).manifold);
                  },
                  py::arg("path"))
      .def_property_readonly("n", &DiscreteManifold::vertex_count)
      .def_property_readonly("m", &DiscreteManifold::edge_count)
      .def_property_readonly("measures",
                             [](const DiscreteManifold& M) { return M.measures(); })
      .def("distance", &DiscreteManifold::distance)
      .def("volume", &DiscreteManifold::volume)
      .def("diameter", &DiscreteManifold::diameter)
      .def("ball",
           [](const DiscreteManifold& M, int center, double radius) {
             return M.ball({center, radius});
           })
      .def("doubling_fit",
           [](const DiscreteManifold& M, double rmin, double rmax) {
             return report_to_dict(doubling_fit(M, rmin, rmax));
           });

  py::class_<SpectralOperator>(m, "Operator")
      .def_property_readonly("dof", &SpectralOperator::dof)
      .def_property_readonly("eigenvalues",
                             [](const SpectralOperator& op) { return op.eigenvalues(); })
      .def_property_readonly("kernel_dim", &SpectralOperator::kernel_dim)
      .def("heat_apply", &SpectralOperator::heat_apply)
      .def("poisson_apply", &SpectralOperator::poisson_apply)
      .def("project_out_kernel",
           [](const SpectralOperator& op, const Eigen::VectorXd& f) {
             return op.project_out_kernel(f);
           });

  m.def("assemble",
        [](ManifoldPtr M, const Eigen::VectorXd& v) {
          return assemble(std::move(M), make_potential(v));
        },
        py::arg("manifold"), py::arg("potential"));
  m.def("assemble",
        [](ManifoldPtr M) {
          const int n = M->vertex_count();
          return assemble(std::move(M), PotentialSplit::zero(n));
        },
        py::arg("manifold"));
  m.def("hodge_assemble",
        [](ManifoldPtr M) { return hodge_assemble(std::move(M)); },
        py::arg("manifold"));

  m.def("conical_g",
        [](const SpectralOperator& op, const Eigen::VectorXd& f,
           const std::string& engine) { return conical_g(op, f, make_options(engine)).values; },
        py::arg("op"), py::arg("f"), py::arg("engine") = "exact");
  m.def("vertical_h",
        [](const SpectralOperator& op, const Eigen::VectorXd& f) {
          return vertical_h(op, f).values;
        },
        py::arg("op"), py::arg("f"));
  m.def("horizontal_s",
        [](const SpectralOperator& op, const Eigen::VectorXd& f,
           const std::string& engine) { return horizontal_s(op, f, make_options(engine)).values; },
        py::arg("op"), py::arg("f"), py::arg("engine") = "exact");
  m.def("s_phi0",
        [](const SpectralOperator& op, const Eigen::VectorXd& f,
           const std::string& engine) {
          return s_phi(op, PhiSpec::canonical_phi0(), f, make_options(engine)).values;
        },
        py::arg("op"), py::arg("f"), py::arg("engine") = "exact");
  m.def("poisson_p",
        [](const SpectralOperator& op, const Eigen::VectorXd& f,
           const std::string& engine) {
          const PoissonParts parts = poisson_p(op, f, make_options(engine));
          py::dict d;
          d["full"] = parts.full.values;
          d["time"] = parts.time_part.values;
          d["space"] = parts.space_part.values;
          return d;
        },
        py::arg("op"), py::arg("f"), py::arg("engine") = "exact");
  m.def("conical_g_forms",
        [](const SpectralOperator& hodge, const Eigen::VectorXd& eta,
           const std::string& engine) {
          return conical_g_forms(hodge, eta, make_options(engine)).values;
        },
        py::arg("hodge"), py::arg("eta"), py::arg("engine") = "exact");

  m.def("d_op", &d_op, py::arg("manifold"), py::arg("f"));
  m.def("dstar_op", &dstar_op, py::arg("manifold"), py::arg("beta"));

  m.def("lp_norm", &lp_norm, py::arg("mu"), py::arg("f"), py::arg("p"));
  m.def("weak_lp", &weak_lp, py::arg("mu"), py::arg("f"), py::arg("p"));
  m.def("maximal_function", &maximal_function, py::arg("manifold"), py::arg("f"));

  m.def("cz_decompose",
        [](const DiscreteManifold& M, const Eigen::VectorXd& f, double lambda,
           double p) {
          const CZDecomposition dec = cz_decompose(M, f, lambda, p);
          py::dict d;
          d["good"] = dec.good;
          py::list bad;
          for (const auto& b : dec.bad) {
            py::dict bi;
            bi["field"] = b.field;
            bi["center"] = b.ball.center;
            bi["radius"] = b.ball.radius;
            bi["measure"] = b.ball_measure;
            bad.append(bi);
          }
          d["bad"] = bad;
          d["overlap"] = dec.overlap;
          d["report"] = report_to_dict(dec.report);
          return d;
        },
        py::arg("manifold"), py::arg("f"), py::arg("level"), py::arg("p"));

  m.def("subcriticality_alpha",
        [](const DiscreteManifold& M, const Eigen::VectorXd& vplus,
           const Eigen::VectorXd& vminus) {
          PotentialSplit V;
          V.vplus = vplus;
          V.vminus = vminus;
          const Subcriticality s = subcriticality_alpha(M, V);
          return py::make_tuple(s.alpha, s.supercritical);
        },
        py::arg("manifold"), py::arg("vplus"), py::arg("vminus"));
  m.def("compute_p0",
        [](double alpha, double N) {
          const CriticalExponents ce = compute_p0(alpha, N);
          return py::make_tuple(ce.p0, ce.p0_prime);
        },
        py::arg("alpha"), py::arg("N"));

  m.def("gaussian_fit",
        [](const SpectralOperator& op, const std::vector<double>& ts) {
          return report_to_dict(gaussian_fit(op, ts));
        },
        py::arg("op"), py::arg("times"));

  m.def("ratio_search",
        [](const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& T,
           const Eigen::VectorXd& mu, double p, int restarts, int steps,
           std::uint64_t seed) {
          SearchConfig cfg;
          cfg.restarts = restarts;
          cfg.steps = steps;
          cfg.seed = seed;
          const NormEstimate est = ratio_search(T, mu, p, cfg);
          py::dict d;
          d["ratio"] = est.ratio;
          d["witness"] = est.witness;
          d["budget_exhausted"] = est.budget_exhausted;
          d["evaluations"] = est.evaluations;
          return d;
        },
        py::arg("map"), py::arg("mu"), py::arg("p"), py::arg("restarts") = 8,
        py::arg("steps") = 24, py::arg("seed") = 42);

  m.def("run_scenario", &run_scenario_json, py::arg("config_json"),
        py::arg("out_dir") = "");
  m.def("scenario_names", [] { return scenario_names(); });
}
