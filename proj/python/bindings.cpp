#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "manifold_dp/errors.hpp"
#include "manifold_dp/io.hpp"
#include "manifold_dp/linalg.hpp"

namespace py = pybind11;
using namespace manifold_dp;

namespace {

TangentVector tangent(const ManifoldPoint& p, const Eigen::MatrixXd& v) {
  return TangentVector(p, v);
}

py::dict frechet_dict(const FrechetSolution& s) {
  py::dict d;
  d["mean"] = s.mean;
  d["variance"] = s.variance;
  d["iterations"] = s.iterations;
  d["gradient_norm"] = s.final_gradient_norm;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Differentially private Fréchet statistics on the sphere and SPD matrices";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<NumericalFailure>(m, "NumericalFailure", PyExc_ArithmeticError);

  py::class_<ManifoldKind>(m, "ManifoldKind")
      .def_static("sphere", &ManifoldKind::sphere, py::arg("ambient_dim"))
      .def_static("spd", &ManifoldKind::spd, py::arg("matrix_size"),
                  py::arg("curvature_lower") = -0.5)
      .def_property_readonly("dim", &ManifoldKind::dim)
      .def_property_readonly("size", &ManifoldKind::size)
      .def_property_readonly("is_sphere", &ManifoldKind::is_sphere)
      .def_property_readonly("name", &ManifoldKind::name)
      .def("__repr__", &ManifoldKind::name);

  py::class_<ManifoldPoint>(m, "Point")
      .def(py::init<ManifoldKind, Eigen::MatrixXd>(), py::arg("kind"), py::arg("coords"))
      .def_static("projected", &ManifoldPoint::projected)
      .def_static("identity", &ManifoldPoint::identity)
      .def_property_readonly("kind", &ManifoldPoint::kind)
      .def_property_readonly("coords", &ManifoldPoint::coords);

  m.def("exp_map", [](const ManifoldPoint& p, const Eigen::MatrixXd& v) {
    return exp_map(p, tangent(p, v));
  });
  m.def("log_map", [](const ManifoldPoint& p, const ManifoldPoint& q) {
    return Eigen::MatrixXd(log_map(p, q).vec());
  });
  m.def("distance", &distance);
  m.def("tangent_frame", [](const ManifoldPoint& p) { return tangent_frame(p).basis(); });
  m.def("vecd", [](const Eigen::MatrixXd& s) { return Eigen::VectorXd(vecd(s)); });
  m.def("vecd_inv", [](const Eigen::VectorXd& v) { return Eigen::MatrixXd(vecd_inv(v)); });

  py::class_<Rng>(m, "Rng").def(py::init<std::uint64_t>(), py::arg("seed"));

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<std::vector<ManifoldPoint>, ManifoldPoint, double>(),
           py::arg("points"), py::arg("center"), py::arg("radius"))
      .def_property_readonly("points", &Dataset::points)
      .def_property_readonly("center", &Dataset::center)
      .def_property_readonly("radius", &Dataset::radius)
      .def("__len__", &Dataset::size);

  m.def("sample_sphere_uniform_ball", &sample_sphere_uniform_ball, py::arg("center"),
        py::arg("radius"), py::arg("n"), py::arg("rng"));
  m.def("sample_spd_tangent_uniform_ball", &sample_spd_tangent_uniform_ball,
        py::arg("matrix_size"), py::arg("radius"), py::arg("n"), py::arg("rng"));
  m.def("frechet_mean", [](const Dataset& d) { return frechet_dict(frechet_mean(d)); });

  m.def("mean_sensitivity", [](double r, double kappa, int n) {
    return mean_sensitivity(r, kappa, n).delta;
  });
  m.def("gdp_delta_profile", &gdp_delta_profile, py::arg("mu"), py::arg("eps"));
  m.def(
      "verify_privacy_profile",
      [](const ManifoldKind& kind, double sigma, double delta_eta, std::uint64_t seed,
         long n_mc) {
        Rng rng(seed);
        PrivacyVerificationOptions o;
        o.n_mc = n_mc;
        const PrivacyProfileEstimate e = verify_privacy_profile(kind, sigma, delta_eta, rng, o);
        py::dict d;
        d["mu_star"] = e.mu_star;
        d["mu_resolution"] = e.mu_resolution;
        d["eps"] = e.eps_grid;
        d["delta_hat"] = e.delta_hat;
        d["standard_error"] = e.standard_error;
        return d;
      },
      py::arg("kind"), py::arg("sigma"), py::arg("delta_eta"), py::arg("seed"),
      py::arg("n_mc") = 2'000'000);

  py::class_<ConfidenceRegion>(m, "ConfidenceRegion")
      .def_property_readonly("gamma", &ConfidenceRegion::gamma)
      .def_property_readonly("center", &ConfidenceRegion::center)
      .def_property_readonly("threshold", &ConfidenceRegion::threshold)
      .def("quadratic_form",
           py::overload_cast<const ManifoldPoint&>(&ConfidenceRegion::quadratic_form, py::const_))
      .def("contains", &ConfidenceRegion::contains);

  m.def(
      "run_full_pipeline",
      [](const Dataset& data, double mu, double alpha, std::uint64_t seed) {
        Rng rng(seed);
        PipelineResult r = run_full_pipeline(data, mu, alpha, rng);
        py::dict d;
        d["mean_dp"] = r.mean.mean_dp;
        d["sigma_n_eta"] = r.mean.sigma_n_eta;
        d["lambda"] = r.mean.covariance.lambda;
        d["C"] = r.mean.covariance.c;
        d["gamma"] = r.mean.covariance.gamma;
        d["region"] = r.mean.region;
        d["mean_budget_spent"] = r.mean.budget.spent();
        d["variance_dp"] = r.variance.variance_dp;
        d["sigma_n_V"] = r.variance.sigma_n_V;
        d["sigmaF2_dp"] = r.variance.sigmaF2.value;
        d["interval"] = py::make_tuple(r.variance.interval.lower, r.variance.interval.upper);
        d["variance_budget_spent"] = r.variance.budget.spent();
        return d;
      },
      py::arg("data"), py::arg("mu"), py::arg("alpha") = 0.05, py::arg("seed") = 0);

  m.def("_run_campaign_json", [](const std::string& config) {
    py::gil_scoped_release release;
    const ExperimentConfig c = io::parse_config(nlohmann::json::parse(config));
    return io::campaign_report(run_campaign(c)).dump();
  });
}
