#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "dsim/config.hpp"
#include "dsim/dynamics.hpp"
#include "dsim/measurement.hpp"
#include "dsim/runner.hpp"
#include "dsim/schmidt_flow.hpp"
#include "dsim/spin.hpp"
#include "dsim/state.hpp"
#include "dsim/version.hpp"

namespace py = pybind11;
using namespace dsim;

namespace {

SimConfig make_sim_config(double t_max, double rel_tol, double abs_tol,
                          bool renorm, int stride) {
  SimConfig cfg;
  cfg.t_max = t_max;
  cfg.rel_tol = rel_tol;
  cfg.abs_tol = abs_tol;
  cfg.renorm_each_step = renorm;
  cfg.sample_stride = stride;
  return cfg;
}

py::dict trajectory_dict(const Trajectory& traj) {
  const auto n = static_cast<Eigen::Index>(traj.samples.size());
  Eigen::VectorXd t(n), purity(n), q_exp(n), norm_error(n);
  Eigen::MatrixXd k(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = traj.samples[i];
    t(i) = s.t;
    k.row(i) = s.k;
    purity(i) = s.purity;
    q_exp(i) = s.q_expectation;
    norm_error(i) = s.norm_error;
  }
  py::dict out;
  out["t"] = t;
  out["k"] = k;
  out["purity"] = purity;
  out["q_expectation"] = q_exp;
  out["norm_error"] = norm_error;
  out["final_state"] = traj.final_state;
  out["accepted_steps"] = traj.accepted_steps;
  out["rejected_steps"] = traj.rejected_steps;
  return out;
}

py::dict flow_dict(const FlowResult& res) {
  const auto n = static_cast<Eigen::Index>(res.samples.size());
  const auto m = n > 0 ? res.samples.front().q.size() : 0;
  Eigen::VectorXd t(n), l4(n), entropy(n);
  Eigen::MatrixXd q(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = res.samples[i];
    t(i) = s.t;
    q.row(i) = s.q;
    l4(i) = s.l4;
    entropy(i) = s.entropy;
  }
  py::dict out;
  out["t"] = t;
  out["q"] = q;
  out["l4"] = l4;
  out["entropy"] = entropy;
  out["unique_attractor"] = res.unique_attractor;
  out["attractor_index"] = res.attractor_index;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Bipartite spin dynamics with an entanglement-damping term: states, "
      "collapse trajectories, attractor basins, outcome statistics under "
      "orientation noise, and the reduced Schmidt-spectrum flow.";
  m.attr("__version__") = kVersion;

  py::class_<PureState>(m, "PureState",
                        "Normalized bipartite pure state held as its n1 x n2 "
                        "coefficient matrix.")
      .def(py::init<CoeffMatrix, int>(), py::arg("coefficients"),
           py::arg("dimension_cap") = kDefaultDimensionCap)
      .def_static("normalized", &PureState::normalized, py::arg("coefficients"),
                  py::arg("dimension_cap") = kDefaultDimensionCap,
                  "Rescale an arbitrary nonzero matrix to unit norm.")
      .def_property_readonly("coefficients", &PureState::coefficients)
      .def_property_readonly("shape",
                             [](const PureState& s) {
                               const auto sh = s.shape();
                               return py::make_tuple(sh.n1, sh.n2);
                             })
      .def("purity", [](const PureState& s) { return purity(s); })
      .def("q_expectation",
           [](const PureState& s) { return q_expectation(s); })
      .def("entropy", [](const PureState& s) { return entanglement_entropy(s); })
      .def("schmidt", [](const PureState& s) { return schmidt(s).q; },
           "Singular values of the coefficient matrix, descending.")
      .def("__repr__", [](const PureState& s) {
        const auto sh = s.shape();
        return "<PureState " + std::to_string(sh.n1) + "x" +
               std::to_string(sh.n2) + ">";
      });

  m.def(
      "product_state",
      [](const Eigen::VectorXcd& v1, const Eigen::VectorXcd& v2) {
        return product_state(v1, v2);
      },
      py::arg("v1"), py::arg("v2"),
      "Product state with coefficient matrix v1 v2^T (no conjugation).");

  m.def(
      "random_state",
      [](int n1, int n2, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        return random_state(BipartiteShape{n1, n2}, rng);
      },
      py::arg("n1"), py::arg("n2"), py::arg("seed") = 12345,
      "Haar-like random state: iid complex Gaussian entries, normalized.");

  m.def(
      "coherent_state",
      [](int two_s, double theta, double phi) {
        return coherent_state(SpinQuantumNumber{two_s},
                              UnitVector3::from_angles(theta, phi));
      },
      py::arg("two_s"), py::arg("theta"), py::arg("phi"),
      "Spin coherent state along (theta, phi) for spin two_s / 2.");

  m.def(
      "dipolar_hamiltonian",
      [](int two_s1, int two_s2, double omega_d, double theta, double phi) {
        return dipolar_hamiltonian(SpinQuantumNumber{two_s1},
                                   SpinQuantumNumber{two_s2}, omega_d,
                                   UnitVector3::from_angles(theta, phi))
            .matrix;
      },
      py::arg("two_s1"), py::arg("two_s2"), py::arg("omega_d"),
      py::arg("theta"), py::arg("phi"),
      "omega_d (S1 . u)(S2 . u) on the composite space, u = (theta, phi).");

  m.def(
      "bloch_vector",
      [](const PureState& s) { return bloch_vector(s); }, py::arg("state"),
      "Subsystem-1 Bloch vector (two-dimensional first factor only).");

  m.def(
      "integrate",
      [](const PureState& psi0, const Eigen::MatrixXcd& h, double gamma,
         double t_max, double rel_tol, double abs_tol, bool renorm,
         int stride) {
        const Trajectory traj =
            integrate(psi0, h, GammaPolicy::constant(gamma),
                      make_sim_config(t_max, rel_tol, abs_tol, renorm, stride));
        return trajectory_dict(traj);
      },
      py::arg("state"), py::arg("hamiltonian"), py::arg("gamma"),
      py::arg("t_max"), py::arg("rel_tol") = 1e-10, py::arg("abs_tol") = 1e-10,
      py::arg("renorm_each_step") = true, py::arg("sample_stride") = 5,
      "Adaptive integration of d psi/dt = -i H psi - gamma (Q - <Q>) psi. "
      "Pass an empty (0 x 0) hamiltonian for H = 0.");

  m.def(
      "integrate_flow",
      [](const Eigen::VectorXd& q0, double gamma, double t_max) {
        return flow_dict(integrate_flow(FlowState{q0, gamma}, t_max));
      },
      py::arg("q0"), py::arg("gamma"), py::arg("t_max"),
      "Reduced flow of the Schmidt spectrum under the damping term alone.");

  m.def(
      "p_plus",
      [](double theta1, double phi0) {
        return p_plus(theta1, WrappedCauchy{phi0});
      },
      py::arg("theta1"), py::arg("phi0"),
      "Upper-hemisphere probability for tilt theta1 under orientation noise "
      "of scale phi0.");

  m.def("born_rule", &born_rule, py::arg("theta1"), "cos^2(theta1 / 2).");

  m.def(
      "basin_labels",
      [](int n_theta, int n_phi, double u_theta, double u_phi, double gamma,
         double omega_d, double eps, int n_threads) {
        BasinSetup setup;
        setup.gamma = gamma;
        setup.omega_d = omega_d;
        setup.u_d = UnitVector3::from_angles(u_theta, u_phi);
        setup.eps = eps;
        const BasinMap map =
            basin_map(SphereGrid::regular(n_theta, n_phi), setup, n_threads);
        py::dict out;
        out["thetas"] = map.grid.thetas;
        out["phis"] = map.grid.phis;
        std::vector<int> labels(map.labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i)
          labels[i] = static_cast<int>(map.labels[i]);
        out["labels"] = labels;
        out["failures"] = map.failure_count;
        return out;
      },
      py::arg("n_theta"), py::arg("n_phi"), py::arg("u_theta"),
      py::arg("u_phi"), py::arg("gamma") = 1.0, py::arg("omega_d") = 1.0,
      py::arg("eps") = 0.01, py::arg("n_threads") = 0,
      "Attractor label (+1 / -1 / 0) per cell-centered grid direction for "
      "the spin-1/2 x spin-21/2 system.");

  m.def("default_config", [] { return to_json(ExperimentConfig{}); },
        "Canonical JSON echo of the default configuration.");

  m.def(
      "run_experiment",
      [](const std::string& config_json, int n_threads) {
        const ExperimentConfig config = parse_config(config_json);
        const RunOutcome outcome = run_experiment(config, n_threads);
        py::dict out;
        out["exit_code"] = outcome.exit_code;
        out["files"] = outcome.files;
        out["manifest"] = outcome.manifest;
        return out;
      },
      py::arg("config_json"), py::arg("n_threads") = 0,
      "Parse a full or partial JSON config, run the selected experiment, "
      "write its outputs, and return {exit_code, files, manifest}.");
}
