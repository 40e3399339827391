#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "posdwell/analysis.hpp"
#include "posdwell/cert.hpp"
#include "posdwell/hybrid.hpp"
#include "posdwell/model.hpp"
#include "posdwell/poly.hpp"
#include "posdwell/sim.hpp"
#include "posdwell/synthesis.hpp"

namespace py = pybind11;
using namespace posdwell;

namespace {

struct System {
  AnySystem sys;
  bool switched() const { return std::holds_alternative<SwitchedSystem>(sys); }
  const ImpulsiveSystem& impulsive() const {
    if (switched()) throw std::invalid_argument("expected an impulsive system, got a switched one");
    return std::get<ImpulsiveSystem>(sys);
  }
  const SwitchedSystem& sw() const { return std::get<SwitchedSystem>(sys); }
};

std::vector<std::vector<std::vector<double>>> coeffs(const std::vector<std::vector<Poly>>& ps) {
  std::vector<std::vector<std::vector<double>>> out;
  for (const auto& mode : ps) {
    out.emplace_back();
    for (const auto& p : mode) out.back().push_back(p.coeffs());
  }
  return out;
}

py::dict report_dict(const VerificationReport& r) {
  py::dict d, fams;
  for (const auto& [name, f] : r.families) {
    py::dict e;
    e["worst"] = f.worst;
    e["row"] = f.row;
    e["at"] = f.at;
    e["rows"] = f.rows;
    fams[py::str(name)] = e;
  }
  d["passed"] = r.passed;
  d["worst_slack"] = r.worst_slack();
  d["worst_row"] = r.worst_row();
  d["handelman_ok"] = r.handelman_ok;
  d["families"] = fams;
  return d;
}

Certificate run_analysis(const System& s, const std::string& dwell, int degree) {
  const auto d = DwellTimeSpec::parse(dwell);
  if (!s.switched()) return analyze(s.impulsive(), d, degree);
  if (d.kind != DwellTimeSpec::Kind::Minimum)
    throw std::invalid_argument("switched systems support minimum dwell time only");
  return analyze_switched_min(s.sw(), d.t_min, degree);
}

ControllerRealization run_synthesis(const System& s, const std::string& dwell, int degree, bool fixed_kd) {
  const auto d = DwellTimeSpec::parse(dwell);
  SynthesisOptions o;
  o.fixed_kd = fixed_kd;
  if (!s.switched()) return synthesize(s.impulsive(), d, degree, o);
  if (d.kind != DwellTimeSpec::Kind::Minimum)
    throw std::invalid_argument("switched systems support minimum dwell time only");
  return synthesize_switched(s.sw(), d.t_min, degree, o);
}

double run_gain(const System& s, const std::string& dwell, const ControllerRealization* ctrl, int runs,
                double horizon, std::uint64_t seed, int jobs) {
  const auto d = DwellTimeSpec::parse(dwell);
  GainOptions o;
  o.runs = runs;
  o.horizon = horizon;
  o.seed = seed;
  o.jobs = jobs;
  HybridModel m;
  if (s.switched())
    m = ctrl ? closed_loop(s.sw(), *ctrl) : open_loop(s.sw(), d.clamp());
  else
    m = ctrl ? closed_loop(s.impulsive(), *ctrl) : open_loop_for(s.impulsive(), d);
  return estimate_gain(m, SequenceGen::for_dwell(d, seed), o);
}

}  // namespace

PYBIND11_MODULE(_posdwell, m) {
  m.doc() = "Copositive L-infinity analysis and synthesis for positive impulsive and switched systems";

  py::register_exception<Infeasible>(m, "Infeasible", PyExc_RuntimeError);
  py::register_exception<RelaxationLimit>(m, "RelaxationLimit", PyExc_RuntimeError);
  py::register_exception<NumericalFailure>(m, "NumericalFailure", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", PyExc_ValueError);
  py::register_exception<NotConstant>(m, "NotConstant", PyExc_ValueError);
  py::register_exception<Mismatch>(m, "Mismatch", PyExc_ValueError);

  py::class_<System>(m, "System")
      .def_static("load", [](const std::string& path) { return System{load_system(path)}; }, py::arg("path"))
      .def_static("from_json", [](const std::string& text) { return System{parse_system(text)}; },
                  py::arg("text"))
      .def("to_json",
           [](const System& s) {
             return s.switched() ? system_to_json(s.sw()) : system_to_json(s.impulsive());
           })
      .def_property_readonly("switched", &System::switched)
      .def_property_readonly("n", [](const System& s) { return s.switched() ? s.sw().n : s.impulsive().n; })
      .def("is_positive",
           [](const System& s, double T) {
             const ImpulsiveSystem sys = s.switched() ? lift_switched(s.sw()) : s.impulsive();
             return check_positive(sys, T).positive;
           },
           py::arg("T") = 1.0);

  py::class_<Certificate>(m, "Certificate")
      .def_readonly("gamma", &Certificate::gamma)
      .def_readonly("degree", &Certificate::degree)
      .def_readonly("margin", &Certificate::margin)
      .def_property_readonly("kind", [](const Certificate& c) { return to_string(c.kind); })
      .def_property_readonly("dwell", [](const Certificate& c) { return c.dwell.to_string(); })
      .def_property_readonly("zeta", [](const Certificate& c) { return coeffs(c.zeta); })
      .def("to_json", &certificate_to_json)
      .def_static("from_json", &certificate_from_json, py::arg("text"));

  py::class_<ControllerRealization>(m, "Controller")
      .def_readonly("gamma", &ControllerRealization::gamma)
      .def_readonly("degree", &ControllerRealization::degree)
      .def_property_readonly("kind", [](const ControllerRealization& c) { return to_string(c.kind); })
      .def_property_readonly("dwell", [](const ControllerRealization& c) { return c.dwell.to_string(); })
      .def_property_readonly("X", [](const ControllerRealization& c) { return coeffs(c.X); })
      .def("flow_gain", &realize_gain, py::arg("tau"), py::arg("mode") = 0)
      .def("jump_gain", &realize_jump_gain, py::arg("theta"))
      .def("certificate", &closed_loop_certificate)
      .def("to_json", &controller_to_json)
      .def_static("from_json", &controller_from_json, py::arg("text"));

  m.def("analyze", &run_analysis, py::arg("system"), py::arg("dwell") = "arbitrary", py::arg("degree") = 4);
  m.def("synthesize", &run_synthesis, py::arg("system"), py::arg("dwell"), py::arg("degree") = 2,
        py::arg("fixed_kd") = false);
  m.def("verify",
        [](const Certificate& c, const System& s, int grid) {
          return report_dict(s.switched() ? verify(c, s.sw(), grid) : verify(c, s.impulsive(), grid));
        },
        py::arg("certificate"), py::arg("system"), py::arg("grid") = 1000);
  m.def("verify_controller",
        [](const ControllerRealization& c, const System& s, int grid) {
          return report_dict(s.switched() ? verify(c, s.sw(), grid) : verify(c, s.impulsive(), grid));
        },
        py::arg("controller"), py::arg("system"), py::arg("grid") = 1000);
  m.def("cross_check",
        [](const Certificate& c, const System& s) {
          return report_dict(s.switched() ? cross_check_discrete(c, s.sw()) : cross_check_discrete(c, s.impulsive()));
        },
        py::arg("certificate"), py::arg("system"));
  m.def("estimate_gain", &run_gain, py::arg("system"), py::arg("dwell"), py::arg("controller") = nullptr,
        py::arg("runs") = 100, py::arg("horizon") = 30.0, py::arg("seed") = 1, py::arg("jobs") = 1);
  m.def("switched_gridded_gain", [](const System& s, double T, int points) {
    return analyze_switched_blanchini(s.sw(), T, points);
  }, py::arg("system"), py::arg("T"), py::arg("points") = 101);
  m.def("lti_linf_gain", &lti_linf_gain_closed_form, py::arg("A"), py::arg("E"), py::arg("C"), py::arg("F"));
  m.def("certify_nonneg",
        [](const std::vector<double>& c, double a, double b, int order) -> std::optional<py::dict> {
          auto cert = certify_nonneg(Poly(c), {a, b}, order);
          if (!cert) return std::nullopt;
          py::dict w;
          for (const auto& [ij, v] : cert->weights) w[py::make_tuple(ij.first, ij.second)] = v;
          return w;
        },
        py::arg("coeffs"), py::arg("a"), py::arg("b"), py::arg("order"));
}
