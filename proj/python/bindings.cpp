#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "twistmom/cli.hpp"
#include "twistmom/moments.hpp"

namespace py = pybind11;
using namespace twistmom;

namespace {

AfeConfig make_config(double X, double tail_eps, std::size_t audit_count, unsigned workers) {
  AfeConfig c;
  c.X = X;
  c.tail_eps = tail_eps;
  c.audit_count = audit_count;
  c.workers = workers;
  return c;
}

std::shared_ptr<const EigenformTable> table_for(const WeightPair& w, u64 q, const AfeConfig& c, u64 extra = 0) {
  const auto caps = afe_caps(w, q, c.X, c.tail_eps);
  u64 n = std::max({caps.n_direct, caps.n_dual, extra, u64{1000}});
  if (c.audit_count > 0) n = std::max(n, caps.m_sq);
  if (n > kMaxTauIndex) throw std::out_of_range("needs lambda(n) beyond " + std::to_string(kMaxTauIndex));
  return std::make_shared<const EigenformTable>(EigenformTable::builtin_delta(n));
}

const WeightPair& weights() {
  static const WeightPair w = make_weight_pair(12);
  return w;
}

struct AuditSummary {
  u64 q;
  double k;
  bool all_pass;
  std::vector<std::tuple<std::string, bool, std::size_t, std::size_t, double>> pointwise;
  std::vector<std::tuple<std::string, bool, bool, double, double>> chains;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "twistmom core bindings";

  m.def("phi_star", &phi_star, py::arg("q"), "Number of primitive characters mod q.");
  m.def("ladder_c_k", &ladder_c_k, py::arg("k"));
  m.def("ladder_r_k", &ladder_r_k, py::arg("k"));

  m.def(
      "tau",
      [](u64 n_max) {
        const auto t = ramanujan_tau_table(n_max);
        py::list out;
        const py::object to_int = py::module_::import("builtins").attr("int");
        for (u64 n = 1; n <= n_max; ++n) out.append(to_int(to_string(t[n])));
        return out;
      },
      py::arg("n_max"), "tau(1..n_max) as Python ints.");

  m.def(
      "gauss_sum",
      [](u64 q, u64 index) { return gauss_sum(CharacterGroup::build(q, ModulusPolicy::any_admissible)->character(index)); },
      py::arg("q"), py::arg("index"));

  py::class_<CentralValue>(m, "CentralValue")
      .def_readonly("chi_index", &CentralValue::chi_index)
      .def_readonly("conjugate_index", &CentralValue::conjugate_index)
      .def_readonly("conductor", &CentralValue::conductor)
      .def_readonly("value", &CentralValue::value)
      .def_readonly("sq_direct", &CentralValue::sq_direct)
      .def_readonly("residual", &CentralValue::residual)
      .def("__repr__", [](const CentralValue& v) {
        std::ostringstream s;
        s << "CentralValue(chi_index=" << v.chi_index << ", value=" << v.value.real() << (v.value.imag() < 0 ? "" : "+")
          << v.value.imag() << "j)";
        return s.str();
      });

  m.def(
      "central_values",
      [](u64 q, double X, double tail_eps, std::size_t audit_count, unsigned workers) {
        py::gil_scoped_release release;
        const auto cfg = make_config(X, tail_eps, audit_count, workers);
        return AfeEngine(table_for(weights(), q, cfg), CharacterGroup::build(q), weights(), cfg).family_values();
      },
      py::arg("q"), py::arg("X") = 1.0, py::arg("tail_eps") = 1e-8, py::arg("audit_count") = 8, py::arg("workers") = 1,
      "L(1/2, Delta x chi) for every primitive chi mod q.");

  py::class_<MomentReport>(m, "MomentReport")
      .def_readonly("q", &MomentReport::q)
      .def_readonly("k", &MomentReport::k)
      .def_readonly("phi_star", &MomentReport::phi_star)
      .def_readonly("raw_moment", &MomentReport::raw_moment)
      .def_readonly("normalized", &MomentReport::normalized)
      .def_readonly("ratio_to_logq_pow_k2", &MomentReport::ratio_to_logq_pow_k2)
      .def("__repr__", [](const MomentReport& r) {
        std::ostringstream s;
        s << "MomentReport(q=" << r.q << ", k=" << r.k << ", normalized=" << r.normalized << ")";
        return s.str();
      });

  m.def(
      "family_moments",
      [](u64 q, std::vector<double> ks, double tail_eps, std::size_t audit_count, unsigned workers) {
        py::gil_scoped_release release;
        const auto cfg = make_config(1.0, tail_eps, audit_count, workers);
        const Family fam(table_for(weights(), q, cfg), weights(), q, cfg);
        std::vector<MomentReport> out;
        for (double k : ks) out.push_back(family_moment(fam, k));
        return out;
      },
      py::arg("q"), py::arg("ks"), py::arg("tail_eps") = 1e-8, py::arg("audit_count") = 8, py::arg("workers") = 1);

  py::class_<AuditSummary>(m, "Audit")
      .def_readonly("q", &AuditSummary::q)
      .def_readonly("k", &AuditSummary::k)
      .def_readonly("all_pass", &AuditSummary::all_pass)
      .def_readonly("pointwise", &AuditSummary::pointwise, "(name, asserted, checked, passed, min_log_margin)")
      .def_readonly("chains", &AuditSummary::chains, "(name, asserted, pass, lhs_log, rhs_log)");

  m.def(
      "audit",
      [](u64 q, double k, std::vector<u64> ell, double tail_eps, unsigned workers) {
        py::gil_scoped_release release;
        const auto cfg = make_config(1.0, tail_eps, 0, workers);
        const auto table = table_for(weights(), q, cfg, 20000);
        const Family fam(table, weights(), q, cfg);
        const auto a = holder_chain_audit(fam, Mollifier(table, build_ladder(q, 0, 0, k, ell)));
        AuditSummary s{q, k, a.all_pass(), {}, {}};
        for (const auto& t : a.pointwise) s.pointwise.emplace_back(t.name, t.asserted, t.checked, t.passed, t.min_log_margin);
        for (const auto& c : a.chains) s.chains.emplace_back(c.name, c.asserted, c.pass, c.lhs_log, c.rhs_log);
        return s;
      },
      py::arg("q"), py::arg("k"), py::arg("ell") = std::vector<u64>{8, 2}, py::arg("tail_eps") = 1e-8,
      py::arg("workers") = 1, "Pointwise and Hölder audits over the primitive family.");

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a twistmom subcommand; returns (exit_code, stdout, stderr).");
}
