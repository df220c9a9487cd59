#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "tsbdd/bench.hpp"
#include "tsbdd/counting.hpp"
#include "tsbdd/errors.hpp"
#include "tsbdd/formula.hpp"
#include "tsbdd/inference.hpp"
#include "tsbdd/kernel.hpp"
#include "tsbdd/oracle.hpp"
#include "tsbdd/robdd.hpp"
#include "tsbdd/ts_model.hpp"

namespace py = pybind11;
using namespace tsbdd;

namespace {

py::dict ops_dict(const OpCounter& o) {
  py::dict d;
  d["adds"] = o.additions;
  d["muls"] = o.multiplications;
  d["divs"] = o.divisions;
  return d;
}

CompiledKernel compile(const TroubleshootingModel& m, const std::string& mode, bool force) {
  return compile_kernel(m, FaultMode::parse(mode), force);
}

}  // namespace

PYBIND11_MODULE(_tsbdd, mod) {
  mod.doc() = "Troubleshooting-model inference by ROBDD model counting";

  auto base = py::register_exception<Error>(mod, "Error");
  py::register_exception<ParseError>(mod, "ParseError", base.ptr());
  py::register_exception<ValidationError>(mod, "ValidationError", base.ptr());
  py::register_exception<VerificationError>(mod, "VerificationError", base.ptr());
  py::register_exception<UnknownVariable>(mod, "UnknownVariable", base.ptr());
  py::register_exception<InvalidArgument>(mod, "InvalidArgument", base.ptr());

  py::class_<TroubleshootingModel>(mod, "Model")
      .def_static("parse", &parse_model, py::arg("text"))
      .def_static("load", &load_model, py::arg("path"))
      .def_static("example", &example_model, py::arg("prior_c1") = 0.5, py::arg("prior_c2") = 0.5)
      .def_static(
          "generate",
          [](int n_system, int n_cause, int n_action, std::uint64_t seed) {
            GenSpec g;
            g.n_system = n_system;
            g.n_cause = n_cause;
            g.n_action = n_action;
            g.seed = seed;
            return generate_model(g);
          },
          py::arg("n_system"), py::arg("n_cause"), py::arg("n_action") = 0, py::arg("seed") = 1)
      .def("serialize", &serialize_model)
      .def_readonly("problem", &TroubleshootingModel::problem_var)
      .def_property_readonly("systems",
                             [](const TroubleshootingModel& m) {
                               std::vector<std::string> out;
                               for (const auto& s : m.system_vars) out.push_back(s.name);
                               return out;
                             })
      .def_property_readonly("causes",
                             [](const TroubleshootingModel& m) {
                               std::vector<std::string> out;
                               for (const auto& c : m.cause_vars) out.push_back(c.name);
                               return out;
                             })
      .def_property_readonly("actions",
                             [](const TroubleshootingModel& m) {
                               std::vector<std::string> out;
                               for (const auto& a : m.action_vars) out.push_back(a.name);
                               return out;
                             })
      .def("validate",
           [](const TroubleshootingModel& m) {
             std::vector<std::tuple<std::string, std::string, std::string>> out;
             for (const auto& i : validate(m))
               out.emplace_back(i.severity == Severity::Error ? "error" : "warning", i.code, i.message);
             return out;
           })
      .def("__eq__", [](const TroubleshootingModel& a, const TroubleshootingModel& b) { return a == b; });

  py::class_<CompiledKernel>(mod, "Kernel")
      .def_property_readonly("nodes", &CompiledKernel::node_count)
      .def_property_readonly("unforced_nodes", [](const CompiledKernel& k) { return k.bdd->node_count(k.unforced_root); })
      .def_property_readonly("cause_layer_nodes", &CompiledKernel::cause_layer_node_count)
      .def_property_readonly("order", [](const CompiledKernel& k) { return k.order().names(); })
      .def_property_readonly("mode", [](const CompiledKernel& k) { return k.mode.to_string(); })
      .def_property_readonly("card", [](const CompiledKernel& k) { return card_with_evidence(*k.bdd, {}); })
      .def("to_dot", [](const CompiledKernel& k) { return k.bdd->to_dot(); });

  mod.def("compile", &compile, py::arg("model"), py::arg("mode") = "exactly-one", py::arg("force_faulty") = true);
  mod.def(
      "size_bound", [](const TroubleshootingModel& m, const std::string& mode) { return size_bound(m, FaultMode::parse(mode)); },
      py::arg("model"), py::arg("mode") = "exactly-one");

  mod.def(
      "count_formula",
      [](const std::string& text, const std::vector<std::string>& order, const std::map<std::string, bool>& evidence) {
        const Robdd bdd = build(parse_formula(text), VarOrder(order));
        Evidence e;
        e.assignments = evidence;
        return card_with_evidence(bdd, e);
      },
      py::arg("formula"), py::arg("order"), py::arg("evidence") = std::map<std::string, bool>{});

  mod.def(
      "cause_counts",
      [](const TroubleshootingModel& m, const CompiledKernel& k, const std::string& evidence) {
        return cause_count_map(k, TsEvidence::parse(evidence, m).kernel_evidence);
      },
      py::arg("model"), py::arg("kernel"), py::arg("evidence") = "");

  mod.def(
      "posteriors",
      [](const TroubleshootingModel& m, const CompiledKernel& k, const std::string& evidence, const std::string& strategy) {
        const auto r = posteriors(m, k, TsEvidence::parse(evidence, m), parse_strategy(strategy));
        py::dict d;
        py::dict post;
        for (std::size_t i = 0; i < r.causes.size(); ++i) post[py::str(r.causes[i])] = r.posteriors[i];
        d["posteriors"] = post;
        d["evidence_probability"] = r.evidence_probability;
        d["consistent"] = r.consistent;
        d["ops"] = ops_dict(r.ops);
        if (r.strategy == Strategy::Both) {
          d["naive_ops"] = ops_dict(r.naive_ops);
          d["strategy_gap"] = r.strategy_gap;
        }
        return d;
      },
      py::arg("model"), py::arg("kernel"), py::arg("evidence") = "", py::arg("strategy") = "single-pass");

  mod.def(
      "oracle_posteriors",
      [](const TroubleshootingModel& m, const std::string& evidence, const std::string& mode) {
        const auto ev = TsEvidence::parse(evidence, m);
        const auto o = oracle::brute_posteriors(m, ev.kernel_evidence.assignments, ev.action_observations,
                                                FaultMode::parse(mode));
        std::map<std::string, double> out;
        for (std::size_t i = 0; i < o.causes.size(); ++i) out[o.causes[i]] = o.posteriors[i];
        return out;
      },
      py::arg("model"), py::arg("evidence") = "", py::arg("mode") = "exactly-one");

  mod.def(
      "bench_csv",
      [](std::uint64_t seed, int min_total, int max_total, int points, int per_point, const std::string& mode) {
        BenchOptions opt;
        opt.mode = FaultMode::parse(mode);
        std::ostringstream os;
        write_csv(os, run_benchmark(default_suite(seed, min_total, max_total, points, per_point), opt));
        return os.str();
      },
      py::arg("seed") = 1, py::arg("min_total") = 21, py::arg("max_total") = 322, py::arg("points") = 15,
      py::arg("per_point") = 15, py::arg("mode") = "exactly-one");
}
