#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ernet/mask.hpp"
#include "ernet/network.hpp"
#include "ernet/plans.hpp"
#include "ernet/rng.hpp"
#include "ernet/subset_sum.hpp"
#include "ernet/tickets.hpp"
#include "ernet/train.hpp"

namespace py = pybind11;
using namespace ernet;

namespace {

py::dict report_dict(const TrialReport& r) {
    py::dict d;
    d["kind"] = r.kind;
    d["success"] = r.success;
    d["q"] = r.q;
    d["max_error"] = r.max_error;
    d["nnz_lt"] = r.nnz_lt;
    d["seed"] = r.seed;
    d["wall_time_s"] = r.wall_time_s;
    d["rho"] = r.rho;
    d["output_scale"] = r.output_scale;
    d["failure_detail"] = r.failure_detail;
    return d;
}

}  // namespace

PYBIND11_MODULE(_ernet, m) {
    m.doc() = "ER-network lottery ticket constructions";

    py::register_exception<StructuralError>(m, "StructuralError");
    py::register_exception<DomainError>(m, "DomainError");
    py::register_exception<InfeasibleError>(m, "InfeasibleError");

    py::class_<Architecture>(m, "Architecture")
        .def_property_readonly("depth", &Architecture::depth)
        .def_property_readonly("input_width", &Architecture::input_width)
        .def_property_readonly("output_width", &Architecture::output_width)
        .def("to_json", [](const Architecture& a) { return architecture_to_json(a); })
        .def_static("from_json", [](const std::string& s) { return architecture_from_json(s); });

    m.def("fc_chain", &fc_chain, py::arg("widths"), py::arg("lo") = 0.0, py::arg("hi") = 1.0);

    py::class_<SparsityPlan>(m, "SparsityPlan")
        .def_readonly("p_per_layer", &SparsityPlan::p_per_layer)
        .def_readonly("global_p", &SparsityPlan::global_p)
        .def_readonly("achieved_global_p", &SparsityPlan::achieved_global_p)
        .def_property_readonly("method",
                               [](const SparsityPlan& p) { return to_string(p.method); });

    m.def(
        "make_plan",
        [](const std::string& method, const Architecture& arch, double p) {
            return make_plan(plan_method_from_string(method), arch, p);
        },
        py::arg("method"), py::arg("arch"), py::arg("p"));

    py::class_<Mask>(m, "Mask")
        .def("nnz_total", &Mask::nnz_total)
        .def("contained_in", &Mask::contained_in)
        .def("to_json", [](const Mask& mask) { return mask_to_json(mask); })
        .def_static("from_json", [](const std::string& s) { return mask_from_json(s); });

    m.def("sample_mask", &sample_mask, py::arg("arch"), py::arg("plan"), py::arg("seed"));
    m.def(
        "flow_flags",
        [](const Architecture& arch, const Mask& mask) {
            return flow_stats(arch, mask).total_flags();
        },
        py::arg("arch"), py::arg("mask"));
    m.def(
        "repair_random_addition",
        [](const Architecture& arch, const Mask& mask, std::uint64_t seed) {
            auto [repaired, report] = repair_random_addition(arch, mask, seed);
            py::dict d;
            d["edges_added"] = report.edges_added;
            d["edges_removed"] = report.edges_removed;
            return py::make_tuple(repaired, d);
        },
        py::arg("arch"), py::arg("mask"), py::arg("seed"));

    py::class_<MaskedNetwork>(m, "MaskedNetwork")
        .def_readonly("mask", &MaskedNetwork::mask)
        .def("nnz_total", &MaskedNetwork::nnz_total)
        .def(
            "forward",
            [](const MaskedNetwork& net, const std::vector<double>& x) { return forward(net, x); },
            py::arg("x"))
        .def("to_json", [](const MaskedNetwork& n) { return network_to_json(n); })
        .def_static("from_json", [](const std::string& s) { return network_from_json(s); });

    m.def("random_target", &random_target, py::arg("arch"), py::arg("seed"),
          py::arg("weight_scale") = 1.0);

    m.def(
        "probe_subset_sum",
        [](double p, double epsilon, double delta, const std::vector<int>& n_grid, int trials,
           std::uint64_t seed) {
            ProbeResult res = probe_subset_sum(p, epsilon, delta, n_grid, trials, seed);
            py::dict d;
            d["n_star"] = res.n_star;
            d["adversarial_worst_rate"] = res.adversarial_worst_rate;
            py::list pts;
            for (const auto& pt : res.points) {
                py::dict e;
                e["n"] = pt.n;
                e["failures"] = pt.failures;
                e["failure_rate"] = pt.failure_rate;
                pts.append(e);
            }
            d["points"] = pts;
            return d;
        },
        py::arg("p"), py::arg("epsilon"), py::arg("delta"), py::arg("n_grid"), py::arg("trials"),
        py::arg("seed"));

    m.def(
        "probe_lower_bound",
        [](double p, int d, double delta, const std::vector<int>& n_grid, int trials,
           std::uint64_t seed) {
            LowerBoundResult res = probe_lower_bound(p, d, delta, n_grid, trials, seed);
            py::dict out;
            out["measured_min_n"] = res.measured_min_n;
            out["analytic_threshold"] = res.analytic_threshold;
            py::list pts;
            for (const auto& pt : res.points) {
                py::dict e;
                e["n"] = pt.n;
                e["analytic"] = pt.analytic;
                e["monte_carlo"] = pt.monte_carlo;
                pts.append(e);
            }
            out["points"] = pts;
            return out;
        },
        py::arg("p"), py::arg("d"), py::arg("delta"), py::arg("n_grid"), py::arg("trials"),
        py::arg("seed"));

    m.def(
        "compute_q",
        [](const MaskedNetwork& target, const SparsityPlan& plan, double delta) {
            return compute_q(target, plan, delta).q;
        },
        py::arg("target"), py::arg("plan"), py::arg("delta"));

    m.def(
        "construct_wlt_fc",
        [](const MaskedNetwork& target, const SparsityPlan& plan, double delta,
           std::uint64_t seed) {
            WltResult res = construct_wlt_fc(target, plan, delta, seed);
            return py::make_tuple(res.ticket, report_dict(res.report));
        },
        py::arg("target"), py::arg("plan"), py::arg("delta"), py::arg("seed"));

    m.def(
        "construct_wlt_conv",
        [](const MaskedNetwork& target, const SparsityPlan& plan, double delta,
           std::uint64_t seed) {
            WltResult res = construct_wlt_conv(target, plan, delta, seed);
            return py::make_tuple(res.ticket, report_dict(res.report));
        },
        py::arg("target"), py::arg("plan"), py::arg("delta"), py::arg("seed"));

    m.def(
        "construct_slt",
        [](const MaskedNetwork& target, const SparsityPlan& plan, double delta, double eps,
           std::uint64_t seed) {
            SltResult res = construct_slt(target, plan, delta, eps, seed);
            return py::make_tuple(res.ticket, report_dict(res.report));
        },
        py::arg("target"), py::arg("plan"), py::arg("delta"), py::arg("eps"), py::arg("seed"));

    m.attr("__version__") = "0.1.0";
}
