#include "divflow/clifford.hpp"
#include "divflow/flows.hpp"
#include "divflow/harness.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
namespace h = divflow::harness;
using divflow::Matrix;

namespace {

h::Options options_from_json(const std::string& text)
{
    const h::Json j = text.empty() ? h::Json::object() : h::parse_json(text);
    h::Options o;
    if (j.contains("config")) o.quad = h::apply_config(j.at("config"), o.quad);
    if (j.contains("k")) o.k = j.at("k").get<int>();
    if (j.contains("p")) o.p = j.at("p").get<int>();
    if (j.contains("sign")) o.sign = j.at("sign").get<int>();
    if (j.contains("seed")) o.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("tol")) o.tol = j.at("tol").get<double>();
    if (j.contains("nodes")) o.nodes = j.at("nodes").get<int>();
    if (j.contains("suite")) o.suite = j.at("suite").get<std::string>();
    if (j.contains("parity")) o.parity = j.at("parity").get<std::string>();
    return o;
}

// Serialized result record (or CSV for trace) for one harness command.
std::string run(const std::string& command, const std::string& spec_text, const std::string& options_text)
{
    const h::Options o = options_from_json(options_text);
    if (command == "verify") return h::serialize(h::cmd_verify(o));
    const h::Json spec = h::parse_json(spec_text);
    if (command == "sf") return h::serialize(h::cmd_sf(spec, o));
    if (command == "eta") return h::serialize(h::cmd_eta(spec, o));
    if (command == "df") return h::serialize(h::cmd_df(spec, o));
    if (command == "regint") return h::serialize(h::cmd_regint(spec, o));
    if (command == "suspend") return h::serialize(h::cmd_suspend(spec, o));
    if (command == "trace") return h::cmd_trace(spec, o);
    throw divflow::PreconditionError("unknown command \"" + command + "\"");
}

divflow::HermitianPath make_path(const std::vector<double>& knots, const std::vector<Matrix>& matrices)
{
    return divflow::HermitianPath(knots, matrices);
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Native core of divflow";

    static py::exception<divflow::Error> error(m, "Error", PyExc_RuntimeError);
    static py::exception<divflow::PreconditionError> precondition(m, "PreconditionError", error.ptr());
    static py::exception<divflow::ConvergenceError> convergence(m, "ConvergenceError", error.ptr());
    static py::exception<h::JsonSyntaxError> syntax(m, "JsonSyntaxError", precondition.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const h::JsonSyntaxError& e) {
            py::set_error(syntax, e.what());
        } catch (const divflow::PreconditionError& e) {
            py::set_error(precondition, e.what());
        } catch (const divflow::ConvergenceError& e) {
            py::set_error(convergence, e.what());
        } catch (const divflow::Error& e) {
            py::set_error(error, e.what());
        } catch (const h::Json::exception& e) {
            py::set_error(precondition, e.what());
        }
    });

    m.def("run", &run, py::arg("command"), py::arg("spec") = "", py::arg("options") = "",
          "Run a harness command on JSON text; returns the serialized record (CSV for trace).");
    m.def("default_config", [] { return h::config_to_json(divflow::QuadConfig{}).dump(); });

    m.def("clifford_generators", [](int p) { return divflow::build_clifford(p).generators; }, py::arg("p"));
    m.def("clifford_grading", [](int p) { return divflow::build_clifford(p).grading; }, py::arg("p"));

    m.def("spectral_flow", [](const std::vector<double>& s, const std::vector<Matrix>& h, int n_s) {
        return divflow::spectral_flow(make_path(s, h), n_s);
    }, py::arg("knots"), py::arg("matrices"), py::arg("n_s") = 16);
    m.def("eta_spectral", [](const Matrix& d) { return divflow::eta_spectral(d); }, py::arg("d"));
    m.def("eta_reduced", [](const Matrix& d) { return divflow::eta_reduced(d); }, py::arg("d"));
    m.def("eta_parametric", [](const Matrix& d, int p) { return divflow::eta_parametric(d, p, divflow::QuadConfig{}); },
          py::arg("d"), py::arg("p"));
    m.def("winding_df", [](int n) {
        const divflow::FlowResult r =
            divflow::divisor_flow_odd(divflow::linear_path_to(divflow::winding_symbol(n)), 0, divflow::QuadConfig{});
        return py::make_tuple(r.value, r.snapped, r.residual);
    }, py::arg("n"), "DF of the path 1 + s(g^n - 1); returns (value, snapped, residual).");
    m.def("suspended_df", [](const std::vector<double>& s, const std::vector<Matrix>& h, int p, int sign) {
        const divflow::FlowResult r = divflow::divisor_flow_odd(divflow::suspend_odd(make_path(s, h), p, sign),
                                                                (p - 1) / 2, divflow::QuadConfig{});
        return py::make_tuple(r.value, r.snapped, r.residual);
    }, py::arg("knots"), py::arg("matrices"), py::arg("p") = 1, py::arg("sign") = 1);
}
