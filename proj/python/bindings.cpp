#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spadsim/config.hpp"
#include "spadsim/darkcounts.hpp"
#include "spadsim/errors.hpp"
#include "spadsim/figures.hpp"
#include "spadsim/qkd.hpp"

namespace py = pybind11;
using namespace spadsim;

namespace {

py::dict metrics_dict(const DetectorMetrics& m) {
    py::dict d;
    d["pde"] = m.pde;
    d["p_abs"] = m.p_abs;
    d["p_ava"] = m.p_ava;
    d["v_br"] = m.v_br;
    d["dcr_thermal_hz"] = m.dcr.thermal_hz;
    d["dcr_btb_hz"] = m.dcr.btb_hz;
    d["dcr_tat_hz"] = m.dcr.tat_hz;
    d["dcr_total_hz"] = m.dcr.total_hz;
    d["warnings"] = m.warnings;
    return d;
}

DeviceStack tuned_reference(double l_abs_um, double l_mul_um) {
    return tune_charge_layer(reference_stack(l_abs_um, l_mul_um), ChargeTuning{}, MaterialDatabase::builtin());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "InGaAs/InP SAGCM SPAD simulator core";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NoBreakdownError>(m, "NoBreakdownError", PyExc_RuntimeError);
    py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
    py::register_exception<MetricsError>(m, "MetricsError", PyExc_RuntimeError);

    py::enum_<LayerRole>(m, "LayerRole")
        .value("contact", LayerRole::contact)
        .value("multiplication", LayerRole::multiplication)
        .value("charge", LayerRole::charge)
        .value("grading", LayerRole::grading)
        .value("absorption", LayerRole::absorption)
        .value("buffer", LayerRole::buffer);

    py::class_<LayerSpec>(m, "LayerSpec")
        .def(py::init<>())
        .def(py::init([](LayerRole role, std::string material, double thickness_um, double doping_cm3) {
                 return LayerSpec{role, std::move(material), thickness_um, doping_cm3};
             }),
             py::arg("role"), py::arg("material"), py::arg("thickness_um"), py::arg("doping_cm3"))
        .def_readwrite("role", &LayerSpec::role)
        .def_readwrite("material", &LayerSpec::material)
        .def_readwrite("thickness_um", &LayerSpec::thickness_um)
        .def_readwrite("doping_cm3", &LayerSpec::doping_cm3);

    py::class_<DeviceStack>(m, "DeviceStack")
        .def(py::init<>())
        .def_readwrite("layers", &DeviceStack::layers)
        .def_readwrite("active_diameter_um", &DeviceStack::active_diameter_um)
        .def("active_area_cm2", &DeviceStack::active_area_cm2)
        .def("to_yaml", [](const DeviceStack& s) { return stack_to_yaml(s); });

    m.def("reference_stack", &reference_stack, py::arg("l_abs_um") = 1.8, py::arg("l_mul_um") = 1.5,
          py::arg("diameter_um") = 25.0);
    m.def("tuned_reference_stack", &tuned_reference, py::arg("l_abs_um") = 1.8, py::arg("l_mul_um") = 1.5,
          "Reference stack with the charge layer tuned at the default point");

    m.def(
        "bandgap", [](const std::string& material, double t_k) { return bandgap(MaterialDatabase::builtin().get(material), t_k); },
        py::arg("material"), py::arg("t_k"));
    m.def(
        "intrinsic_carrier_concentration",
        [](const std::string& material, double t_k) {
            return intrinsic_carrier_concentration(MaterialDatabase::builtin().get(material), t_k);
        },
        py::arg("material"), py::arg("t_k"));

    m.def(
        "solve_field",
        [](const DeviceStack& s, double bias_v) {
            const auto f = solve_field(s, bias_v, MaterialDatabase::builtin());
            py::dict d;
            d["x_um"] = f.x_um;
            d["field_v_per_cm"] = f.field_v_per_cm;
            d["depletion_edge_um"] = f.depletion_edge_um;
            d["status"] = std::string(to_string(f.status));
            return d;
        },
        py::arg("stack"), py::arg("bias_v"));
    m.def(
        "breakdown_voltage", [](const DeviceStack& s, double t_k) { return breakdown_voltage(s, t_k, MaterialDatabase::builtin()); },
        py::arg("stack"), py::arg("t_k"));
    m.def(
        "p_ava", [](const DeviceStack& s, double t_k, double v_ex) { return p_ava(s, t_k, v_ex, MaterialDatabase::builtin()); },
        py::arg("stack"), py::arg("t_k"), py::arg("v_ex"));
    m.def(
        "metrics",
        [](const DeviceStack& s, double t_k, double v_ex, double wavelength_nm) {
            return metrics_dict(metrics(s, OperatingPoint{t_k, v_ex, wavelength_nm}));
        },
        py::arg("stack"), py::arg("t_k"), py::arg("v_ex"), py::arg("wavelength_nm") = 1550.0);

    m.def("absorption_efficiency", &absorption_efficiency, py::arg("alpha_per_cm"), py::arg("l_abs_um"));
    m.def(
        "channel_efficiency", [](double d, double pde) { return channel_efficiency(d, QkdParams{}, pde); },
        py::arg("distance_km"), py::arg("pde"));
    m.def(
        "secure_key_rate",
        [](double distance_km, double pde, double dcr_hz, double v_ex) {
            return secure_key_rate(distance_km, DetectorSummary{pde, dcr_hz, v_ex}).rate_bps;
        },
        py::arg("distance_km"), py::arg("pde"), py::arg("dcr_total_hz"), py::arg("v_ex"));
    m.def(
        "max_distance",
        [](double pde, double dcr_hz, double v_ex) { return max_distance(DetectorSummary{pde, dcr_hz, v_ex}); },
        py::arg("pde"), py::arg("dcr_total_hz"), py::arg("v_ex"));

    m.def("figure_names", &figure_names);
    m.def(
        "figure_csv",
        [](const std::string& name) {
            const auto id = parse_figure_name(name);
            if (!id) {
                throw ValidationError("unknown figure '" + name + "'");
            }
            std::ostringstream out;
            {
                py::gil_scoped_release release;
                write_figure_csv(out, *id);
            }
            return out.str();
        },
        py::arg("name"));
}
