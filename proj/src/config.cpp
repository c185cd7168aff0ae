#include "spadsim/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "spadsim/csv.hpp"
#include "spadsim/errors.hpp"

namespace spadsim {

namespace {

namespace fs = std::filesystem;

std::string read_text(const fs::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(std::string(what) + " not found: " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

YAML::Node load_yaml(std::string_view text, const std::string& source) {
    try {
        return YAML::Load(std::string(text));
    } catch (const YAML::Exception& e) {
        throw ConfigError(source + ": " + e.what());
    }
}

void check_keys(const YAML::Node& node, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!node.IsMap()) {
        throw ConfigError(where + ": expected a mapping");
    }
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!ok.count(key)) {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
    }
}

template <class T>
T get(const YAML::Node& node, const char* key, const std::string& where) {
    try {
        return node[key].as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(where + "." + key + ": invalid value");
    }
}

template <class T>
void maybe(const YAML::Node& node, const char* key, const std::string& where, T& out) {
    if (node[key]) {
        out = get<T>(node, key, where);
    }
}

// Number list, single number, or {start, stop, step}.
std::vector<double> parse_axis(const YAML::Node& node, const std::string& where) {
    try {
        if (node.IsSequence()) {
            return node.as<std::vector<double>>();
        }
        if (node.IsMap()) {
            check_keys(node, where, {"start", "stop", "step"});
            return linspace_step(node["start"].as<double>(), node["stop"].as<double>(), node["step"].as<double>());
        }
        return {node.as<double>()};
    } catch (const YAML::Exception&) {
        throw ConfigError(where + ": expected a number, a list or {start, stop, step}");
    } catch (const ValidationError& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

SweepAxes parse_axes(const YAML::Node& node, const std::string& where) {
    check_keys(node, where, {"l_abs_um", "l_mul_um", "temperature_K", "excess_bias_V"});
    SweepAxes axes;
    if (node["l_abs_um"]) axes.l_abs_um = parse_axis(node["l_abs_um"], where + ".l_abs_um");
    if (node["l_mul_um"]) axes.l_mul_um = parse_axis(node["l_mul_um"], where + ".l_mul_um");
    if (node["temperature_K"]) axes.t_k = parse_axis(node["temperature_K"], where + ".temperature_K");
    if (node["excess_bias_V"]) axes.v_ex = parse_axis(node["excess_bias_V"], where + ".excess_bias_V");
    return axes;
}

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() || base.empty() ? p : base / p; }

MaterialDatabase pick_materials(const fs::path& override_path, const fs::path& config_path) {
    if (!override_path.empty()) {
        return MaterialDatabase::from_file(override_path);
    }
    if (!config_path.empty()) {
        return MaterialDatabase::from_file(config_path);
    }
    return MaterialDatabase::from_environment();
}

std::vector<double> or_default(const std::vector<double>& axis, double fallback) {
    return axis.empty() ? std::vector<double>{fallback} : axis;
}

}  // namespace

StackFile parse_stack_yaml(std::string_view text, const MaterialDatabase& materials, const std::string& source) {
    const auto root = load_yaml(text, source);
    if (!root || !root.IsMap()) {
        throw ConfigError(source + ": stack document must be a mapping");
    }
    check_keys(root, source, {"active_diameter_um", "layers"});
    StackFile out;
    maybe(root, "active_diameter_um", source, out.stack.active_diameter_um);
    const auto layers = root["layers"];
    if (!layers || !layers.IsSequence()) {
        throw ConfigError(source + ": 'layers' must be a list");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto node = layers[i];
        const std::string where = source + ": layers[" + std::to_string(i) + "]";
        check_keys(node, where, {"role", "material", "thickness_um", "doping_cm3"});
        for (const char* key : {"role", "material", "thickness_um", "doping_cm3"}) {
            if (!node[key]) {
                throw ConfigError(where + ": missing key '" + key + "'");
            }
        }
        LayerSpec layer;
        try {
            layer.role = parse_layer_role(get<std::string>(node, "role", where));
        } catch (const ValidationError& e) {
            throw ConfigError(where + ": " + e.what());
        }
        layer.material = get<std::string>(node, "material", where);
        layer.thickness_um = get<double>(node, "thickness_um", where);
        if (node["doping_cm3"].IsScalar() && node["doping_cm3"].Scalar() == "auto") {
            if (layer.role != LayerRole::charge) {
                throw ConfigError(where + ": 'auto' doping is only allowed on the charge layer");
            }
            out.auto_charge = true;
            layer.doping_cm3 = 0.0;
        } else {
            layer.doping_cm3 = get<double>(node, "doping_cm3", where);
        }
        out.stack.layers.push_back(layer);
    }
    try {
        out.stack.validate_sagcm(materials);
    } catch (const ValidationError& e) {
        throw ConfigError(source + ": " + e.what());
    }
    return out;
}

StackFile load_stack_file(const fs::path& path, const MaterialDatabase& materials) {
    return parse_stack_yaml(read_text(path, "stack file"), materials, path.string());
}

std::string stack_to_yaml(const DeviceStack& stack) {
    std::ostringstream out;
    out << "active_diameter_um: " << format_double(stack.active_diameter_um) << "\nlayers:\n";
    for (const auto& l : stack.layers) {
        out << "  - {role: " << to_string(l.role) << ", material: " << l.material
            << ", thickness_um: " << format_double(l.thickness_um) << ", doping_cm3: " << format_double(l.doping_cm3)
            << "}\n";
    }
    return out.str();
}

OutputFormat parse_output_format(std::string_view text) {
    if (text == "csv") {
        return OutputFormat::csv;
    }
    if (text == "json") {
        return OutputFormat::json;
    }
    throw ConfigError("unknown output format '" + std::string(text) + "' (expected csv or json)");
}

DeviceStack RunConfig::resolved_stack() const {
    if (!stack.auto_charge) {
        return stack.stack;
    }
    return tune_charge_layer(stack.stack, tuning, context.materials, context.device);
}

SweepSpec RunConfig::sweep_spec() const {
    SweepSpec spec;
    spec.base = stack.stack;
    spec.l_abs_um = or_default(sweep.l_abs_um, stack.stack.layer(LayerRole::absorption).thickness_um);
    spec.l_mul_um = or_default(sweep.l_mul_um, stack.stack.layer(LayerRole::multiplication).thickness_um);
    spec.t_k = or_default(sweep.t_k, operating.t_k);
    spec.v_ex = or_default(sweep.v_ex, operating.v_ex);
    spec.wavelength_nm = operating.wavelength_nm;
    if (stack.auto_charge) {
        spec.tuning = tuning;
    }
    return spec;
}

DesignSearchSpace RunConfig::search_space() const {
    DesignSearchSpace s;
    s.l_abs_um = or_default(search.l_abs_um, stack.stack.layer(LayerRole::absorption).thickness_um);
    s.l_mul_um = or_default(search.l_mul_um, stack.stack.layer(LayerRole::multiplication).thickness_um);
    s.t_k = or_default(search.t_k, operating.t_k);
    s.v_ex = or_default(search.v_ex, operating.v_ex);
    s.wavelength_nm = operating.wavelength_nm;
    return s;
}

RunConfig default_run_config() {
    RunConfig cfg;
    cfg.context.materials = MaterialDatabase::from_environment();
    cfg.stack.stack = reference_stack();
    cfg.stack.auto_charge = true;
    cfg.distances_km = linspace_step(0.0, 300.0, 2.0);
    return cfg;
}

RunConfig parse_run_config(std::string_view text, const fs::path& base_dir, const fs::path& materials_override,
                           const std::string& source) {
    const auto root = load_yaml(text, source);
    RunConfig cfg = default_run_config();
    if (!root || root.IsNull()) {
        cfg.context.materials = pick_materials(materials_override, {});
        return cfg;
    }
    check_keys(root, source,
               {"stack_file", "materials_file", "operating", "field", "solver", "charge_tuning", "darkcounts",
                "detector", "sweep", "qkd", "optimize", "output"});

    if (root["materials_file"]) {
        cfg.materials_file = resolve(base_dir, get<std::string>(root, "materials_file", source));
    }
    cfg.context.materials = pick_materials(materials_override, cfg.materials_file);
    if (!materials_override.empty()) {
        cfg.materials_file = materials_override;
    }

    if (root["stack_file"]) {
        cfg.stack_file = resolve(base_dir, get<std::string>(root, "stack_file", source));
        cfg.stack = load_stack_file(cfg.stack_file, cfg.context.materials);
    }

    if (const auto n = root["operating"]) {
        const std::string w = source + ".operating";
        check_keys(n, w, {"temperature_K", "excess_bias_V", "wavelength_nm"});
        maybe(n, "temperature_K", w, cfg.operating.t_k);
        maybe(n, "excess_bias_V", w, cfg.operating.v_ex);
        maybe(n, "wavelength_nm", w, cfg.operating.wavelength_nm);
    }
    if (const auto n = root["field"]) {
        const std::string w = source + ".field";
        check_keys(n, w, {"bias_V"});
        if (n["bias_V"]) {
            cfg.field_bias_v = get<double>(n, "bias_V", w);
        }
    }
    if (const auto n = root["solver"]) {
        const std::string w = source + ".solver";
        check_keys(n, w,
                   {"grid_nm", "bias_ceiling_V", "breakdown_tolerance", "ionization_threshold_V_per_cm",
                    "absorption_safety_field_V_per_cm", "relaxation", "tolerance", "max_iterations", "workers"});
        if (n["grid_nm"]) {
            cfg.context.device.grid_spacing_um = get<double>(n, "grid_nm", w) * 1e-3;
        }
        maybe(n, "bias_ceiling_V", w, cfg.context.device.bias_ceiling_v);
        maybe(n, "breakdown_tolerance", w, cfg.context.device.breakdown_tolerance);
        maybe(n, "ionization_threshold_V_per_cm", w, cfg.context.device.ionization_threshold_v_per_cm);
        maybe(n, "absorption_safety_field_V_per_cm", w, cfg.context.device.absorption_safety_field_v_per_cm);
        maybe(n, "relaxation", w, cfg.context.avalanche.relaxation);
        maybe(n, "tolerance", w, cfg.context.avalanche.tolerance);
        maybe(n, "max_iterations", w, cfg.context.avalanche.max_iterations);
        maybe(n, "workers", w, cfg.workers);
    }
    if (const auto n = root["charge_tuning"]) {
        const std::string w = source + ".charge_tuning";
        check_keys(n, w, {"temperature_K", "excess_bias_V", "target_field_V_per_cm"});
        maybe(n, "temperature_K", w, cfg.tuning.reference_temperature_k);
        maybe(n, "excess_bias_V", w, cfg.tuning.excess_bias_v);
        maybe(n, "target_field_V_per_cm", w, cfg.tuning.target_field_v_per_cm);
    }
    if (const auto n = root["darkcounts"]) {
        const std::string w = source + ".darkcounts";
        check_keys(n, w, {"tau_abs_s", "n_t_cm3", "a_split"});
        maybe(n, "tau_abs_s", w, cfg.context.tunneling.tau_abs_s);
        maybe(n, "n_t_cm3", w, cfg.context.tunneling.n_t_cm3);
        maybe(n, "a_split", w, cfg.context.tunneling.a_split);
    }
    if (const auto n = root["detector"]) {
        const std::string w = source + ".detector";
        check_keys(n, w, {"coupling_efficiency", "injection_efficiency", "absorption_per_cm"});
        maybe(n, "coupling_efficiency", w, cfg.context.detector.coupling_efficiency);
        maybe(n, "injection_efficiency", w, cfg.context.detector.injection_efficiency);
        if (n["absorption_per_cm"]) {
            cfg.context.detector.absorption_override_per_cm = get<double>(n, "absorption_per_cm", w);
        }
    }
    if (const auto n = root["sweep"]) {
        cfg.sweep = parse_axes(n, source + ".sweep");
    }
    if (const auto n = root["qkd"]) {
        const std::string w = source + ".qkd";
        check_keys(n, w,
                   {"mu", "nu", "intensity_ratio", "rep_rate_Hz", "f_ec", "alpha_fiber_dB_per_km", "rx_loss_dB",
                    "e_opt", "p_ap_low", "p_ap_high", "p_ap_threshold_V", "sift_factor", "two_detectors",
                    "distances_km"});
        auto& q = cfg.qkd;
        maybe(n, "mu", w, q.mu);
        maybe(n, "nu", w, q.nu);
        if (n["intensity_ratio"]) {
            const auto r = get<std::vector<double>>(n, "intensity_ratio", w);
            if (r.size() != 3) {
                throw ConfigError(w + ".intensity_ratio: expected three entries");
            }
            q.intensity_ratio = {r[0], r[1], r[2]};
        }
        maybe(n, "rep_rate_Hz", w, q.rep_rate_hz);
        maybe(n, "f_ec", w, q.f_ec);
        maybe(n, "alpha_fiber_dB_per_km", w, q.alpha_fiber_db_per_km);
        maybe(n, "rx_loss_dB", w, q.rx_loss_db);
        maybe(n, "e_opt", w, q.e_opt);
        maybe(n, "p_ap_low", w, q.p_ap_low);
        maybe(n, "p_ap_high", w, q.p_ap_high);
        maybe(n, "p_ap_threshold_V", w, q.p_ap_threshold_v);
        maybe(n, "sift_factor", w, q.sift_factor);
        maybe(n, "two_detectors", w, q.two_detectors);
        if (n["distances_km"]) {
            cfg.distances_km = parse_axis(n["distances_km"], w + ".distances_km");
        }
    }
    if (const auto n = root["optimize"]) {
        const std::string w = source + ".optimize";
        check_keys(n, w, {"distance_km", "l_abs_um", "l_mul_um", "temperature_K", "excess_bias_V"});
        maybe(n, "distance_km", w, cfg.optimize_distance_km);
        YAML::Node axes(YAML::NodeType::Map);
        for (const char* k : {"l_abs_um", "l_mul_um", "temperature_K", "excess_bias_V"}) {
            if (n[k]) {
                axes[k] = n[k];
            }
        }
        cfg.search = parse_axes(axes, w);
    }
    if (const auto n = root["output"]) {
        const std::string w = source + ".output";
        check_keys(n, w, {"directory", "format"});
        if (n["directory"]) {
            cfg.output_dir = resolve(base_dir, get<std::string>(n, "directory", w));
        }
        if (n["format"]) {
            cfg.format = parse_output_format(get<std::string>(n, "format", w));
        }
    }

    try {
        cfg.operating.validate();
        cfg.qkd.validate();
        cfg.context.tunneling.validate();
        cfg.context.detector.validate();
        if (!(cfg.context.device.grid_spacing_um > 0.0)) {
            throw ValidationError("grid spacing must be positive");
        }
        if (!(cfg.context.avalanche.relaxation > 0.0 && cfg.context.avalanche.relaxation <= 1.0)) {
            throw ValidationError("relaxation must lie in (0, 1]");
        }
    } catch (const std::exception& e) {
        throw ConfigError(source + ": " + e.what());
    }
    return cfg;
}

RunConfig load_run_config(const fs::path& path, const fs::path& materials_override) {
    return parse_run_config(read_text(path, "config file"), path.parent_path(), materials_override, path.string());
}

}  // namespace spadsim
