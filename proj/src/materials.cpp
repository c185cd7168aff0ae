#include "spadsim/materials.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "spadsim/constants.hpp"
#include "spadsim/errors.hpp"

namespace spadsim {

namespace detail {
extern const char* const kBuiltinMaterialsYaml;
}

namespace {

double required(const YAML::Node& node, const char* key, const std::string& where) {
    if (!node[key]) {
        throw ConfigError(where + ": missing key '" + key + "'");
    }
    try {
        return node[key].as<double>();
    } catch (const YAML::Exception&) {
        throw ConfigError(where + ": key '" + key + "' is not a number");
    }
}

double optional_number(const YAML::Node& node, const char* key, double fallback) {
    return node[key] ? node[key].as<double>() : fallback;
}

IonizationCarrierParams parse_carrier(const YAML::Node& node, const std::string& where) {
    IonizationCarrierParams p;
    p.prefactor_per_cm = required(node, "prefactor_per_cm", where);
    p.prefactor_temp_coeff = optional_number(node, "prefactor_temp_coeff", 0.0);
    p.critical_field_v_per_cm = required(node, "critical_field_v_per_cm", where);
    p.critical_field_temp_coeff = optional_number(node, "critical_field_temp_coeff", 0.0);
    p.exponent = optional_number(node, "exponent", 1.0);
    return p;
}

MaterialParams parse_material(const YAML::Node& doc, const std::string& source) {
    if (!doc["name"]) {
        throw ConfigError(source + ": material document without 'name'");
    }
    MaterialParams m;
    m.name = doc["name"].as<std::string>();
    const std::string where = source + " [" + m.name + "]";
    m.eg_300K = required(doc, "eg_300K", where);
    m.varshni_alpha = required(doc, "varshni_alpha", where);
    m.varshni_beta = required(doc, "varshni_beta", where);
    m.m_c = required(doc, "m_c", where);
    m.m_lh = required(doc, "m_lh", where);
    m.eps_r = required(doc, "eps_r", where);
    m.nc_300K = required(doc, "nc_300K", where);
    m.nv_300K = required(doc, "nv_300K", where);
    m.ni_300K = required(doc, "ni_300K", where);

    if (const auto ion = doc["ionization"]) {
        IonizationModel model;
        model.reference_temperature_k = optional_number(ion, "reference_temperature_K", 300.0);
        model.electron = parse_carrier(ion["electron"], where + ".ionization.electron");
        model.hole = parse_carrier(ion["hole"], where + ".ionization.hole");
        m.ionization = model;
    }
    if (const auto abs = doc["absorption"]) {
        AbsorptionTable table;
        table.flat_value_per_cm = optional_number(abs, "flat_value_per_cm", table.flat_value_per_cm);
        if (abs["wavelengths_nm"]) {
            table.wavelengths_nm = abs["wavelengths_nm"].as<std::vector<double>>();
            table.temperatures_k = abs["temperatures_K"].as<std::vector<double>>();
            table.alpha_per_cm = abs["alpha_per_cm"].as<std::vector<std::vector<double>>>();
        }
        m.absorption = table;
    }
    try {
        m.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return m;
}

// Index i such that grid[i] <= v <= grid[i+1], clamped to the table ends.
std::pair<std::size_t, double> bracket(const std::vector<double>& grid, double v) {
    if (grid.size() == 1 || v <= grid.front()) {
        return {0, 0.0};
    }
    if (v >= grid.back()) {
        return {grid.size() - 2, 1.0};
    }
    const auto it = std::upper_bound(grid.begin(), grid.end(), v);
    const std::size_t i = static_cast<std::size_t>(it - grid.begin()) - 1;
    return {i, (v - grid[i]) / (grid[i + 1] - grid[i])};
}

}  // namespace

double IonizationCarrierParams::prefactor(double t_k, double t_ref_k) const {
    return prefactor_per_cm * (1.0 + prefactor_temp_coeff * (t_k - t_ref_k));
}

double IonizationCarrierParams::critical_field(double t_k, double t_ref_k) const {
    return critical_field_v_per_cm * (1.0 + critical_field_temp_coeff * (t_k - t_ref_k));
}

void IonizationModel::validate() const {
    for (const auto* c : {&electron, &hole}) {
        if (c->prefactor_per_cm <= 0.0 || c->critical_field_v_per_cm <= 0.0 || c->exponent <= 0.0) {
            throw ValidationError("ionization parameters must be positive");
        }
        for (const double t : {kMinTemperatureK, kMaxTemperatureK}) {
            if (c->prefactor(t, reference_temperature_k) <= 0.0 ||
                c->critical_field(t, reference_temperature_k) <= 0.0) {
                throw ValidationError("ionization temperature coefficients change sign inside [77, 350] K");
            }
        }
    }
}

void AbsorptionTable::validate() const {
    if (!(flat_value_per_cm > 0.0)) {
        throw ValidationError("absorption flat value must be positive");
    }
    if (!has_table()) {
        return;
    }
    if (temperatures_k.empty() || alpha_per_cm.size() != wavelengths_nm.size()) {
        throw ValidationError("absorption table shape does not match its axes");
    }
    for (const auto& row : alpha_per_cm) {
        if (row.size() != temperatures_k.size()) {
            throw ValidationError("absorption table row length does not match temperature axis");
        }
        for (const double v : row) {
            if (!(v > 0.0)) {
                throw ValidationError("absorption table entries must be positive");
            }
        }
    }
    if (!std::is_sorted(wavelengths_nm.begin(), wavelengths_nm.end()) ||
        !std::is_sorted(temperatures_k.begin(), temperatures_k.end())) {
        throw ValidationError("absorption table axes must be ascending");
    }
}

void MaterialParams::validate() const {
    if (name.empty()) {
        throw ValidationError("material name is empty");
    }
    if (!(m_c > 0.0) || !(m_lh > 0.0)) {
        throw ValidationError("effective masses must be positive");
    }
    if (!(eps_r > 1.0)) {
        throw ValidationError("relative permittivity must exceed 1");
    }
    if (!(eg_300K > 0.0)) {
        throw ValidationError("bandgap must be positive");
    }
    if (!(nc_300K > 0.0) || !(nv_300K > 0.0) || !(ni_300K > 0.0)) {
        throw ValidationError("densities of states must be positive");
    }
    if (varshni_beta <= -kMinTemperatureK) {
        throw ValidationError("varshni_beta out of range");
    }
    if (ionization) {
        ionization->validate();
    }
    if (absorption) {
        absorption->validate();
    }
}

MaterialDatabase MaterialDatabase::from_yaml(std::string_view text, const std::string& source) {
    std::vector<YAML::Node> docs;
    try {
        docs = YAML::LoadAll(std::string(text));
    } catch (const YAML::Exception& e) {
        throw ConfigError(source + ": " + e.what());
    }
    MaterialDatabase db;
    for (const auto& doc : docs) {
        if (!doc || doc.IsNull()) {
            continue;
        }
        db.add(parse_material(doc, source));
    }
    if (db.materials_.empty()) {
        throw ConfigError(source + ": no materials defined");
    }
    return db;
}

MaterialDatabase MaterialDatabase::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("materials file not found: " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return from_yaml(buf.str(), path.string());
}

const MaterialDatabase& MaterialDatabase::builtin() {
    static const MaterialDatabase db = from_yaml(detail::kBuiltinMaterialsYaml, "<builtin materials>");
    return db;
}

MaterialDatabase MaterialDatabase::from_environment() {
    if (const char* path = std::getenv(kMaterialsEnvVar); path != nullptr && *path != '\0') {
        return from_file(path);
    }
    return builtin();
}

void MaterialDatabase::add(MaterialParams material) {
    material.validate();
    auto name = material.name;
    materials_.insert_or_assign(std::move(name), std::move(material));
}

bool MaterialDatabase::contains(std::string_view name) const {
    return materials_.find(name) != materials_.end();
}

const MaterialParams& MaterialDatabase::get(std::string_view name) const {
    const auto it = materials_.find(name);
    if (it == materials_.end()) {
        throw ValidationError("unknown material '" + std::string(name) + "'");
    }
    return it->second;
}

const IonizationModel& MaterialDatabase::ionization(std::string_view name) const {
    const auto& m = get(name);
    if (!m.ionization) {
        throw ValidationError("material '" + std::string(name) + "' has no ionization model");
    }
    return *m.ionization;
}

std::vector<std::string> MaterialDatabase::names() const {
    std::vector<std::string> out;
    out.reserve(materials_.size());
    for (const auto& [name, _] : materials_) {
        out.push_back(name);
    }
    return out;
}

void check_temperature(double t_k) {
    if (!(t_k >= kMinTemperatureK && t_k <= kMaxTemperatureK)) {
        throw DomainError("temperature " + std::to_string(t_k) + " K outside [77, 350] K");
    }
}

double bandgap(const MaterialParams& material, double t_k) {
    check_temperature(t_k);
    const double b = material.varshni_beta;
    return material.eg_300K + material.varshni_alpha * (300.0 * 300.0 / (300.0 + b) - t_k * t_k / (t_k + b));
}

double conduction_dos(const MaterialParams& material, double t_k) {
    check_temperature(t_k);
    return material.nc_300K * std::pow(t_k / 300.0, 1.5);
}

double valence_dos(const MaterialParams& material, double t_k) {
    check_temperature(t_k);
    return material.nv_300K * std::pow(t_k / 300.0, 1.5);
}

double intrinsic_carrier_concentration(const MaterialParams& material, double t_k) {
    const double eg = bandgap(material, t_k);
    return std::sqrt(conduction_dos(material, t_k) * valence_dos(material, t_k)) *
           std::exp(-eg / (2.0 * PhysicalConstants::k_B_eV * t_k));
}

IonizationCoefficients ionization_coefficients(const IonizationModel& model, double field_v_per_cm, double t_k) {
    if (!(field_v_per_cm >= 0.0)) {
        throw DomainError("negative electric field");
    }
    check_temperature(t_k);
    if (field_v_per_cm == 0.0) {
        return {};
    }
    const auto eval = [&](const IonizationCarrierParams& c) {
        const double ratio = c.critical_field(t_k, model.reference_temperature_k) / field_v_per_cm;
        return c.prefactor(t_k, model.reference_temperature_k) * std::exp(-std::pow(ratio, c.exponent));
    };
    return {eval(model.electron), eval(model.hole)};
}

double cutoff_wavelength_nm(const MaterialParams& material, double t_k) {
    // hc in eV nm
    constexpr double kHcEvNm = 1239.8419843320026;
    return kHcEvNm / bandgap(material, t_k);
}

double absorption_coefficient(const MaterialParams& material, double wavelength_nm, double t_k) {
    if (!(wavelength_nm >= kMinWavelengthNm && wavelength_nm <= kMaxWavelengthNm)) {
        throw DomainError("wavelength " + std::to_string(wavelength_nm) + " nm outside [1000, 1700] nm");
    }
    if (wavelength_nm >= cutoff_wavelength_nm(material, t_k)) {
        return 0.0;
    }
    const AbsorptionTable table = material.absorption.value_or(AbsorptionTable{});
    if (!table.has_table()) {
        return table.flat_value_per_cm;
    }
    const auto [iw, fw] = bracket(table.wavelengths_nm, wavelength_nm);
    const auto [it, ft] = bracket(table.temperatures_k, t_k);
    const auto& a = table.alpha_per_cm;
    const std::size_t iw1 = std::min(iw + 1, a.size() - 1);
    const std::size_t it1 = std::min(it + 1, table.temperatures_k.size() - 1);
    const double lo = a[iw][it] + ft * (a[iw][it1] - a[iw][it]);
    const double hi = a[iw1][it] + ft * (a[iw1][it1] - a[iw1][it]);
    return lo + fw * (hi - lo);
}

}  // namespace spadsim
