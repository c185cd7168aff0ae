#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spadsim {

inline constexpr double kMinTemperatureK = 77.0;
inline constexpr double kMaxTemperatureK = 350.0;
inline constexpr double kMinWavelengthNm = 1000.0;
inline constexpr double kMaxWavelengthNm = 1700.0;

/// Parameters of one carrier's impact-ionization coefficient,
/// coef(F, T) = a(T) * exp(-(b(T) / F)^exponent) with linear temperature scaling of a and b
/// around the reference temperature.
struct IonizationCarrierParams {
    double prefactor_per_cm = 0.0;
    double prefactor_temp_coeff = 0.0;  // 1/K
    double critical_field_v_per_cm = 0.0;
    double critical_field_temp_coeff = 0.0;  // 1/K
    double exponent = 1.0;

    double prefactor(double t_k, double t_ref_k) const;
    double critical_field(double t_k, double t_ref_k) const;
};

struct IonizationModel {
    IonizationCarrierParams electron;
    IonizationCarrierParams hole;
    double reference_temperature_k = 300.0;

    void validate() const;
};

struct IonizationCoefficients {
    double alpha_e = 0.0;  // cm^-1
    double beta_h = 0.0;   // cm^-1
};

/// Absorption coefficient table indexed by wavelength (rows) and temperature (columns).
struct AbsorptionTable {
    double flat_value_per_cm = 7.0e3;
    std::vector<double> wavelengths_nm;
    std::vector<double> temperatures_k;
    std::vector<std::vector<double>> alpha_per_cm;

    bool has_table() const { return !wavelengths_nm.empty(); }
    void validate() const;
};

struct MaterialParams {
    std::string name;
    double eg_300K = 0.0;         // eV
    double varshni_alpha = 0.0;   // eV/K
    double varshni_beta = 0.0;    // K
    double m_c = 0.0;             // m0
    double m_lh = 0.0;            // m0
    double eps_r = 1.0;
    double nc_300K = 0.0;         // cm^-3
    double nv_300K = 0.0;         // cm^-3
    double ni_300K = 0.0;         // cm^-3
    std::optional<IonizationModel> ionization;
    std::optional<AbsorptionTable> absorption;

    void validate() const;
};

class MaterialDatabase {
public:
    MaterialDatabase() = default;

    /// Parses a multi-document YAML stream, one material per document.
    static MaterialDatabase from_yaml(std::string_view text, const std::string& source = "<string>");
    static MaterialDatabase from_file(const std::filesystem::path& path);

    /// Database compiled into the library from data/materials.yaml.
    static const MaterialDatabase& builtin();

    /// The file named by SPADSIM_MATERIALS when set, otherwise the builtin database.
    static MaterialDatabase from_environment();

    void add(MaterialParams material);
    bool contains(std::string_view name) const;
    const MaterialParams& get(std::string_view name) const;
    const IonizationModel& ionization(std::string_view name) const;
    std::vector<std::string> names() const;

private:
    std::map<std::string, MaterialParams, std::less<>> materials_;
};

inline constexpr const char* kMaterialsEnvVar = "SPADSIM_MATERIALS";

/// Varshni bandgap anchored at the tabulated 300 K value (eV).
double bandgap(const MaterialParams& material, double t_k);

/// Effective densities of states scaled as (T/300)^{3/2} (cm^-3).
double conduction_dos(const MaterialParams& material, double t_k);
double valence_dos(const MaterialParams& material, double t_k);

/// n_i = sqrt(Nc Nv) exp(-Eg / 2kT) (cm^-3).
double intrinsic_carrier_concentration(const MaterialParams& material, double t_k);

IonizationCoefficients ionization_coefficients(const IonizationModel& model, double field_v_per_cm, double t_k);

/// Photon wavelength matching the bandgap; longer wavelengths are not absorbed.
double cutoff_wavelength_nm(const MaterialParams& material, double t_k);

double absorption_coefficient(const MaterialParams& material, double wavelength_nm, double t_k);

void check_temperature(double t_k);

}  // namespace spadsim
