#pragma once

#include <iosfwd>

#include "spadsim/avalanche.hpp"
#include "spadsim/device.hpp"
#include "spadsim/materials.hpp"

namespace spadsim {

struct TunnelingParams {
    double tau_abs_s = 50e-6;  // effective SRH lifetime in the absorber
    double n_t_cm3 = 4e14;     // trap density
    double a_split = 0.75;     // fraction of Eg on the valence-band side of the trap

    void validate() const;
};

/// Tunneling constants for one material and temperature, SI units. Masses scale with Eg(T)/Eg(300).
struct TunnelingPrefactors {
    double eg_ev = 0.0;
    double m_c = 0.0;   // m0
    double m_lh = 0.0;  // m0
    double m_r = 0.0;   // m0, reduced mass of m_c and m_lh
    double a = 0.0;     // A/V^2, F^2 prefactor of the current density
    double b = 0.0;     // direct-tunneling exponent factor with m_r
    double b1 = 0.0;    // trap exponent factor with m_lh
    double b2 = 0.0;    // trap exponent factor with m_c
    double eb1_ev = 0.0;
    double eb2_ev = 0.0;
};

TunnelingPrefactors tunneling_prefactors(const MaterialParams& material, double t_k, const TunnelingParams& params = {});

struct DarkCountBreakdown {
    double thermal_hz = 0.0;
    double btb_hz = 0.0;
    double tat_hz = 0.0;
    double total_hz = 0.0;

    static DarkCountBreakdown from_components(double thermal_hz, double btb_hz, double tat_hz);
};

/// n_i / tau_abs over the depleted absorber volume, weighted by the hole-injection probability.
double thermal_dcr(const DeviceStack& stack, double t_k, const TriggerProfile& trigger, const FieldProfile& field,
                   const TunnelingParams& params, const MaterialDatabase& materials);

/// Direct band-to-band generation, A F^2 exp(-B Eg^{3/2} / F) / q, in pairs cm^-3 s^-1.
double btb_generation_rate(double field_v_per_cm, const MaterialParams& material, double t_k);

/// Trap-assisted generation through a level a*Eg above the valence band, in pairs cm^-3 s^-1.
double tat_generation_rate(double field_v_per_cm, const MaterialParams& material, double t_k,
                           const TunnelingParams& params = {});

struct TunnelingDcr {
    double btb_hz = 0.0;
    double tat_hz = 0.0;
};

/// Active area times the trapezoidal integral of G(F(x)) p_pair(x) over the multiplication layer.
TunnelingDcr tunneling_dcr(const DeviceStack& stack, double t_k, const FieldProfile& field,
                           const TriggerProfile& trigger, const TunnelingParams& params,
                           const MaterialDatabase& materials);

/// Field solve, trigger solve and all three mechanisms at V_br + v_ex.
DarkCountBreakdown total_dcr(const DeviceStack& stack, double t_k, double v_ex, const MaterialDatabase& materials,
                             const TunnelingParams& params = {}, const DeviceSolverOptions& device = {},
                             const AvalancheOptions& avalanche = {});

/// Columns: T_K, v_ex_V, dcr_thermal_hz, dcr_btb_hz, dcr_tat_hz, dcr_total_hz
void write_dcr_csv_header(std::ostream& out);
void write_dcr_csv_row(std::ostream& out, double t_k, double v_ex, const DarkCountBreakdown& dcr);

}  // namespace spadsim
