#include "spadsim/darkcounts.hpp"

#include <cmath>
#include <ostream>

#include "spadsim/constants.hpp"
#include "spadsim/csv.hpp"
#include "spadsim/errors.hpp"

namespace spadsim {

namespace {

using C = PhysicalConstants;

// Exponent factor pi sqrt(m/2) / (2 q hbar) for a mass in units of m0.
double barrier_factor(double mass_m0) { return C::pi * std::sqrt(0.5 * mass_m0 * C::m0) / (2.0 * C::q * C::hbar); }

}  // namespace

void TunnelingParams::validate() const {
    if (!(tau_abs_s > 0.0)) {
        throw ValidationError("tau_abs must be positive");
    }
    if (!(n_t_cm3 >= 0.0)) {
        throw ValidationError("trap density must be nonnegative");
    }
    if (!(a_split > 0.0 && a_split < 1.0)) {
        throw ValidationError("barrier split fraction must lie in (0, 1)");
    }
}

TunnelingPrefactors tunneling_prefactors(const MaterialParams& material, double t_k, const TunnelingParams& params) {
    params.validate();
    TunnelingPrefactors p;
    p.eg_ev = bandgap(material, t_k);
    const double scale = p.eg_ev / material.eg_300K;
    p.m_c = material.m_c * scale;
    p.m_lh = material.m_lh * scale;
    p.m_r = p.m_c * p.m_lh / (p.m_c + p.m_lh);
    const double eg_j = p.eg_ev * C::q;
    p.a = std::pow(C::q, 3) * std::sqrt(2.0 * p.m_r * C::m0 / eg_j) / (4.0 * std::pow(C::pi, 3) * C::hbar * C::hbar);
    p.b = barrier_factor(p.m_r);
    p.b1 = barrier_factor(p.m_lh);
    p.b2 = barrier_factor(p.m_c);
    p.eb1_ev = params.a_split * p.eg_ev;
    p.eb2_ev = p.eg_ev - p.eb1_ev;
    return p;
}

DarkCountBreakdown DarkCountBreakdown::from_components(double thermal_hz, double btb_hz, double tat_hz) {
    return {thermal_hz, btb_hz, tat_hz, thermal_hz + btb_hz + tat_hz};
}

double thermal_dcr(const DeviceStack& stack, double t_k, const TriggerProfile& trigger, const FieldProfile& field,
                   const TunnelingParams& params, const MaterialDatabase& materials) {
    params.validate();
    const auto& absorber = materials.get(stack.layer(LayerRole::absorption).material);
    const double volume_cm3 = stack.active_area_cm2() * field.depleted_thickness_um(LayerRole::absorption) * kCmPerUm;
    return intrinsic_carrier_concentration(absorber, t_k) / params.tau_abs_s * volume_cm3 *
           trigger.hole_injection_probability();
}

double btb_generation_rate(double field_v_per_cm, const MaterialParams& material, double t_k) {
    if (!(field_v_per_cm >= 0.0)) {
        throw DomainError("negative electric field");
    }
    const auto p = tunneling_prefactors(material, t_k);
    if (field_v_per_cm == 0.0) {
        return 0.0;
    }
    const double f = field_v_per_cm * 1e2;  // V/m
    const double eg_j = p.eg_ev * C::q;
    const double j = p.a * f * f * std::exp(-p.b * std::pow(eg_j, 1.5) / f);  // A/m^3
    return j / C::q * 1e-6;
}

double tat_generation_rate(double field_v_per_cm, const MaterialParams& material, double t_k,
                           const TunnelingParams& params) {
    if (!(field_v_per_cm >= 0.0)) {
        throw DomainError("negative electric field");
    }
    const auto p = tunneling_prefactors(material, t_k, params);
    if (field_v_per_cm == 0.0 || params.n_t_cm3 == 0.0) {
        return 0.0;
    }
    const double f = field_v_per_cm * 1e2;
    const double k1 = p.b1 * std::pow(p.eb1_ev * C::q, 1.5) / f;
    const double k2 = p.b2 * std::pow(p.eb2_ev * C::q, 1.5) / f;
    const double nc = conduction_dos(material, t_k);
    const double nv = valence_dos(material, t_k);
    // N_T exp(-(k1 + k2)) / (Nv exp(-k1) + Nc exp(-k2)) rearranged so nothing overflows before the ratio.
    const double denom = nv * std::exp(k2) + nc * std::exp(k1);
    if (!std::isfinite(denom)) {
        return 0.0;
    }
    const double j = p.a * f * f * params.n_t_cm3 / denom;
    return j / C::q * 1e-6;
}

TunnelingDcr tunneling_dcr(const DeviceStack& stack, double t_k, const FieldProfile& field,
                           const TriggerProfile& trigger, const TunnelingParams& params,
                           const MaterialDatabase& materials) {
    const auto& mult = materials.get(stack.layer(LayerRole::multiplication).material);
    TunnelingDcr out;
    double prev_btb = 0.0;
    double prev_tat = 0.0;
    bool have_prev = false;
    for (std::size_t k = 0; k < trigger.size(); ++k) {
        const std::size_t node = trigger.first_node + k;
        if (field.role_at(node) != LayerRole::multiplication) {
            have_prev = false;
            continue;
        }
        const double f = field.field_v_per_cm[node];
        const double btb = btb_generation_rate(f, mult, t_k) * trigger.p_pair[k];
        const double tat = tat_generation_rate(f, mult, t_k, params) * trigger.p_pair[k];
        if (have_prev) {
            const double h = (trigger.x_um[k] - trigger.x_um[k - 1]) * kCmPerUm;
            out.btb_hz += 0.5 * h * (prev_btb + btb);
            out.tat_hz += 0.5 * h * (prev_tat + tat);
        }
        prev_btb = btb;
        prev_tat = tat;
        have_prev = true;
    }
    const double area = stack.active_area_cm2();
    out.btb_hz *= area;
    out.tat_hz *= area;
    return out;
}

DarkCountBreakdown total_dcr(const DeviceStack& stack, double t_k, double v_ex, const MaterialDatabase& materials,
                             const TunnelingParams& params, const DeviceSolverOptions& device,
                             const AvalancheOptions& avalanche) {
    const double v_br = breakdown_voltage(stack, t_k, materials, device);
    const auto field = solve_field(stack, v_br + v_ex, materials, device);
    const auto trigger = trigger_at_excess_bias(stack, t_k, v_br, v_ex, materials, device, avalanche);
    const auto tun = tunneling_dcr(stack, t_k, field, trigger, params, materials);
    return DarkCountBreakdown::from_components(thermal_dcr(stack, t_k, trigger, field, params, materials), tun.btb_hz,
                                               tun.tat_hz);
}

void write_dcr_csv_header(std::ostream& out) {
    out << "T_K,v_ex_V,dcr_thermal_hz,dcr_btb_hz,dcr_tat_hz,dcr_total_hz\n";
}

void write_dcr_csv_row(std::ostream& out, double t_k, double v_ex, const DarkCountBreakdown& dcr) {
    out << format_double(t_k) << ',' << format_double(v_ex) << ',' << format_double(dcr.thermal_hz) << ','
        << format_double(dcr.btb_hz) << ',' << format_double(dcr.tat_hz) << ',' << format_double(dcr.total_hz) << '\n';
}

}  // namespace spadsim
