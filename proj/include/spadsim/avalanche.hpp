#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "spadsim/device.hpp"
#include "spadsim/materials.hpp"

namespace spadsim {

struct AvalancheOptions {
    double relaxation = 0.8;
    double tolerance = 1e-8;
    int max_iterations = 200000;
};

/// Breakdown-trigger probabilities over the avalanche region (multiplication + charge layers).
///
/// Orientation follows the device grid: x grows from the anode towards the absorber, electrons
/// drift towards +x and leave at the region's far end, holes drift towards -x and leave at the
/// anode side. Photogenerated holes therefore enter at the far end, where p_h is read out.
struct TriggerProfile {
    std::vector<double> x_um;
    std::vector<double> p_e;
    std::vector<double> p_h;
    std::vector<double> p_pair;
    std::size_t first_node = 0;  // index of x_um[0] in the FieldProfile grid
    int iterations = 0;
    double residual = 0.0;
    bool below_breakdown = false;

    std::size_t size() const { return x_um.size(); }
    /// Avalanche probability of a hole entering the region from the absorber side.
    double hole_injection_probability() const { return p_h.empty() ? 0.0 : p_h.back(); }
};

/// Solves
///   dp_e/dx = -(1 - p_e) alpha_e P,  dp_h/dx = (1 - p_h) beta_h P,  P = p_e + p_h - p_e p_h
/// with p_e = 0 where electrons leave and p_h = 0 where holes leave, by alternating sweeps
/// (p_e backwards, p_h forwards) with under-relaxation. Returns the zero profile when the
/// ionization integral does not exceed one.
TriggerProfile solve_trigger_profile(const FieldProfile& field, double t_k, const IonizationModel& model,
                                     const AvalancheOptions& options = {},
                                     double threshold_v_per_cm = 1e5);

/// Zero profile spanning the avalanche region of a field.
TriggerProfile zero_trigger_profile(const FieldProfile& field);

/// Trigger profile at V_br + v_ex with a precomputed breakdown voltage. v_ex == 0 yields the
/// zero profile.
TriggerProfile trigger_at_excess_bias(const DeviceStack& stack, double t_k, double v_br, double v_ex,
                                      const MaterialDatabase& materials, const DeviceSolverOptions& device = {},
                                      const AvalancheOptions& options = {});

double p_ava(const DeviceStack& stack, double t_k, double v_ex, const MaterialDatabase& materials,
             const DeviceSolverOptions& device = {}, const AvalancheOptions& options = {});

/// Columns: x_um, p_e, p_h, p_pair
void write_trigger_csv(std::ostream& out, const TriggerProfile& profile);

}  // namespace spadsim
