#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spadsim/materials.hpp"

namespace spadsim {

enum class LayerRole { contact, multiplication, charge, grading, absorption, buffer };

std::string_view to_string(LayerRole role);
LayerRole parse_layer_role(std::string_view text);

struct LayerSpec {
    LayerRole role = LayerRole::contact;
    std::string material;
    double thickness_um = 0.0;
    double doping_cm3 = 0.0;  // > 0 donors, < 0 acceptors
};

/// Layer stack ordered from the p+ anode / multiplication side towards the substrate.
struct DeviceStack {
    std::vector<LayerSpec> layers;
    double active_diameter_um = 25.0;

    double active_area_cm2() const;
    double total_thickness_um() const;
    std::optional<std::size_t> find(LayerRole role) const;
    const LayerSpec& layer(LayerRole role) const;
    DeviceStack with_thickness(LayerRole role, double thickness_um) const;
    DeviceStack with_doping(LayerRole role, double doping_cm3) const;

    /// Per-layer checks: positive thickness, known material, allowed role/material pairs.
    void validate_layers(const MaterialDatabase& materials) const;
    /// Full SAGCM check: validate_layers plus exactly one absorption and one multiplication
    /// layer in SAGCM order.
    void validate_sagcm(const MaterialDatabase& materials) const;
};

/// SAGCM stack with the default doping plan. The charge-layer doping is a placeholder until
/// tune_charge_layer sets it.
DeviceStack reference_stack(double l_abs_um = 1.8, double l_mul_um = 1.5, double diameter_um = 25.0);

enum class DepletionStatus {
    reached_absorption,         // depletion edge inside the absorption layer or beyond
    punch_through_not_reached,  // depletion stops before the absorption layer
    fully_depleted,             // field still nonzero at the back of the stack
};

std::string_view to_string(DepletionStatus status);

struct LayerExtent {
    LayerRole role;
    std::string material;
    double start_um;
    double end_um;
};

/// Depletion-approximation field on a layer-aligned grid. Heterointerfaces carry two nodes at the
/// same position, one per side, so x_um is nondecreasing and F may jump where eps_r does.
struct FieldProfile {
    std::vector<double> x_um;
    std::vector<double> field_v_per_cm;
    std::vector<std::size_t> layer_index;
    std::vector<LayerExtent> layers;
    double bias_v = 0.0;
    double depletion_edge_um = 0.0;
    DepletionStatus status = DepletionStatus::reached_absorption;

    std::size_t size() const { return x_um.size(); }
    bool punched_through() const { return status != DepletionStatus::punch_through_not_reached; }
    LayerRole role_at(std::size_t node) const { return layers[layer_index[node]].role; }
    double peak_field(LayerRole role) const;
    double depleted_thickness_um(LayerRole role) const;
    /// Trapezoidal integral of F over the grid (V).
    double integrated_voltage() const;
};

struct DeviceSolverOptions {
    double grid_spacing_um = 1e-3;
    double ionization_threshold_v_per_cm = 1e5;
    double bias_ceiling_v = 200.0;
    double breakdown_tolerance = 1e-6;
    double absorption_safety_field_v_per_cm = 1.5e5;
};

FieldProfile solve_field(const DeviceStack& stack, double bias_v, const MaterialDatabase& materials,
                         const DeviceSolverOptions& options = {});

/// Half-open node range [first, last) of the contiguous multiplication + charge block.
std::pair<std::size_t, std::size_t> avalanche_region(const FieldProfile& field);

/// Electron-initiated ionization integral over the avalanche region,
/// integral of alpha_e exp(-int_0^x (alpha_e - beta_h)) dx. Breakdown when it reaches one.
double ionization_integral(const FieldProfile& field, double t_k, const IonizationModel& model,
                           double threshold_v_per_cm = 1e5);

double breakdown_voltage(const DeviceStack& stack, double t_k, const MaterialDatabase& materials,
                         const DeviceSolverOptions& options = {});

double operating_bias(const DeviceStack& stack, double t_k, double v_ex, const MaterialDatabase& materials,
                      const DeviceSolverOptions& options = {});

/// Tuning goal for the charge-layer doping: absorption peak field at V_br + excess bias.
struct ChargeTuning {
    double reference_temperature_k = 240.0;
    double excess_bias_v = 5.0;
    double target_field_v_per_cm = 1.0e5;
};

/// Returns the stack with its charge-layer doping chosen so the absorption field at the tuning
/// operating point equals the target.
DeviceStack tune_charge_layer(const DeviceStack& stack, const ChargeTuning& tuning,
                              const MaterialDatabase& materials, const DeviceSolverOptions& options = {});

/// Design-check warnings for an operating point (not solver failures).
std::vector<std::string> design_warnings(const FieldProfile& field, const DeviceSolverOptions& options = {});

}  // namespace spadsim
