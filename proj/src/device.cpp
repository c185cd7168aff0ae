#include "spadsim/device.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "spadsim/constants.hpp"
#include "spadsim/errors.hpp"

namespace spadsim {

namespace {

constexpr double kEps0PerCm = PhysicalConstants::eps0 * 1e-2;  // F/cm

struct DepletionSolution {
    double d0 = 0.0;               // displacement at the junction (C/cm^2)
    std::size_t first_layer = 0;   // first layer after the anode contacts
    std::vector<double> d_start;   // displacement at each layer start (C/cm^2); 0 past the edge
    double edge_um = 0.0;
    bool reached_end = false;
};

std::size_t first_depleted_layer(const DeviceStack& stack) {
    std::size_t i = 0;
    while (i < stack.layers.size() && stack.layers[i].role == LayerRole::contact) {
        ++i;
    }
    if (i == stack.layers.size()) {
        throw ValidationError("stack has no layer after the anode contact");
    }
    return i;
}

// Walks the depletion region for a given junction displacement. Returns the bias (V) and fills
// the per-layer starting displacement plus the edge position when requested.
double walk_depletion(const DeviceStack& stack, const std::vector<double>& eps, std::size_t first, double d0,
                      DepletionSolution* out) {
    double d = d0;
    double v = 0.0;
    double x_um = 0.0;
    for (std::size_t i = 0; i < first; ++i) {
        x_um += stack.layers[i].thickness_um;
    }
    if (out != nullptr) {
        out->d_start.assign(stack.layers.size(), 0.0);
    }
    for (std::size_t i = first; i < stack.layers.size(); ++i) {
        const auto& layer = stack.layers[i];
        const double t = layer.thickness_um * kCmPerUm;
        const double rho = PhysicalConstants::q * layer.doping_cm3;
        if (out != nullptr) {
            out->d_start[i] = d;
        }
        const double d_end = d - rho * t;
        if (rho > 0.0 && d_end <= 0.0) {
            const double s = d / rho;
            v += (d * s - 0.5 * rho * s * s) / eps[i];
            if (out != nullptr) {
                out->edge_um = x_um + s / kCmPerUm;
                out->reached_end = false;
            }
            return v;
        }
        v += (d * t - 0.5 * rho * t * t) / eps[i];
        d = d_end;
        x_um += layer.thickness_um;
    }
    if (out != nullptr) {
        out->edge_um = x_um;
        out->reached_end = true;
    }
    return v;
}

DepletionSolution solve_depletion(const DeviceStack& stack, const std::vector<double>& eps, double bias_v) {
    const std::size_t first = first_depleted_layer(stack);
    double lo = 0.0;
    double hi = 1e-9;
    while (walk_depletion(stack, eps, first, hi, nullptr) < bias_v) {
        hi *= 2.0;
        if (hi > 1.0) {
            throw ValidationError("field solver could not bracket the junction field");
        }
    }
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (walk_depletion(stack, eps, first, mid, nullptr) < bias_v) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    DepletionSolution sol;
    sol.first_layer = first;
    sol.d0 = 0.5 * (lo + hi);
    walk_depletion(stack, eps, first, sol.d0, &sol);
    return sol;
}

int role_rank(LayerRole role) {
    switch (role) {
        case LayerRole::contact: return 0;
        case LayerRole::multiplication: return 1;
        case LayerRole::charge: return 2;
        case LayerRole::grading: return 3;
        case LayerRole::absorption: return 4;
        case LayerRole::buffer: return 5;
    }
    return -1;
}

}  // namespace

std::string_view to_string(LayerRole role) {
    switch (role) {
        case LayerRole::contact: return "contact";
        case LayerRole::multiplication: return "multiplication";
        case LayerRole::charge: return "charge";
        case LayerRole::grading: return "grading";
        case LayerRole::absorption: return "absorption";
        case LayerRole::buffer: return "buffer";
    }
    return "unknown";
}

LayerRole parse_layer_role(std::string_view text) {
    for (const auto role : {LayerRole::contact, LayerRole::multiplication, LayerRole::charge, LayerRole::grading,
                            LayerRole::absorption, LayerRole::buffer}) {
        if (to_string(role) == text) {
            return role;
        }
    }
    throw ValidationError("unknown layer role '" + std::string(text) + "'");
}

std::string_view to_string(DepletionStatus status) {
    switch (status) {
        case DepletionStatus::reached_absorption: return "reached_absorption";
        case DepletionStatus::punch_through_not_reached: return "punch_through_not_reached";
        case DepletionStatus::fully_depleted: return "fully_depleted";
    }
    return "unknown";
}

double DeviceStack::active_area_cm2() const {
    const double r = 0.5 * active_diameter_um * kCmPerUm;
    return PhysicalConstants::pi * r * r;
}

double DeviceStack::total_thickness_um() const {
    double t = 0.0;
    for (const auto& l : layers) {
        t += l.thickness_um;
    }
    return t;
}

std::optional<std::size_t> DeviceStack::find(LayerRole role) const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].role == role) {
            return i;
        }
    }
    return std::nullopt;
}

const LayerSpec& DeviceStack::layer(LayerRole role) const {
    const auto i = find(role);
    if (!i) {
        throw ValidationError("stack has no " + std::string(to_string(role)) + " layer");
    }
    return layers[*i];
}

DeviceStack DeviceStack::with_thickness(LayerRole role, double thickness_um) const {
    DeviceStack out = *this;
    const auto i = find(role);
    if (!i) {
        throw ValidationError("stack has no " + std::string(to_string(role)) + " layer");
    }
    out.layers[*i].thickness_um = thickness_um;
    return out;
}

DeviceStack DeviceStack::with_doping(LayerRole role, double doping_cm3) const {
    DeviceStack out = *this;
    const auto i = find(role);
    if (!i) {
        throw ValidationError("stack has no " + std::string(to_string(role)) + " layer");
    }
    out.layers[*i].doping_cm3 = doping_cm3;
    return out;
}

void DeviceStack::validate_layers(const MaterialDatabase& materials) const {
    if (layers.empty()) {
        throw ValidationError("stack has no layers");
    }
    if (!(active_diameter_um > 0.0)) {
        throw ValidationError("active diameter must be positive");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        const std::string where = "layer " + std::to_string(i) + " (" + std::string(to_string(l.role)) + ")";
        if (!(l.thickness_um > 0.0)) {
            throw ValidationError(where + ": thickness must be positive");
        }
        if (!std::isfinite(l.doping_cm3)) {
            throw ValidationError(where + ": doping must be finite");
        }
        if (!materials.contains(l.material)) {
            throw ValidationError(where + ": unknown material '" + l.material + "'");
        }
        const auto require = [&](const char* expected) {
            if (l.material != expected) {
                throw ValidationError(where + ": must be " + expected + ", got " + l.material);
            }
        };
        switch (l.role) {
            case LayerRole::absorption: require("InGaAs"); break;
            case LayerRole::multiplication:
            case LayerRole::charge: require("InP"); break;
            case LayerRole::grading: require("InGaAsP"); break;
            case LayerRole::contact:
            case LayerRole::buffer: break;
        }
    }
}

void DeviceStack::validate_sagcm(const MaterialDatabase& materials) const {
    validate_layers(materials);
    const auto count = [&](LayerRole role) {
        return std::count_if(layers.begin(), layers.end(), [&](const LayerSpec& l) { return l.role == role; });
    };
    if (count(LayerRole::absorption) != 1 || count(LayerRole::multiplication) != 1) {
        throw ValidationError("SAGCM stack needs exactly one absorption and one multiplication layer");
    }
    if (count(LayerRole::charge) > 1) {
        throw ValidationError("SAGCM stack allows at most one charge layer");
    }
    // Contacts may only sit at either end; everything between follows the SAGCM order.
    std::size_t lo = 0;
    std::size_t hi = layers.size();
    while (lo < hi && layers[lo].role == LayerRole::contact) {
        ++lo;
    }
    while (hi > lo && layers[hi - 1].role == LayerRole::contact) {
        --hi;
    }
    int rank = 0;
    for (std::size_t i = lo; i < hi; ++i) {
        const int r = role_rank(layers[i].role);
        if (r == 0 || r < rank) {
            throw ValidationError("layer " + std::to_string(i) + " (" + std::string(to_string(layers[i].role)) +
                                  ") breaks the multiplication/charge/grading/absorption/buffer order");
        }
        rank = r;
    }
}

DeviceStack reference_stack(double l_abs_um, double l_mul_um, double diameter_um) {
    DeviceStack s;
    s.active_diameter_um = diameter_um;
    s.layers = {
        {LayerRole::contact, "InP", 0.3, -1e19},
        {LayerRole::multiplication, "InP", l_mul_um, 1e15},
        {LayerRole::charge, "InP", 0.2, 9e16},
        {LayerRole::grading, "InGaAsP", 0.1, 1e16},
        {LayerRole::absorption, "InGaAs", l_abs_um, 1e15},
        {LayerRole::buffer, "InP", 0.5, 1e18},
    };
    return s;
}

double FieldProfile::peak_field(LayerRole role) const {
    double peak = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
        if (role_at(i) == role) {
            peak = std::max(peak, field_v_per_cm[i]);
        }
    }
    return peak;
}

double FieldProfile::depleted_thickness_um(LayerRole role) const {
    double total = 0.0;
    for (const auto& l : layers) {
        if (l.role == role) {
            total += std::max(0.0, std::min(depletion_edge_um, l.end_um) - l.start_um);
        }
    }
    return total;
}

double FieldProfile::integrated_voltage() const {
    double v = 0.0;
    for (std::size_t i = 1; i < size(); ++i) {
        v += 0.5 * (field_v_per_cm[i - 1] + field_v_per_cm[i]) * (x_um[i] - x_um[i - 1]) * kCmPerUm;
    }
    return v;
}

FieldProfile solve_field(const DeviceStack& stack, double bias_v, const MaterialDatabase& materials,
                         const DeviceSolverOptions& options) {
    if (!(bias_v > 0.0)) {
        throw DomainError("bias must be positive");
    }
    if (!(options.grid_spacing_um > 0.0)) {
        throw ValidationError("grid spacing must be positive");
    }
    stack.validate_layers(materials);

    std::vector<double> eps;
    eps.reserve(stack.layers.size());
    for (const auto& l : stack.layers) {
        eps.push_back(materials.get(l.material).eps_r * kEps0PerCm);
    }
    const DepletionSolution dep = solve_depletion(stack, eps, bias_v);

    FieldProfile out;
    out.bias_v = bias_v;
    out.depletion_edge_um = dep.edge_um;

    double x0 = 0.0;
    for (std::size_t k = 0; k < stack.layers.size(); ++k) {
        const auto& l = stack.layers[k];
        out.layers.push_back({l.role, l.material, x0, x0 + l.thickness_um});
        const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(l.thickness_um / options.grid_spacing_um - 1e-9)));
        const bool depleted = k >= dep.first_layer && x0 < dep.edge_um;
        const double rho = PhysicalConstants::q * l.doping_cm3;
        const auto field_at = [&](double s_um) {
            if (!depleted || x0 + s_um > dep.edge_um) {
                return 0.0;
            }
            return std::max(0.0, dep.d_start[k] - rho * s_um * kCmPerUm) / eps[k];
        };
        const double edge_local = dep.edge_um - x0;
        for (std::size_t j = 0; j <= n; ++j) {
            const double s = l.thickness_um * static_cast<double>(j) / static_cast<double>(n);
            if (j > 0 && depleted && !dep.reached_end) {
                const double s_prev = l.thickness_um * static_cast<double>(j - 1) / static_cast<double>(n);
                if (edge_local > s_prev && edge_local < s) {
                    out.x_um.push_back(x0 + edge_local);
                    out.field_v_per_cm.push_back(0.0);
                    out.layer_index.push_back(k);
                }
            }
            out.x_um.push_back(x0 + s);
            out.field_v_per_cm.push_back(field_at(s));
            out.layer_index.push_back(k);
        }
        x0 += l.thickness_um;
    }

    if (dep.reached_end) {
        out.status = DepletionStatus::fully_depleted;
    } else if (const auto abs = stack.find(LayerRole::absorption); abs && dep.edge_um <= out.layers[*abs].start_um) {
        out.status = DepletionStatus::punch_through_not_reached;
    } else {
        out.status = DepletionStatus::reached_absorption;
    }
    return out;
}

std::pair<std::size_t, std::size_t> avalanche_region(const FieldProfile& field) {
    std::size_t first = 0;
    while (first < field.size() && field.role_at(first) != LayerRole::multiplication) {
        ++first;
    }
    if (first == field.size()) {
        throw ValidationError("field profile has no multiplication layer");
    }
    std::size_t last = first;
    while (last < field.size() &&
           (field.role_at(last) == LayerRole::multiplication || field.role_at(last) == LayerRole::charge)) {
        ++last;
    }
    return {first, last};
}

double ionization_integral(const FieldProfile& field, double t_k, const IonizationModel& model,
                           double threshold_v_per_cm) {
    const auto [first, last] = avalanche_region(field);
    double g = 0.0;
    double integral = 0.0;
    double prev_d = 0.0;
    double prev_y = 0.0;
    for (std::size_t i = first; i < last; ++i) {
        const double f = field.field_v_per_cm[i];
        const auto c = f >= threshold_v_per_cm ? ionization_coefficients(model, f, t_k) : IonizationCoefficients{};
        const double d = c.alpha_e - c.beta_h;
        if (i > first) {
            const double h = (field.x_um[i] - field.x_um[i - 1]) * kCmPerUm;
            g += 0.5 * h * (prev_d + d);
            const double y = c.alpha_e * std::exp(-g);
            integral += 0.5 * h * (prev_y + y);
            prev_y = y;
        } else {
            prev_y = c.alpha_e;
        }
        prev_d = d;
    }
    return integral;
}

double breakdown_voltage(const DeviceStack& stack, double t_k, const MaterialDatabase& materials,
                         const DeviceSolverOptions& options) {
    check_temperature(t_k);
    stack.validate_layers(materials);
    const auto& model = materials.ionization(stack.layer(LayerRole::multiplication).material);
    const auto integral_at = [&](double v) {
        return ionization_integral(solve_field(stack, v, materials, options), t_k, model,
                                   options.ionization_threshold_v_per_cm);
    };

    double lo = 0.0;
    double hi = options.bias_ceiling_v;
    const double top = integral_at(hi);
    if (top < 1.0) {
        throw NoBreakdownError(hi, top);
    }
    double residual = top - 1.0;
    // Bisection: the integral is monotone in bias but strongly convex, which stalls regula falsi.
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double value = integral_at(mid);
        residual = value - 1.0;
        if (std::abs(residual) < options.breakdown_tolerance) {
            return mid;
        }
        (residual < 0.0 ? lo : hi) = mid;
    }
    throw ConvergenceError("breakdown bisection", residual, 200);
}

double operating_bias(const DeviceStack& stack, double t_k, double v_ex, const MaterialDatabase& materials,
                      const DeviceSolverOptions& options) {
    if (!(v_ex >= 0.0)) {
        throw DomainError("excess bias must be nonnegative");
    }
    return breakdown_voltage(stack, t_k, materials, options) + v_ex;
}

DeviceStack tune_charge_layer(const DeviceStack& stack, const ChargeTuning& tuning, const MaterialDatabase& materials,
                              const DeviceSolverOptions& options) {
    if (!stack.find(LayerRole::charge)) {
        throw ValidationError("charge tuning needs a charge layer");
    }
    if (!stack.find(LayerRole::absorption)) {
        throw ValidationError("charge tuning needs an absorption layer");
    }
    // Absorption peak field at the tuning point; +inf when no breakdown exists (too little charge).
    const auto absorption_field = [&](double doping) {
        const auto trial = stack.with_doping(LayerRole::charge, doping);
        try {
            const double v = operating_bias(trial, tuning.reference_temperature_k, tuning.excess_bias_v, materials,
                                            options);
            return solve_field(trial, v, materials, options).peak_field(LayerRole::absorption);
        } catch (const NoBreakdownError&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    double lo = 0.0;
    double hi = 1e17;
    while (absorption_field(hi) > tuning.target_field_v_per_cm) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e20) {
            throw ValidationError("charge tuning could not bracket the target absorption field");
        }
    }
    for (int it = 0; it < 60 && hi - lo > 1e-9 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (absorption_field(mid) > tuning.target_field_v_per_cm) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return stack.with_doping(LayerRole::charge, 0.5 * (lo + hi));
}

std::vector<std::string> design_warnings(const FieldProfile& field, const DeviceSolverOptions& options) {
    std::vector<std::string> out;
    if (!field.punched_through()) {
        out.emplace_back("punch-through not reached: depletion edge at " + std::to_string(field.depletion_edge_um) +
                         " um does not reach the absorption layer");
    }
    const double fa = field.peak_field(LayerRole::absorption);
    if (fa > options.absorption_safety_field_v_per_cm) {
        std::ostringstream msg;
        msg << "absorption field " << fa << " V/cm exceeds the tunneling-safety threshold "
            << options.absorption_safety_field_v_per_cm << " V/cm";
        out.push_back(msg.str());
    }
    return out;
}

}  // namespace spadsim
