#include "spadsim/avalanche.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "spadsim/constants.hpp"
#include "spadsim/csv.hpp"
#include "spadsim/errors.hpp"

namespace spadsim {

namespace {

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

double pair_probability(double pe, double ph) { return pe + ph - pe * ph; }

}  // namespace

TriggerProfile zero_trigger_profile(const FieldProfile& field) {
    const auto [first, last] = avalanche_region(field);
    TriggerProfile out;
    out.first_node = first;
    out.x_um.assign(field.x_um.begin() + static_cast<std::ptrdiff_t>(first),
                    field.x_um.begin() + static_cast<std::ptrdiff_t>(last));
    out.p_e.assign(out.size(), 0.0);
    out.p_h.assign(out.size(), 0.0);
    out.p_pair.assign(out.size(), 0.0);
    out.below_breakdown = true;
    return out;
}

TriggerProfile solve_trigger_profile(const FieldProfile& field, double t_k, const IonizationModel& model,
                                     const AvalancheOptions& options, double threshold_v_per_cm) {
    if (!(options.relaxation > 0.0 && options.relaxation <= 1.0)) {
        throw ValidationError("relaxation factor must lie in (0, 1]");
    }
    TriggerProfile out = zero_trigger_profile(field);
    if (ionization_integral(field, t_k, model, threshold_v_per_cm) <= 1.0) {
        return out;
    }
    out.below_breakdown = false;

    const std::size_t n = out.size();
    std::vector<double> alpha(n);
    std::vector<double> beta(n);
    std::vector<double> h(n, 0.0);  // h[i] = x[i] - x[i-1] in cm
    for (std::size_t i = 0; i < n; ++i) {
        const double f = field.field_v_per_cm[out.first_node + i];
        const auto c = f >= threshold_v_per_cm ? ionization_coefficients(model, f, t_k) : IonizationCoefficients{};
        alpha[i] = c.alpha_e;
        beta[i] = c.beta_h;
        if (i > 0) {
            h[i] = (out.x_um[i] - out.x_um[i - 1]) * kCmPerUm;
        }
    }

    auto& pe = out.p_e;
    auto& ph = out.p_h;
    std::fill(pe.begin(), pe.end(), 1.0);
    std::fill(ph.begin(), ph.end(), 1.0);
    pe.back() = 0.0;
    ph.front() = 0.0;
    std::vector<double> next(n);
    const double w = options.relaxation;

    const auto fe = [&](double p, std::size_t j) { return -(1.0 - p) * alpha[j] * pair_probability(p, ph[j]); };
    const auto fh = [&](double p, std::size_t j) { return (1.0 - p) * beta[j] * pair_probability(pe[j], p); };

    for (int it = 1; it <= options.max_iterations; ++it) {
        double change = 0.0;

        // Electrons leave at the far end; integrate p_e backwards with Heun steps.
        next[n - 1] = 0.0;
        for (std::size_t i = n - 1; i > 0; --i) {
            const double k1 = fe(next[i], i);
            const double pred = clamp01(next[i] - h[i] * k1);
            const double k2 = fe(pred, i - 1);
            next[i - 1] = clamp01(next[i] - 0.5 * h[i] * (k1 + k2));
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double v = (1.0 - w) * pe[i] + w * next[i];
            change = std::max(change, std::abs(v - pe[i]));
            pe[i] = v;
        }

        // Holes leave at the anode side; integrate p_h forwards.
        next[0] = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double k1 = fh(next[i], i);
            const double pred = clamp01(next[i] + h[i + 1] * k1);
            const double k2 = fh(pred, i + 1);
            next[i + 1] = clamp01(next[i] + 0.5 * h[i + 1] * (k1 + k2));
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double v = (1.0 - w) * ph[i] + w * next[i];
            change = std::max(change, std::abs(v - ph[i]));
            ph[i] = v;
        }

        out.iterations = it;
        out.residual = change;
        if (change < options.tolerance) {
            for (std::size_t i = 0; i < n; ++i) {
                out.p_pair[i] = pair_probability(pe[i], ph[i]);
            }
            return out;
        }
    }
    throw ConvergenceError("avalanche trigger iteration", out.residual, options.max_iterations);
}

TriggerProfile trigger_at_excess_bias(const DeviceStack& stack, double t_k, double v_br, double v_ex,
                                      const MaterialDatabase& materials, const DeviceSolverOptions& device,
                                      const AvalancheOptions& options) {
    if (!(v_ex >= 0.0)) {
        throw DomainError("excess bias must be nonnegative");
    }
    const auto field = solve_field(stack, v_br + v_ex, materials, device);
    if (v_ex == 0.0) {
        return zero_trigger_profile(field);
    }
    const auto& model = materials.ionization(stack.layer(LayerRole::multiplication).material);
    return solve_trigger_profile(field, t_k, model, options, device.ionization_threshold_v_per_cm);
}

double p_ava(const DeviceStack& stack, double t_k, double v_ex, const MaterialDatabase& materials,
             const DeviceSolverOptions& device, const AvalancheOptions& options) {
    if (!(v_ex >= 0.0)) {
        throw DomainError("excess bias must be nonnegative");
    }
    const double v_br = breakdown_voltage(stack, t_k, materials, device);
    return trigger_at_excess_bias(stack, t_k, v_br, v_ex, materials, device, options).hole_injection_probability();
}

void write_trigger_csv(std::ostream& out, const TriggerProfile& profile) {
    CsvWriter csv(out, {"x_um", "p_e", "p_h", "p_pair"});
    for (std::size_t i = 0; i < profile.size(); ++i) {
        csv.row({profile.x_um[i], profile.p_e[i], profile.p_h[i], profile.p_pair[i]});
    }
}

}  // namespace spadsim
