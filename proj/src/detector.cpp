#include "spadsim/detector.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <ostream>
#include <sstream>
#include <thread>

#include "spadsim/constants.hpp"
#include "spadsim/csv.hpp"
#include "spadsim/errors.hpp"

namespace spadsim {

namespace {

std::string describe(const OperatingPoint& op) {
    std::ostringstream s;
    s << "T=" << op.t_k << " K, v_ex=" << op.v_ex << " V, lambda=" << op.wavelength_nm << " nm";
    return s.str();
}

double p_c_p_inj(const SimulationContext& ctx) {
    return ctx.detector.coupling_efficiency * ctx.detector.injection_efficiency;
}

// Runs fn(i) for i in [0, n) on up to `workers` threads; the first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
    if (workers == 0) {
        workers = std::max(1u, std::thread::hardware_concurrency());
    }
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n && !failed; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

}  // namespace

void OperatingPoint::validate() const {
    check_temperature(t_k);
    if (!(v_ex >= 0.0) || !std::isfinite(v_ex)) {
        throw DomainError("excess bias must be finite and nonnegative");
    }
    if (!(wavelength_nm >= kMinWavelengthNm && wavelength_nm <= kMaxWavelengthNm)) {
        throw DomainError("wavelength outside [1000, 1700] nm");
    }
}

void DetectorOptions::validate() const {
    for (const double p : {coupling_efficiency, injection_efficiency}) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw ValidationError("coupling and injection efficiencies must lie in [0, 1]");
        }
    }
    if (absorption_override_per_cm && !(*absorption_override_per_cm >= 0.0)) {
        throw ValidationError("absorption override must be nonnegative");
    }
}

MetricsError::MetricsError(std::string tag, const OperatingPoint& op, const std::string& message)
    : std::runtime_error(describe(op) + ": " + message), tag_(std::move(tag)), op_(op) {}

std::string error_tag(const std::exception& e) {
    if (const auto* m = dynamic_cast<const MetricsError*>(&e)) {
        return m->tag();
    }
    if (dynamic_cast<const NoBreakdownError*>(&e) != nullptr) {
        return "no_breakdown";
    }
    if (dynamic_cast<const ConvergenceError*>(&e) != nullptr) {
        return "convergence";
    }
    if (dynamic_cast<const DomainError*>(&e) != nullptr) {
        return "domain";
    }
    if (dynamic_cast<const ValidationError*>(&e) != nullptr) {
        return "validation";
    }
    if (dynamic_cast<const ConfigError*>(&e) != nullptr) {
        return "config";
    }
    return "internal";
}

double absorption_efficiency(double alpha_per_cm, double l_abs_um) {
    if (!(alpha_per_cm >= 0.0)) {
        throw DomainError("absorption coefficient must be nonnegative");
    }
    if (!(l_abs_um > 0.0)) {
        throw DomainError("absorption thickness must be positive");
    }
    return -std::expm1(-alpha_per_cm * l_abs_um * kCmPerUm);
}

double absorber_alpha(const DeviceStack& stack, const OperatingPoint& op, const SimulationContext& ctx) {
    if (ctx.detector.absorption_override_per_cm) {
        return *ctx.detector.absorption_override_per_cm;
    }
    const auto& absorber = ctx.materials.get(stack.layer(LayerRole::absorption).material);
    return absorption_coefficient(absorber, op.wavelength_nm, op.t_k);
}

DetectorMetrics metrics_with_breakdown(const DeviceStack& stack, const OperatingPoint& op, double v_br,
                                       const SimulationContext& ctx) {
    try {
        op.validate();
        ctx.detector.validate();
        const auto field = solve_field(stack, v_br + op.v_ex, ctx.materials, ctx.device);
        const auto trigger =
            trigger_at_excess_bias(stack, op.t_k, v_br, op.v_ex, ctx.materials, ctx.device, ctx.avalanche);
        DetectorMetrics m;
        m.v_br = v_br;
        m.depletion = field.status;
        m.p_abs = absorption_efficiency(absorber_alpha(stack, op, ctx), stack.layer(LayerRole::absorption).thickness_um);
        m.p_ava = trigger.hole_injection_probability();
        m.pde = p_c_p_inj(ctx) * m.p_abs * m.p_ava;
        const auto tun = tunneling_dcr(stack, op.t_k, field, trigger, ctx.tunneling, ctx.materials);
        m.dcr = DarkCountBreakdown::from_components(
            thermal_dcr(stack, op.t_k, trigger, field, ctx.tunneling, ctx.materials), tun.btb_hz, tun.tat_hz);
        m.warnings = design_warnings(field, ctx.device);
        return m;
    } catch (const MetricsError&) {
        throw;
    } catch (const std::exception& e) {
        throw MetricsError(error_tag(e), op, e.what());
    }
}

DetectorMetrics metrics(const DeviceStack& stack, const OperatingPoint& op, const SimulationContext& ctx) {
    double v_br = 0.0;
    try {
        op.validate();
        v_br = breakdown_voltage(stack, op.t_k, ctx.materials, ctx.device);
    } catch (const std::exception& e) {
        throw MetricsError(error_tag(e), op, e.what());
    }
    return metrics_with_breakdown(stack, op, v_br, ctx);
}

std::optional<double> excess_bias_for_pde(const DeviceStack& stack, double t_k, double wavelength_nm, double target_pde,
                                          const SimulationContext& ctx, double v_ex_max) {
    if (!(target_pde > 0.0 && target_pde < 1.0)) {
        throw DomainError("target PDE must lie in (0, 1)");
    }
    const OperatingPoint probe{t_k, 0.0, wavelength_nm};
    probe.validate();
    const double v_br = breakdown_voltage(stack, t_k, ctx.materials, ctx.device);
    const double scale = p_c_p_inj(ctx) *
                         absorption_efficiency(absorber_alpha(stack, probe, ctx),
                                               stack.layer(LayerRole::absorption).thickness_um);
    const auto pde_at = [&](double v) {
        return scale * trigger_at_excess_bias(stack, t_k, v_br, v, ctx.materials, ctx.device, ctx.avalanche)
                           .hole_injection_probability();
    };
    if (pde_at(v_ex_max) < target_pde) {
        return std::nullopt;
    }
    double lo = 0.0;
    double hi = v_ex_max;
    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        (pde_at(mid) < target_pde ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

void SweepSpec::validate() const {
    const auto check_axis = [](const std::vector<double>& axis, const char* name, auto&& ok) {
        if (axis.empty()) {
            throw ValidationError(std::string("sweep axis '") + name + "' is empty");
        }
        for (const double v : axis) {
            if (!ok(v)) {
                throw ValidationError(std::string("sweep axis '") + name + "' has an out-of-range value " +
                                      format_double(v));
            }
        }
    };
    const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    check_axis(l_abs_um, "l_abs_um", positive);
    check_axis(l_mul_um, "l_mul_um", positive);
    check_axis(t_k, "t_k", [](double v) { return v >= kMinTemperatureK && v <= kMaxTemperatureK; });
    check_axis(v_ex, "v_ex", [](double v) { return v >= 0.0 && std::isfinite(v); });
    if (!(wavelength_nm >= kMinWavelengthNm && wavelength_nm <= kMaxWavelengthNm)) {
        throw ValidationError("sweep wavelength outside [1000, 1700] nm");
    }
    if (!base.find(LayerRole::absorption) || !base.find(LayerRole::multiplication)) {
        throw ValidationError("sweep base stack needs absorption and multiplication layers");
    }
    if (tuning && !base.find(LayerRole::charge)) {
        throw ValidationError("charge tuning requested but the base stack has no charge layer");
    }
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const SimulationContext& ctx, unsigned workers) {
    spec.validate();
    spec.base.validate_sagcm(ctx.materials);
    ctx.detector.validate();

    const std::size_t n_mul = spec.l_mul_um.size();
    const std::size_t n_t = spec.t_k.size();
    const std::size_t n_v = spec.v_ex.size();
    const std::size_t n_geom = spec.l_abs_um.size() * n_mul;

    std::vector<SweepRow> rows(spec.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::size_t r = i;
        const std::size_t iv = r % n_v;
        r /= n_v;
        const std::size_t it = r % n_t;
        r /= n_t;
        const std::size_t im = r % n_mul;
        const std::size_t ia = r / n_mul;
        rows[i].l_abs_um = spec.l_abs_um[ia];
        rows[i].l_mul_um = spec.l_mul_um[im];
        rows[i].t_k = spec.t_k[it];
        rows[i].v_ex = spec.v_ex[iv];
    }
    const auto mark_failed = [&](std::size_t first, std::size_t count, const std::exception& e) {
        for (std::size_t i = first; i < first + count; ++i) {
            rows[i].metrics.reset();
            rows[i].status = "error:" + error_tag(e);
            rows[i].message = e.what();
        }
    };

    // Geometry stage: thicknesses and, when requested, the charge-layer tuning.
    std::vector<std::optional<DeviceStack>> stacks(n_geom);
    parallel_for(n_geom, workers, [&](std::size_t g) {
        const std::size_t rows_per_geom = n_t * n_v;
        try {
            auto stack = spec.base.with_thickness(LayerRole::absorption, spec.l_abs_um[g / n_mul])
                             .with_thickness(LayerRole::multiplication, spec.l_mul_um[g % n_mul]);
            if (spec.tuning) {
                stack = tune_charge_layer(stack, *spec.tuning, ctx.materials, ctx.device);
            }
            stacks[g] = std::move(stack);
        } catch (const std::exception& e) {
            mark_failed(g * rows_per_geom, rows_per_geom, e);
        }
    });

    // Operating-point stage: one breakdown solve per (geometry, T), then every v_ex.
    parallel_for(n_geom * n_t, workers, [&](std::size_t task) {
        const std::size_t g = task / n_t;
        if (!stacks[g]) {
            return;
        }
        const std::size_t first = task * n_v;
        const double t_k = spec.t_k[task % n_t];
        double v_br = 0.0;
        try {
            v_br = breakdown_voltage(*stacks[g], t_k, ctx.materials, ctx.device);
        } catch (const std::exception& e) {
            mark_failed(first, n_v, e);
            return;
        }
        for (std::size_t k = 0; k < n_v; ++k) {
            try {
                rows[first + k].metrics =
                    metrics_with_breakdown(*stacks[g], {t_k, spec.v_ex[k], spec.wavelength_nm}, v_br, ctx);
            } catch (const std::exception& e) {
                mark_failed(first + k, 1, e);
            }
        }
    });
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    CsvWriter csv(out, {"l_abs_um", "l_mul_um", "t_k", "v_ex_v", "v_br_v", "p_abs", "p_ava", "pde", "dcr_thermal_hz",
                        "dcr_btb_hz", "dcr_tat_hz", "dcr_total_hz", "status"});
    for (const auto& r : rows) {
        std::vector<std::string> cells{format_double(r.l_abs_um), format_double(r.l_mul_um), format_double(r.t_k),
                                       format_double(r.v_ex)};
        if (r.metrics) {
            const auto& m = *r.metrics;
            for (const double v : {m.v_br, m.p_abs, m.p_ava, m.pde, m.dcr.thermal_hz, m.dcr.btb_hz, m.dcr.tat_hz,
                                   m.dcr.total_hz}) {
                cells.push_back(format_double(v));
            }
        } else {
            cells.insert(cells.end(), 8, "nan");
        }
        cells.push_back(r.status);
        csv.row(cells);
    }
}

std::vector<double> linspace_step(double start, double stop, double step) {
    if (!(step > 0.0) || !(stop >= start)) {
        throw ValidationError("range needs step > 0 and stop >= start");
    }
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
    std::vector<double> out;
    out.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        // Round off accumulated step error so 0.8 + 3 * 0.4 prints as 2.
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.12g", start + static_cast<double>(i) * step);
        out.push_back(std::strtod(buf, nullptr));
    }
    return out;
}

}  // namespace spadsim
