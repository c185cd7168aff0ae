#include "spadsim/figures.hpp"

#include <ostream>

#include "spadsim/csv.hpp"
#include "spadsim/errors.hpp"

namespace spadsim {

namespace {

constexpr FigureId kAll[] = {FigureId::fig2, FigureId::fig3, FigureId::fig4,
                             FigureId::fig5, FigureId::fig6, FigureId::fig7};

SweepSpec base_spec(double l_abs_um, double l_mul_um) {
    SweepSpec s;
    s.base = reference_stack(l_abs_um, l_mul_um);
    s.l_abs_um = {l_abs_um};
    s.l_mul_um = {l_mul_um};
    s.tuning = ChargeTuning{};
    return s;
}

}  // namespace

const std::vector<std::string>& figure_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto id : kAll) {
            out.emplace_back(to_string(id));
        }
        return out;
    }();
    return names;
}

std::string_view to_string(FigureId id) {
    switch (id) {
        case FigureId::fig2: return "fig2";
        case FigureId::fig3: return "fig3";
        case FigureId::fig4: return "fig4";
        case FigureId::fig5: return "fig5";
        case FigureId::fig6: return "fig6";
        case FigureId::fig7: return "fig7";
    }
    return "unknown";
}

std::optional<FigureId> parse_figure_name(std::string_view name) {
    for (const auto id : kAll) {
        if (to_string(id) == name) {
            return id;
        }
    }
    return std::nullopt;
}

bool is_key_rate_figure(FigureId id) { return id == FigureId::fig6 || id == FigureId::fig7; }

SweepSpec figure_sweep_spec(FigureId id) {
    switch (id) {
        case FigureId::fig2: {
            // DCR vs PDE for several absorber thicknesses.
            auto s = base_spec(1.8, 1.5);
            s.l_abs_um = linspace_step(0.5, 2.5, 0.5);
            s.t_k = {240.0};
            s.v_ex = linspace_step(1.0, 7.0, 0.5);
            return s;
        }
        case FigureId::fig3: {
            auto s = base_spec(1.8, 1.5);
            s.l_abs_um = linspace_step(0.5, 2.5, 0.5);
            s.t_k = linspace_step(180.0, 300.0, 5.0);
            s.v_ex = {5.0};
            return s;
        }
        case FigureId::fig4: {
            auto s = base_spec(1.8, 1.5);
            s.t_k = {180.0, 240.0};
            s.v_ex = linspace_step(1.0, 7.0, 0.5);
            return s;
        }
        case FigureId::fig5: {
            auto s = base_spec(1.8, 1.5);
            s.l_mul_um = linspace_step(0.8, 2.4, 0.4);
            s.t_k = {240.0};
            s.v_ex = linspace_step(0.5, 8.0, 0.5);
            return s;
        }
        case FigureId::fig6:
        case FigureId::fig7: break;
    }
    throw ValidationError(std::string(to_string(id)) + " is a key-rate figure, not a device sweep");
}

KeyRateFigureSpec figure_key_rate_spec(FigureId id) {
    KeyRateFigureSpec s;
    s.distances_km = linspace_step(0.0, 300.0, 2.0);
    switch (id) {
        case FigureId::fig6:
            for (const double t : {180.0, 220.0, 260.0}) {
                s.curves.push_back({t, 4.0, 1550.0});
            }
            return s;
        case FigureId::fig7:
            for (const double v : {2.0, 6.0}) {
                s.curves.push_back({220.0, v, 1550.0});
            }
            return s;
        default: break;
    }
    throw ValidationError(std::string(to_string(id)) + " is a device sweep, not a key-rate figure");
}

void write_figure_csv(std::ostream& out, FigureId id, const SimulationContext& ctx, const QkdParams& params,
                      unsigned workers) {
    if (!is_key_rate_figure(id)) {
        write_sweep_csv(out, run_sweep(figure_sweep_spec(id), ctx, workers));
        return;
    }
    const auto spec = figure_key_rate_spec(id);
    const auto stack = tune_charge_layer(reference_stack(spec.l_abs_um, spec.l_mul_um), ChargeTuning{},
                                         ctx.materials, ctx.device);
    CsvWriter csv(out, {"t_k", "v_ex_v", "pde", "dcr_total_hz", "distance_km", "rate_bps", "qber", "q_mu",
                        "y1_lower", "e1_upper"});
    for (const auto& op : spec.curves) {
        const auto m = metrics(stack, op, ctx);
        for (const auto& p : key_rate_curve(DetectorSummary::from(m, op), spec.distances_km, params)) {
            csv.row({op.t_k, op.v_ex, m.pde, m.dcr.total_hz, p.distance_km, p.rate_bps, p.qber, p.gain_signal,
                     p.y1_lower, p.e1_upper});
        }
    }
}

}  // namespace spadsim
