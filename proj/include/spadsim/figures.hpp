#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spadsim/detector.hpp"
#include "spadsim/qkd.hpp"

namespace spadsim {

enum class FigureId { fig2, fig3, fig4, fig5, fig6, fig7 };

const std::vector<std::string>& figure_names();
std::optional<FigureId> parse_figure_name(std::string_view name);
std::string_view to_string(FigureId id);

/// Device-sweep figures (fig2 to fig5): the sweep behind the figure.
SweepSpec figure_sweep_spec(FigureId id);

/// Key-rate figures (fig6, fig7): one curve per operating point on a shared geometry.
struct KeyRateFigureSpec {
    double l_abs_um = 1.8;
    double l_mul_um = 1.6;
    std::vector<OperatingPoint> curves;
    std::vector<double> distances_km;
};

KeyRateFigureSpec figure_key_rate_spec(FigureId id);

bool is_key_rate_figure(FigureId id);

/// Writes the CSV for one figure. Sweep figures use the detector sweep schema; key-rate
/// figures prefix the key-rate schema with t_k, v_ex_v, pde, dcr_total_hz.
void write_figure_csv(std::ostream& out, FigureId id, const SimulationContext& ctx = {},
                      const QkdParams& params = {}, unsigned workers = 0);

}  // namespace spadsim
