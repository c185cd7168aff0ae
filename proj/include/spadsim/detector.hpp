#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spadsim/avalanche.hpp"
#include "spadsim/darkcounts.hpp"
#include "spadsim/device.hpp"
#include "spadsim/materials.hpp"

namespace spadsim {

struct OperatingPoint {
    double t_k = 240.0;
    double v_ex = 5.0;
    double wavelength_nm = 1550.0;

    void validate() const;
};

/// Efficiency multipliers outside the absorption/avalanche chain. Both default to 1.
struct DetectorOptions {
    double coupling_efficiency = 1.0;
    double injection_efficiency = 1.0;
    /// Replaces the tabulated absorber coefficient when set (cm^-1).
    std::optional<double> absorption_override_per_cm;

    void validate() const;
};

/// Everything besides the stack and operating point that a metrics evaluation depends on.
struct SimulationContext {
    MaterialDatabase materials = MaterialDatabase::builtin();
    DeviceSolverOptions device;
    AvalancheOptions avalanche;
    TunnelingParams tunneling;
    DetectorOptions detector;
};

struct DetectorMetrics {
    double pde = 0.0;
    double p_abs = 0.0;
    double p_ava = 0.0;
    double v_br = 0.0;
    DarkCountBreakdown dcr;
    DepletionStatus depletion = DepletionStatus::reached_absorption;
    std::vector<std::string> warnings;
};

/// Failure of a metrics evaluation, tagged with the error class and the operating point.
class MetricsError : public std::runtime_error {
public:
    MetricsError(std::string tag, const OperatingPoint& op, const std::string& message);

    const std::string& tag() const noexcept { return tag_; }
    const OperatingPoint& operating_point() const noexcept { return op_; }

private:
    std::string tag_;
    OperatingPoint op_;
};

/// Short machine-readable tag for a library exception ("no_breakdown", "convergence", ...).
std::string error_tag(const std::exception& e);

/// 1 - exp(-alpha L).
double absorption_efficiency(double alpha_per_cm, double l_abs_um);

/// Absorber absorption coefficient at the operating point, honouring the context override.
double absorber_alpha(const DeviceStack& stack, const OperatingPoint& op, const SimulationContext& ctx);

DetectorMetrics metrics(const DeviceStack& stack, const OperatingPoint& op, const SimulationContext& ctx = {});

/// Same as metrics() with a known breakdown voltage, so sweeps solve V_br once per (geometry, T).
DetectorMetrics metrics_with_breakdown(const DeviceStack& stack, const OperatingPoint& op, double v_br,
                                       const SimulationContext& ctx = {});

/// Excess bias at which the PDE equals target, or nullopt when unreachable below v_ex_max.
std::optional<double> excess_bias_for_pde(const DeviceStack& stack, double t_k, double wavelength_nm, double target_pde,
                                          const SimulationContext& ctx = {}, double v_ex_max = 20.0);

struct SweepSpec {
    DeviceStack base;
    std::vector<double> l_abs_um;
    std::vector<double> l_mul_um;
    std::vector<double> t_k;
    std::vector<double> v_ex;
    double wavelength_nm = 1550.0;
    /// Retune the charge layer for every (L_abs, L_mul) pair when set.
    std::optional<ChargeTuning> tuning;

    void validate() const;
    std::size_t size() const { return l_abs_um.size() * l_mul_um.size() * t_k.size() * v_ex.size(); }
};

struct SweepRow {
    double l_abs_um = 0.0;
    double l_mul_um = 0.0;
    double t_k = 0.0;
    double v_ex = 0.0;
    std::optional<DetectorMetrics> metrics;
    std::string status = "ok";  // "ok" or "error:<tag>"
    std::string message;        // error text for failed rows
};

/// Cartesian product in lexicographic (L_abs, L_mul, T, v_ex) order. Worker count 0 picks the
/// hardware concurrency; output order never depends on it.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const SimulationContext& ctx = {}, unsigned workers = 0);

/// Columns: l_abs_um, l_mul_um, t_k, v_ex_v, v_br_v, p_abs, p_ava, pde, dcr_thermal_hz,
/// dcr_btb_hz, dcr_tat_hz, dcr_total_hz, status
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

/// Evenly spaced values from start to stop inclusive (tolerant to rounding of the last step).
std::vector<double> linspace_step(double start, double stop, double step);

}  // namespace spadsim
