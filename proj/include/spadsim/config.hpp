#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spadsim/detector.hpp"
#include "spadsim/qkd.hpp"

namespace spadsim {

/// A stack read from a stack file. `auto_charge` is set when the charge layer says `doping_cm3: auto`.
struct StackFile {
    DeviceStack stack;
    bool auto_charge = false;
};

StackFile parse_stack_yaml(std::string_view text, const MaterialDatabase& materials,
                           const std::string& source = "<string>");
/// Throws ConfigError("stack file not found: ...") when the file is missing.
StackFile load_stack_file(const std::filesystem::path& path, const MaterialDatabase& materials);

/// Normalized YAML echo of a stack (fixed key order, round-trip numbers).
std::string stack_to_yaml(const DeviceStack& stack);

enum class OutputFormat { csv, json };

OutputFormat parse_output_format(std::string_view text);

struct SweepAxes {
    std::vector<double> l_abs_um;  // empty: take the stack's value
    std::vector<double> l_mul_um;
    std::vector<double> t_k;
    std::vector<double> v_ex;
};

struct RunConfig {
    std::filesystem::path stack_file;      // empty: builtin reference stack
    std::filesystem::path materials_file;  // empty: SPADSIM_MATERIALS or builtin
    StackFile stack;
    ChargeTuning tuning;
    SimulationContext context;
    OperatingPoint operating;
    std::optional<double> field_bias_v;    // field subcommand; default V_br + v_ex
    SweepAxes sweep;
    QkdParams qkd;
    std::vector<double> distances_km;
    double optimize_distance_km = 20.0;
    SweepAxes search;
    std::filesystem::path output_dir;      // empty: standard output
    OutputFormat format = OutputFormat::csv;
    unsigned workers = 0;

    /// Stack with the charge layer tuned when the stack file asked for it.
    DeviceStack resolved_stack() const;
    /// Sweep spec over the configured axes, falling back to the stack's thicknesses and the
    /// operating point for empty axes.
    SweepSpec sweep_spec() const;
    DesignSearchSpace search_space() const;
};

/// Built-in defaults: reference stack with an auto-tuned charge layer, 240 K, 5 V, 1550 nm.
RunConfig default_run_config();

/// Reads a run config. Relative paths resolve against the config file's directory.
/// `materials_override` wins over the config and the environment.
RunConfig load_run_config(const std::filesystem::path& path, const std::filesystem::path& materials_override = {});
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir,
                           const std::filesystem::path& materials_override = {},
                           const std::string& source = "<string>");

}  // namespace spadsim
