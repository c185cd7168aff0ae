// spadsim command-line front end.
//
// Exit codes: 0 success, 1 solver failure, 2 usage or configuration error.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "spadsim/avalanche.hpp"
#include "spadsim/config.hpp"
#include "spadsim/csv.hpp"
#include "spadsim/darkcounts.hpp"
#include "spadsim/errors.hpp"
#include "spadsim/figures.hpp"
#include "spadsim/oracle/montecarlo.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace spadsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSolver = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config;
    std::string out_dir;
    std::string format;
    std::string materials;
    double grid_nm = 0.0;
    std::uint64_t seed = 1;
    unsigned workers = 0;
};

void report_error(const std::string& kind, const std::string& message) {
    std::cerr << json{{"error", message}, {"kind", kind}}.dump() << '\n';
}

void report_warning(const std::string& message) { std::cerr << json{{"warning", message}}.dump() << '\n'; }

RunConfig build_config(const Options& opt) {
    RunConfig cfg;
    if (!opt.config.empty()) {
        cfg = load_run_config(opt.config, opt.materials);
    } else {
        cfg = default_run_config();
        if (!opt.materials.empty()) {
            cfg.context.materials = MaterialDatabase::from_file(opt.materials);
            cfg.materials_file = opt.materials;
        }
    }
    if (opt.grid_nm != 0.0) {
        if (!(opt.grid_nm > 0.0)) {
            throw UsageError("--grid-nm must be positive");
        }
        cfg.context.device.grid_spacing_um = opt.grid_nm * 1e-3;
    }
    if (!opt.format.empty()) {
        cfg.format = parse_output_format(opt.format);
    }
    if (!opt.out_dir.empty()) {
        cfg.output_dir = opt.out_dir;
    }
    if (opt.workers != 0) {
        cfg.workers = opt.workers;
    }
    return cfg;
}

// Sends the text produced by `write` to <out_dir>/<name>.<ext>, or to stdout without an output directory.
void emit(const RunConfig& cfg, const std::string& name, const std::string& ext,
          const std::function<void(std::ostream&)>& write) {
    if (cfg.output_dir.empty()) {
        write(std::cout);
        std::cout.flush();
        return;
    }
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    const fs::path path = cfg.output_dir / (name + "." + ext);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("output directory not writable: " + cfg.output_dir.string());
    }
    write(out);
    if (!out) {
        throw ConfigError("failed writing " + path.string());
    }
}

const char* ext(const RunConfig& cfg) { return cfg.format == OutputFormat::json ? "json" : "csv"; }

json metrics_json(const DetectorMetrics& m) {
    return json{{"v_br_v", m.v_br},
                {"p_abs", m.p_abs},
                {"p_ava", m.p_ava},
                {"pde", m.pde},
                {"dcr_thermal_hz", m.dcr.thermal_hz},
                {"dcr_btb_hz", m.dcr.btb_hz},
                {"dcr_tat_hz", m.dcr.tat_hz},
                {"dcr_total_hz", m.dcr.total_hz},
                {"depletion", std::string(to_string(m.depletion))},
                {"warnings", m.warnings}};
}

json row_json(const SweepRow& r) {
    json j{{"l_abs_um", r.l_abs_um}, {"l_mul_um", r.l_mul_um}, {"t_k", r.t_k}, {"v_ex_v", r.v_ex}};
    if (r.metrics) {
        j.update(metrics_json(*r.metrics));
    }
    j["status"] = r.status;
    if (!r.message.empty()) {
        j["message"] = r.message;
    }
    return j;
}

json stack_json(const DeviceStack& s) {
    json layers = json::array();
    for (const auto& l : s.layers) {
        layers.push_back({{"role", std::string(to_string(l.role))},
                          {"material", l.material},
                          {"thickness_um", l.thickness_um},
                          {"doping_cm3", l.doping_cm3}});
    }
    return json{{"active_diameter_um", s.active_diameter_um}, {"layers", layers}};
}

int cmd_stack(const RunConfig& cfg) {
    const auto stack = cfg.resolved_stack();
    if (cfg.format == OutputFormat::json) {
        emit(cfg, "stack", "json", [&](std::ostream& o) { o << stack_json(stack).dump(2) << '\n'; });
    } else {
        emit(cfg, "stack", "yaml", [&](std::ostream& o) { o << stack_to_yaml(stack); });
    }
    return kExitOk;
}

int cmd_field(const RunConfig& cfg) {
    const auto stack = cfg.resolved_stack();
    const double bias = cfg.field_bias_v ? *cfg.field_bias_v
                                         : operating_bias(stack, cfg.operating.t_k, cfg.operating.v_ex,
                                                          cfg.context.materials, cfg.context.device);
    const auto field = solve_field(stack, bias, cfg.context.materials, cfg.context.device);
    const auto warnings = design_warnings(field, cfg.context.device);
    for (const auto& w : warnings) {
        report_warning(w);
    }
    if (cfg.format == OutputFormat::json) {
        json nodes = json::array();
        for (std::size_t i = 0; i < field.size(); ++i) {
            nodes.push_back({{"x_um", field.x_um[i]},
                             {"field_v_per_cm", field.field_v_per_cm[i]},
                             {"layer_role", std::string(to_string(field.role_at(i)))}});
        }
        const json doc{{"bias_v", field.bias_v},
                       {"depletion_edge_um", field.depletion_edge_um},
                       {"status", std::string(to_string(field.status))},
                       {"warnings", warnings},
                       {"nodes", nodes}};
        emit(cfg, "field", "json", [&](std::ostream& o) { o << doc.dump(2) << '\n'; });
    } else {
        emit(cfg, "field", "csv", [&](std::ostream& o) {
            CsvWriter csv(o, {"x_um", "field_v_per_cm", "layer_role"});
            for (std::size_t i = 0; i < field.size(); ++i) {
                csv.row({format_double(field.x_um[i]), format_double(field.field_v_per_cm[i]),
                         std::string(to_string(field.role_at(i)))});
            }
        });
    }
    return kExitOk;
}

int cmd_breakdown(const RunConfig& cfg) {
    const auto stack = cfg.resolved_stack();
    const auto temps = cfg.sweep.t_k.empty() ? std::vector<double>{cfg.operating.t_k} : cfg.sweep.t_k;
    std::vector<double> vbr;
    for (const double t : temps) {
        vbr.push_back(breakdown_voltage(stack, t, cfg.context.materials, cfg.context.device));
    }
    if (cfg.format == OutputFormat::json) {
        json rows = json::array();
        for (std::size_t i = 0; i < temps.size(); ++i) {
            rows.push_back({{"t_k", temps[i]}, {"v_br_v", vbr[i]}});
        }
        emit(cfg, "breakdown", "json", [&](std::ostream& o) { o << rows.dump(2) << '\n'; });
    } else {
        emit(cfg, "breakdown", "csv", [&](std::ostream& o) {
            CsvWriter csv(o, {"t_k", "v_br_v"});
            for (std::size_t i = 0; i < temps.size(); ++i) {
                csv.row({temps[i], vbr[i]});
            }
        });
    }
    return kExitOk;
}

int cmd_metrics(const RunConfig& cfg) {
    const auto stack = cfg.resolved_stack();
    SweepRow row;
    row.l_abs_um = stack.layer(LayerRole::absorption).thickness_um;
    row.l_mul_um = stack.layer(LayerRole::multiplication).thickness_um;
    row.t_k = cfg.operating.t_k;
    row.v_ex = cfg.operating.v_ex;
    row.metrics = metrics(stack, cfg.operating, cfg.context);
    for (const auto& w : row.metrics->warnings) {
        report_warning(w);
    }
    if (cfg.format == OutputFormat::json) {
        emit(cfg, "metrics", "json", [&](std::ostream& o) { o << row_json(row).dump(2) << '\n'; });
    } else {
        emit(cfg, "metrics", "csv", [&](std::ostream& o) { write_sweep_csv(o, {row}); });
    }
    return kExitOk;
}

int cmd_sweep(const RunConfig& cfg) {
    const auto rows = run_sweep(cfg.sweep_spec(), cfg.context, cfg.workers);
    if (cfg.format == OutputFormat::json) {
        json arr = json::array();
        for (const auto& r : rows) {
            arr.push_back(row_json(r));
        }
        emit(cfg, "sweep", "json", [&](std::ostream& o) { o << arr.dump(2) << '\n'; });
    } else {
        emit(cfg, "sweep", "csv", [&](std::ostream& o) { write_sweep_csv(o, rows); });
    }
    return kExitOk;
}

int cmd_dcr(const RunConfig& cfg) {
    const auto stack = cfg.resolved_stack();
    const auto temps = cfg.sweep.t_k.empty() ? std::vector<double>{cfg.operating.t_k} : cfg.sweep.t_k;
    const auto biases = cfg.sweep.v_ex.empty() ? std::vector<double>{cfg.operating.v_ex} : cfg.sweep.v_ex;
    emit(cfg, "dcr", "csv", [&](std::ostream& o) {
        write_dcr_csv_header(o);
        for (const double t : temps) {
            for (const double v : biases) {
                write_dcr_csv_row(o, t, v,
                                  total_dcr(stack, t, v, cfg.context.materials, cfg.context.tunneling,
                                            cfg.context.device, cfg.context.avalanche));
            }
        }
    });
    return kExitOk;
}

int cmd_trigger(const RunConfig& cfg) {
    const auto stack = cfg.resolved_stack();
    const double v_br = breakdown_voltage(stack, cfg.operating.t_k, cfg.context.materials, cfg.context.device);
    const auto trigger = trigger_at_excess_bias(stack, cfg.operating.t_k, v_br, cfg.operating.v_ex,
                                                cfg.context.materials, cfg.context.device, cfg.context.avalanche);
    emit(cfg, "trigger", "csv", [&](std::ostream& o) { write_trigger_csv(o, trigger); });
    return kExitOk;
}

int cmd_qkd(const RunConfig& cfg) {
    const auto stack = cfg.resolved_stack();
    const auto m = metrics(stack, cfg.operating, cfg.context);
    const auto det = DetectorSummary::from(m, cfg.operating);
    const auto points = key_rate_curve(det, cfg.distances_km, cfg.qkd);
    if (cfg.format == OutputFormat::json) {
        json arr = json::array();
        for (const auto& p : points) {
            arr.push_back({{"distance_km", p.distance_km},
                           {"rate_bps", p.rate_bps},
                           {"qber", p.qber},
                           {"q_mu", p.gain_signal},
                           {"y1_lower", p.y1_lower},
                           {"e1_upper", p.e1_upper}});
        }
        const json doc{{"t_k", cfg.operating.t_k},
                       {"v_ex_v", cfg.operating.v_ex},
                       {"pde", m.pde},
                       {"dcr_total_hz", m.dcr.total_hz},
                       {"max_distance_km", max_distance(det, cfg.qkd)},
                       {"points", arr}};
        emit(cfg, "qkd", "json", [&](std::ostream& o) { o << doc.dump(2) << '\n'; });
    } else {
        emit(cfg, "qkd", "csv", [&](std::ostream& o) { write_key_rate_csv(o, points); });
    }
    return kExitOk;
}

int cmd_optimize(const RunConfig& cfg) {
    const std::optional<ChargeTuning> tuning =
        cfg.stack.auto_charge ? std::optional<ChargeTuning>(cfg.tuning) : std::nullopt;
    const auto result = optimize_design(cfg.stack.stack, cfg.optimize_distance_km, cfg.search_space(), cfg.qkd,
                                        cfg.context, tuning, cfg.workers);
    if (cfg.format == OutputFormat::csv) {
        emit(cfg, "optimize", "csv", [&](std::ostream& o) {
            CsvWriter csv(o, {"rank", "l_abs_um", "l_mul_um", "t_k", "v_ex_v", "rate_bps", "pde", "dcr_total_hz",
                              "status"});
            for (std::size_t i = 0; i < result.ranking.size(); ++i) {
                const auto& c = result.ranking[i];
                csv.row({std::to_string(i + 1), format_double(c.l_abs_um), format_double(c.l_mul_um),
                         format_double(c.t_k), format_double(c.v_ex), format_double(c.rate_bps),
                         format_double(c.pde), format_double(c.dcr_total_hz), c.status});
            }
        });
    } else {
        emit(cfg, "optimize", "json", [&](std::ostream& o) { o << optimization_report_json(result) << '\n'; });
    }
    if (!result.has_key()) {
        report_warning("no candidate yields a positive key rate at " + format_double(result.distance_km) + " km");
    }
    return kExitOk;
}

int cmd_figure(const RunConfig& cfg, const std::string& name) {
    const auto id = parse_figure_name(name);
    if (!id) {
        std::string valid;
        for (const auto& n : figure_names()) {
            valid += (valid.empty() ? "" : ", ") + n;
        }
        throw UsageError("unknown figure '" + name + "'; valid names: " + valid);
    }
    if (cfg.format == OutputFormat::json) {
        throw UsageError("figure output is CSV only");
    }
    // Figures follow the captions; only materials, solver and protocol settings come from the config.
    emit(cfg, name, "csv", [&](std::ostream& o) { write_figure_csv(o, *id, cfg.context, cfg.qkd, cfg.workers); });
    return kExitOk;
}

struct McOptions {
    double width_um = 1.0;
    std::uint64_t trials = 100000;
    std::vector<double> overbias{0.05, 0.1, 0.2};
};

int cmd_mc_check(const RunConfig& cfg, const McOptions& mc, std::uint64_t seed) {
    const auto& db = cfg.context.materials;
    DeviceStack slab;
    slab.layers = {{LayerRole::multiplication, "InP", mc.width_um, 0.0}};
    const double t = cfg.operating.t_k;
    const double v_br = breakdown_voltage(slab, t, db, cfg.context.device);
    const auto& model = db.ionization("InP");
    emit(cfg, "mc_check", "csv", [&](std::ostream& o) {
        CsvWriter csv(o, {"overbias_ratio", "bias_v", "p_solver", "p_monte_carlo", "std_error", "z_score"});
        for (std::size_t i = 0; i < mc.overbias.size(); ++i) {
            const double bias = v_br * (1.0 + mc.overbias[i]);
            const auto field = solve_field(slab, bias, db, cfg.context.device);
            const double p = solve_trigger_profile(field, t, model, cfg.context.avalanche,
                                                   cfg.context.device.ionization_threshold_v_per_cm)
                                 .hole_injection_probability();
            const auto c = ionization_coefficients(model, bias / (mc.width_um * 1e-4), t);
            oracle::SlabAvalancheSpec spec;
            spec.alpha_per_cm = c.alpha_e;
            spec.beta_per_cm = c.beta_h;
            spec.width_um = mc.width_um;
            spec.x_um = mc.width_um;
            spec.trials = mc.trials;
            spec.seed = seed + i;
            const auto est = oracle::simulate_slab_trigger(spec);
            csv.row({mc.overbias[i], bias, p, est.probability, est.std_error, (est.probability - p) / est.std_error});
        }
    });
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"InGaAs/InP SAGCM SPAD simulator: field, breakdown, PDE/DCR, sweeps and decoy-BB84 key rate"};
    app.require_subcommand(1);
    Options opt;
    app.add_option("--config", opt.config, "Run config (YAML)");
    app.add_option("--out", opt.out_dir, "Output directory (default: standard output)");
    app.add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--materials", opt.materials, "Material database (overrides config and SPADSIM_MATERIALS)");
    app.add_option("--grid-nm", opt.grid_nm, "Field-solver grid spacing (nm)");
    app.add_option("--seed", opt.seed, "Seed for the Monte-Carlo oracle");
    app.add_option("--workers", opt.workers, "Worker threads for sweeps (0: all cores)");

    auto* stack_cmd = app.add_subcommand("stack", "Validate the device stack and echo its normalized form");
    auto* field_cmd = app.add_subcommand("field", "Electric-field profile at the configured bias");
    auto* breakdown_cmd = app.add_subcommand("breakdown", "Breakdown voltage per temperature");
    auto* metrics_cmd = app.add_subcommand("metrics", "PDE and DCR at the operating point");
    auto* sweep_cmd = app.add_subcommand("sweep", "Design-space sweep over L_abs, L_mul, T, v_ex");
    auto* dcr_cmd = app.add_subcommand("dcr", "Dark-count components over the sweep T and v_ex axes");
    auto* trigger_cmd = app.add_subcommand("trigger", "Avalanche trigger probabilities at the operating point");
    auto* qkd_cmd = app.add_subcommand("qkd", "Secure key rate versus distance");
    auto* optimize_cmd = app.add_subcommand("optimize", "Grid search for the best key rate at a distance");
    auto* figure_cmd = app.add_subcommand("figure", "CSV data behind one figure");
    std::string figure_name;
    figure_cmd->add_option("name", figure_name, "fig2 | fig3 | fig4 | fig5 | fig6 | fig7")->required();
    auto* mc_cmd = app.add_subcommand("mc-check", "Trigger-probability solver against Monte-Carlo path sampling on uniform slabs");
    McOptions mc;
    mc_cmd->add_option("--trials", mc.trials, "Monte-Carlo trials per overbias level");
    mc_cmd->add_option("--width-um", mc.width_um, "Slab width");
    mc_cmd->add_option("--overbias", mc.overbias, "Overbias ratios (V/V_br - 1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_error("usage", e.what());
        return kExitUsage;
    }

    RunConfig cfg;
    try {
        cfg = build_config(opt);
        if (*stack_cmd) return cmd_stack(cfg);
        if (*field_cmd) return cmd_field(cfg);
        if (*breakdown_cmd) return cmd_breakdown(cfg);
        if (*metrics_cmd) return cmd_metrics(cfg);
        if (*sweep_cmd) return cmd_sweep(cfg);
        if (*dcr_cmd) return cmd_dcr(cfg);
        if (*trigger_cmd) return cmd_trigger(cfg);
        if (*qkd_cmd) return cmd_qkd(cfg);
        if (*optimize_cmd) return cmd_optimize(cfg);
        if (*figure_cmd) return cmd_figure(cfg, figure_name);
        if (*mc_cmd) return cmd_mc_check(cfg, mc, opt.seed);
    } catch (const UsageError& e) {
        report_error("usage", e.what());
        return kExitUsage;
    } catch (const ConfigError& e) {
        report_error("config", e.what());
        return kExitUsage;
    } catch (const ValidationError& e) {
        report_error("validation", e.what());
        return kExitUsage;
    } catch (const DomainError& e) {
        report_error("domain", e.what());
        return kExitUsage;
    } catch (const MetricsError& e) {
        const bool input = e.tag() == "validation" || e.tag() == "domain" || e.tag() == "config";
        report_error(e.tag(), e.what());
        return input ? kExitUsage : kExitSolver;
    } catch (const std::exception& e) {
        report_error(error_tag(e), e.what());
        return kExitSolver;
    }
    return kExitUsage;
}
