#include <doctest.h>

#include <filesystem>

#include "spadsim/config.hpp"
#include "spadsim/errors.hpp"
#include "test_support.hpp"

using namespace spadsim;
using spadsim::test::db;

namespace fs = std::filesystem;

namespace {

const fs::path kData = SPADSIM_TEST_DATA;
const fs::path kConfigDir = fs::path(SPADSIM_TEST_DATA) / ".." / ".." / "config";

}  // namespace

TEST_CASE("stack files") {
    const auto sf = load_stack_file(kConfigDir / "reference_stack.yaml", db());
    CHECK(sf.auto_charge);
    CHECK(sf.stack.layers.size() == 6);
    CHECK(sf.stack.layer(LayerRole::absorption).thickness_um == 1.8);
    CHECK(sf.stack.active_diameter_um == 25.0);

    const auto fixed = load_stack_file(kData / "fixed_stack.yaml", db());
    CHECK_FALSE(fixed.auto_charge);
    CHECK(fixed.stack.layer(LayerRole::charge).doping_cm3 == 8.86e16);

    try {
        load_stack_file(kData / "nope.yaml", db());
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("stack file not found") != std::string::npos);
    }
}

TEST_CASE("stack YAML round trip") {
    const auto& s = spadsim::test::tuned();
    const auto text = stack_to_yaml(s);
    const auto back = parse_stack_yaml(text, db());
    REQUIRE(back.stack.layers.size() == s.layers.size());
    for (std::size_t i = 0; i < s.layers.size(); ++i) {
        CHECK(back.stack.layers[i].role == s.layers[i].role);
        CHECK(back.stack.layers[i].material == s.layers[i].material);
        CHECK(back.stack.layers[i].thickness_um == s.layers[i].thickness_um);
        CHECK(back.stack.layers[i].doping_cm3 == s.layers[i].doping_cm3);
    }
    CHECK(stack_to_yaml(back.stack) == text);
}

TEST_CASE("stack documents are checked strictly") {
    CHECK_THROWS_AS(parse_stack_yaml("layers: 3", db()), ConfigError);
    CHECK_THROWS_AS(parse_stack_yaml("colour: red\nlayers: []", db()), ConfigError);
    CHECK_THROWS_AS(parse_stack_yaml("layers:\n  - {role: absorption, material: InP, thickness_um: 1, doping_cm3: 0}\n", db()),
                    ConfigError);
    CHECK_THROWS_AS(
        parse_stack_yaml("layers:\n  - {role: multiplication, material: InP, thickness_um: 1, doping_cm3: auto}\n", db()),
        ConfigError);
    CHECK_THROWS_AS(parse_stack_yaml("layers:\n  - {role: multiplication, material: InP, thickness_um: 1}\n", db()),
                    ConfigError);
}

TEST_CASE("example config parses and resolves its stack") {
    const auto cfg = load_run_config(kConfigDir / "example.yaml");
    CHECK(cfg.stack.auto_charge);
    CHECK(cfg.operating.t_k == 240.0);
    CHECK(cfg.sweep.l_abs_um.size() == 5);
    CHECK(cfg.sweep.v_ex == std::vector<double>{1, 2, 3, 4, 5, 6, 7});
    CHECK(cfg.distances_km.size() == 151);
    CHECK(cfg.optimize_distance_km == 100.0);
    CHECK(cfg.search.t_k == std::vector<double>{180, 220, 260});
    CHECK(cfg.context.device.grid_spacing_um == doctest::Approx(1e-3));
    const auto spec = cfg.sweep_spec();
    CHECK(spec.tuning.has_value());
    CHECK(spec.l_mul_um == std::vector<double>{1.5});
    CHECK(spec.size() == 35);
    const auto space = cfg.search_space();
    CHECK(space.l_abs_um == std::vector<double>{1.8});
    CHECK(space.v_ex.size() == 3);
}

TEST_CASE("defaults and overrides") {
    const auto cfg = parse_run_config("", ".");
    CHECK(cfg.stack.auto_charge);
    CHECK(cfg.format == OutputFormat::csv);
    CHECK(cfg.qkd.mu == 0.6);

    const auto c2 = parse_run_config("solver: {grid_nm: 0.5, workers: 3}\noutput: {format: json}\nqkd: {two_detectors: true}\n", ".");
    CHECK(c2.context.device.grid_spacing_um == doctest::Approx(5e-4));
    CHECK(c2.workers == 3);
    CHECK(c2.format == OutputFormat::json);
    CHECK(c2.qkd.two_detectors);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse_run_config("unknown_section: 1\n", "."), ConfigError);
    CHECK_THROWS_AS(parse_run_config("operating: {temperature_K: 500}\n", "."), ConfigError);
    CHECK_THROWS_AS(parse_run_config("qkd: {mu: 0.1, nu: 0.2}\n", "."), ConfigError);
    CHECK_THROWS_AS(parse_run_config("operating: {temperature: 240}\n", "."), ConfigError);
    CHECK_THROWS_AS(parse_run_config("output: {format: xml}\n", "."), ConfigError);
    CHECK_THROWS_AS(parse_run_config("sweep: {excess_bias_V: {start: 1, stop: 0, step: 1}}\n", "."), std::exception);
    CHECK_THROWS_AS(load_run_config(kData / "missing_stack.yaml"), ConfigError);
    CHECK_THROWS_AS(load_run_config(kData / "no_such_config.yaml"), ConfigError);
    CHECK(parse_output_format("json") == OutputFormat::json);
}

TEST_CASE("materials override wins") {
    const auto cfg = parse_run_config("", ".", fs::path(SPADSIM_TEST_DATA) / ".." / ".." / "data" / "materials.yaml");
    CHECK(cfg.context.materials.contains("InGaAsP"));
    CHECK_THROWS_AS(parse_run_config("", ".", "/nonexistent.yaml"), ConfigError);
}
