#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "spadsim/constants.hpp"
#include "spadsim/device.hpp"
#include "spadsim/errors.hpp"
#include "test_support.hpp"

using namespace spadsim;
using spadsim::test::db;
using spadsim::test::rel_err;
using spadsim::test::tuned;

namespace {

constexpr double kEps0PerCm = PhysicalConstants::eps0 * 1e-2;

DeviceStack intrinsic_stack(std::vector<LayerSpec> layers) {
    DeviceStack s;
    s.layers = std::move(layers);
    return s;
}

double eps_of(const std::string& material) { return db().get(material).eps_r * kEps0PerCm; }

// Field at a position strictly inside layer k (no interface duplicates).
double field_inside(const FieldProfile& f, std::size_t k) {
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f.layer_index[i] == k && f.x_um[i] > f.layers[k].start_um && f.x_um[i] < f.layers[k].end_um) {
            return f.field_v_per_cm[i];
        }
    }
    return -1.0;
}

}  // namespace

TEST_CASE("undoped single layer carries a uniform field V/W") {
    const auto s = intrinsic_stack({{LayerRole::multiplication, "InP", 2.0, 0.0}});
    const auto f = solve_field(s, 30.0, db());
    const double expected = 30.0 / (2.0 * kCmPerUm);
    for (const double v : f.field_v_per_cm) {
        CHECK(rel_err(v, expected) < 1e-9);
    }
    CHECK(f.status == DepletionStatus::fully_depleted);
}

TEST_CASE("two undoped layers of equal permittivity share one field") {
    const auto s = intrinsic_stack({{LayerRole::multiplication, "InP", 1.0, 0.0}, {LayerRole::charge, "InP", 0.5, 0.0}});
    const auto f = solve_field(s, 45.0, db());
    const double expected = 45.0 / (1.5 * kCmPerUm);
    for (const double v : f.field_v_per_cm) {
        CHECK(rel_err(v, expected) < 1e-9);
    }
}

TEST_CASE("charged layer between intrinsic layers matches the Gauss's-law solution") {
    const double w1 = 1.2;
    const double t = 0.2;
    const double w3 = 1.5;
    const double n = 5e16;
    const double bias = 80.0;
    const auto s = intrinsic_stack({{LayerRole::multiplication, "InP", w1, 0.0},
                                    {LayerRole::charge, "InP", t, n},
                                    {LayerRole::absorption, "InGaAs", w3, 0.0}});
    // Closed form: D0 w1/e1 + (D0 t - sigma t/2)/e2 + (D0 - sigma) w3/e3 = bias, sigma = qNt.
    const double e1 = eps_of("InP");
    const double e3 = eps_of("InGaAs");
    const double tc = t * kCmPerUm;
    const double sigma = PhysicalConstants::q * n * tc;
    const double d0 = (bias + sigma * tc / (2.0 * e1) + sigma * w3 * kCmPerUm / e3) /
                      (w1 * kCmPerUm / e1 + tc / e1 + w3 * kCmPerUm / e3);
    REQUIRE(d0 > sigma);

    const auto f = solve_field(s, bias, db());
    CHECK(f.status == DepletionStatus::fully_depleted);
    CHECK(rel_err(field_inside(f, 0), d0 / e1) < 1e-6);
    CHECK(rel_err(field_inside(f, 2), (d0 - sigma) / e3) < 1e-6);
    // Step across the charged layer equals q sigma / eps in the displacement picture.
    CHECK(rel_err(d0 / e1 - (d0 - sigma) / e1, sigma / e1) < 1e-12);
    const double before = f.peak_field(LayerRole::multiplication);
    double after_charge = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f.layer_index[i] == 1) {
            after_charge = f.field_v_per_cm[i];
        }
    }
    CHECK(rel_err(before - after_charge, sigma / e1) < 1e-6);
    CHECK(rel_err(f.integrated_voltage(), bias) < 1e-6);
}

TEST_CASE("field profile invariants on the reference stack") {
    const auto& s = tuned();
    for (const double bias : {20.0, 40.0, 60.0, 80.0, 120.0}) {
        CAPTURE(bias);
        const auto f = solve_field(s, bias, db());
        CHECK(rel_err(f.integrated_voltage(), bias) < 1e-6);
        CHECK(std::is_sorted(f.x_um.begin(), f.x_um.end()));
        CHECK(std::all_of(f.field_v_per_cm.begin(), f.field_v_per_cm.end(), [](double v) { return v >= 0.0; }));
        for (std::size_t i = 1; i < f.size(); ++i) {
            // The undepleted p+ anode carries no field, so skip the contact interface.
            if (f.x_um[i] == f.x_um[i - 1] && f.layer_index[i] != f.layer_index[i - 1] &&
                f.role_at(i - 1) != LayerRole::contact) {
                // Interface duplicate: displacement is continuous.
                const double d_left = f.field_v_per_cm[i - 1] * eps_of(f.layers[f.layer_index[i - 1]].material);
                const double d_right = f.field_v_per_cm[i] * eps_of(f.layers[f.layer_index[i]].material);
                CHECK(std::abs(d_left - d_right) <= 1e-12 * d_left);
            }
        }
        // Piecewise linear: constant slope inside each layer while depleted.
        for (std::size_t i = 2; i < f.size(); ++i) {
            const bool same = f.layer_index[i] == f.layer_index[i - 1] && f.layer_index[i] == f.layer_index[i - 2];
            if (!same || f.field_v_per_cm[i] == 0.0 || f.field_v_per_cm[i - 1] == 0.0 || f.field_v_per_cm[i - 2] == 0.0) {
                continue;
            }
            const double h1 = f.x_um[i - 1] - f.x_um[i - 2];
            const double h2 = f.x_um[i] - f.x_um[i - 1];
            if (h1 <= 0.0 || h2 <= 0.0) {
                continue;
            }
            const double s1 = (f.field_v_per_cm[i - 1] - f.field_v_per_cm[i - 2]) / h1;
            const double s2 = (f.field_v_per_cm[i] - f.field_v_per_cm[i - 1]) / h2;
            CHECK(std::abs(s1 - s2) <= 1e-6 * std::max(std::abs(s1), 1.0) * 1e3);
        }
    }
}

TEST_CASE("layer slope equals qN/eps") {
    const auto& s = tuned();
    const auto f = solve_field(s, 70.0, db());
    const auto k = *s.find(LayerRole::charge);
    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f.layer_index[i] == k) {
            nodes.push_back(i);
        }
    }
    const auto a = nodes.front();
    const auto b = nodes.back();
    const double slope = (f.field_v_per_cm[b] - f.field_v_per_cm[a]) / ((f.x_um[b] - f.x_um[a]) * kCmPerUm);
    const double expected = -PhysicalConstants::q * s.layers[k].doping_cm3 / eps_of("InP");
    CHECK(rel_err(slope, expected) < 1e-6);
}

TEST_CASE("low bias does not punch through and is reported, not thrown") {
    const auto f = solve_field(tuned(), 15.0, db());
    CHECK(f.status == DepletionStatus::punch_through_not_reached);
    CHECK_FALSE(f.punched_through());
    CHECK(f.depleted_thickness_um(LayerRole::absorption) == 0.0);
    const auto warnings = design_warnings(f);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("punch-through") != std::string::npos);
}

TEST_CASE("solve_field preconditions") {
    CHECK_THROWS_AS(solve_field(tuned(), 0.0, db()), DomainError);
    CHECK_THROWS_AS(solve_field(tuned(), -3.0, db()), DomainError);
    DeviceSolverOptions bad;
    bad.grid_spacing_um = 0.0;
    CHECK_THROWS_AS(solve_field(tuned(), 10.0, db(), bad), ValidationError);
}

TEST_CASE("stack validation") {
    auto s = reference_stack();
    CHECK_NOTHROW(s.validate_sagcm(db()));

    SUBCASE("role/material pairs") {
        s.layers[4].material = "InP";
        CHECK_THROWS_AS(s.validate_layers(db()), ValidationError);
    }
    SUBCASE("grading must be quaternary") {
        s.layers[3].material = "InGaAs";
        CHECK_THROWS_AS(s.validate_layers(db()), ValidationError);
    }
    SUBCASE("thickness must be positive") {
        s.layers[1].thickness_um = 0.0;
        CHECK_THROWS_AS(s.validate_layers(db()), ValidationError);
    }
    SUBCASE("diameter must be positive") {
        s.active_diameter_um = 0.0;
        CHECK_THROWS_AS(s.validate_layers(db()), ValidationError);
    }
    SUBCASE("unknown material") {
        s.layers[0].material = "GaN";
        CHECK_THROWS_AS(s.validate_layers(db()), ValidationError);
    }
    SUBCASE("order") {
        std::swap(s.layers[1], s.layers[4]);
        CHECK_THROWS_AS(s.validate_sagcm(db()), ValidationError);
    }
    SUBCASE("two absorbers") {
        s.layers.insert(s.layers.begin() + 4, s.layers[4]);
        CHECK_THROWS_AS(s.validate_sagcm(db()), ValidationError);
    }
    SUBCASE("roles round-trip through text") {
        for (const auto& l : s.layers) {
            CHECK(parse_layer_role(to_string(l.role)) == l.role);
        }
        CHECK_THROWS_AS(parse_layer_role("cladding"), ValidationError);
    }
}

TEST_CASE("active area of a 25 um device") {
    CHECK(rel_err(reference_stack().active_area_cm2(), PhysicalConstants::pi * 12.5e-4 * 12.5e-4) < 1e-15);
}

TEST_CASE("breakdown voltage") {
    const auto& s = tuned();
    const auto& model = db().ionization("InP");
    const double vbr = breakdown_voltage(s, 240.0, db());

    SUBCASE("ionization integral is one at the returned bias") {
        CHECK(std::abs(ionization_integral(solve_field(s, vbr, db()), 240.0, model) - 1.0) < 1e-6);
    }
    SUBCASE("matches a dense bias scan") {
        const auto integral = [&](double v) { return ionization_integral(solve_field(s, v, db()), 240.0, model); };
        double lo = 10.0;
        while (integral(lo + 1.0) < 1.0) {
            lo += 1.0;
        }
        double step = 1e-3;
        double v = lo;
        double prev = integral(v);
        while (true) {
            const double next = integral(v + step);
            if (next >= 1.0) {
                const double crossing = v + step * (1.0 - prev) / (next - prev);
                CHECK(std::abs(crossing - vbr) < 1e-3);
                break;
            }
            prev = next;
            v += step;
        }
    }
    SUBCASE("positive temperature coefficient") {
        double prev = 0.0;
        for (const double t : {180.0, 210.0, 240.0, 270.0, 300.0}) {
            const double v = breakdown_voltage(s, t, db());
            CHECK(v > prev);
            prev = v;
        }
    }
    SUBCASE("thicker multiplication layer breaks down later") {
        const auto base = reference_stack(1.8, 1.5).with_doping(LayerRole::charge, s.layer(LayerRole::charge).doping_cm3);
        CHECK(breakdown_voltage(base.with_thickness(LayerRole::multiplication, 2.0), 240.0, db()) > vbr);
        CHECK(breakdown_voltage(base.with_thickness(LayerRole::multiplication, 1.0), 240.0, db()) < vbr);
    }
    SUBCASE("grid refinement moves V_br by less than 1 mV") {
        DeviceSolverOptions fine;
        fine.grid_spacing_um = 0.5e-3;
        CHECK(std::abs(breakdown_voltage(s, 240.0, db(), fine) - vbr) < 1e-3);
    }
    SUBCASE("operating bias is V_br plus excess") {
        CHECK(operating_bias(s, 240.0, 0.0, db()) == vbr);
        CHECK(operating_bias(s, 240.0, 5.0, db()) == vbr + 5.0);
        CHECK(operating_bias(s, 240.0, 6.0, db()) - operating_bias(s, 240.0, 2.0, db()) == doctest::Approx(4.0).epsilon(1e-12));
        CHECK_THROWS_AS(operating_bias(s, 240.0, -0.1, db()), DomainError);
    }
}

TEST_CASE("no breakdown below the ceiling is a structured error") {
    DeviceSolverOptions opts;
    opts.bias_ceiling_v = 40.0;
    try {
        breakdown_voltage(tuned(), 240.0, db(), opts);
        FAIL("expected NoBreakdownError");
    } catch (const NoBreakdownError& e) {
        CHECK(e.ceiling_v() == 40.0);
        CHECK(e.integral_at_ceiling() < 1.0);
    }
}

TEST_CASE("charge tuner places the absorber field at the target") {
    const auto& s = tuned();
    const double v = operating_bias(s, 240.0, 5.0, db());
    const auto f = solve_field(s, v, db());
    const double fa = f.peak_field(LayerRole::absorption);
    CHECK(fa >= 8e4);
    CHECK(fa <= 1.2e5);
    CHECK(rel_err(fa, 1e5) < 1e-3);
    CHECK(f.peak_field(LayerRole::multiplication) > fa);
    CHECK(f.status == DepletionStatus::reached_absorption);
    CHECK(design_warnings(f).empty());
}

TEST_CASE("tuning needs a charge layer") {
    auto s = reference_stack();
    s.layers.erase(s.layers.begin() + 2);
    CHECK_THROWS_AS(tune_charge_layer(s, ChargeTuning{}, db()), ValidationError);
}

TEST_CASE("absorber field above the safety threshold raises a design warning") {
    const auto s = tuned().with_doping(LayerRole::charge, 0.6 * tuned().layer(LayerRole::charge).doping_cm3);
    const double v = operating_bias(s, 240.0, 5.0, db());
    const auto warnings = design_warnings(solve_field(s, v, db()));
    REQUIRE_FALSE(warnings.empty());
    CHECK(warnings.back().find("tunneling-safety") != std::string::npos);
}
