#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spadsim/avalanche.hpp"
#include "spadsim/constants.hpp"
#include "spadsim/errors.hpp"
#include "test_support.hpp"

using namespace spadsim;
using spadsim::test::db;
using spadsim::test::tuned;

namespace {

void check_profile_invariants(const TriggerProfile& p) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        for (const double v : {p.p_e[i], p.p_h[i], p.p_pair[i]}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        CHECK(p.p_pair[i] >= p.p_e[i] - 1e-15);
        CHECK(p.p_pair[i] >= p.p_h[i] - 1e-15);
        if (i > 0) {
            // Electrons exit at the far end, holes at the anode side.
            CHECK(p.p_e[i] <= p.p_e[i - 1] + 1e-12);
            CHECK(p.p_h[i] >= p.p_h[i - 1] - 1e-12);
        }
    }
    CHECK(p.p_e.back() == 0.0);
    CHECK(p.p_h.front() == 0.0);
}

}  // namespace

TEST_CASE("below breakdown the trigger profile vanishes") {
    const auto& s = tuned();
    const double vbr = breakdown_voltage(s, 240.0, db());
    const auto p = solve_trigger_profile(solve_field(s, vbr - 1.0, db()), 240.0, db().ionization("InP"));
    CHECK(p.below_breakdown);
    CHECK(p.size() > 0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(std::abs(p.p_e[i]) < 1e-6);
        CHECK(std::abs(p.p_h[i]) < 1e-6);
    }
}

TEST_CASE("profile invariants above breakdown") {
    const auto& s = tuned();
    const double vbr = breakdown_voltage(s, 240.0, db());
    for (const double t : {180.0, 240.0}) {
        for (const double v_ex : {0.5, 3.0, 7.0}) {
            CAPTURE(t);
            CAPTURE(v_ex);
            const double v = t == 240.0 ? vbr : breakdown_voltage(s, t, db());
            const auto p = trigger_at_excess_bias(s, t, v, v_ex, db());
            CHECK_FALSE(p.below_breakdown);
            CHECK(p.residual < 1e-8);
            check_profile_invariants(p);
        }
    }
}

TEST_CASE("equal coefficients give mirror-symmetric trigger probabilities") {
    IonizationModel model;
    model.electron = {1e6, 0.0, 2e6, 0.0, 1.0};
    model.hole = model.electron;
    DeviceStack s;
    s.layers = {{LayerRole::multiplication, "InP", 1.0, 0.0}};
    // alpha W = 1 at breakdown for equal coefficients; 20% above.
    const double w_cm = 1e-4;
    const double f_br = 2e6 / std::log(1e6 * w_cm);
    const auto field = solve_field(s, 1.2 * f_br * w_cm, db());
    const auto p = solve_trigger_profile(field, 300.0, model);
    CHECK_FALSE(p.below_breakdown);
    check_profile_invariants(p);
    CHECK(p.p_e.front() == doctest::Approx(p.p_h.back()).epsilon(1e-7));
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(p.p_e[i] == doctest::Approx(p.p_h[p.size() - 1 - i]).epsilon(1e-6));
    }
}

TEST_CASE("uniform slab with equal coefficients matches the closed-form breakdown point") {
    // For alpha = beta the ionization integral reduces to alpha W.
    IonizationModel model;
    model.electron = {1e6, 0.0, 2e6, 0.0, 1.0};
    model.hole = model.electron;
    DeviceStack s;
    s.layers = {{LayerRole::multiplication, "InP", 1.0, 0.0}};
    MaterialDatabase custom = db();
    auto inp = custom.get("InP");
    inp.ionization = model;
    custom.add(inp);
    const double f_br = 2e6 / std::log(1e6 * 1e-4);
    CHECK(breakdown_voltage(s, 300.0, custom) == doctest::Approx(f_br * 1e-4).epsilon(1e-6));
}

TEST_CASE("p_ava behaviour in excess bias") {
    const auto& s = tuned();
    CHECK(p_ava(s, 240.0, 0.0, db()) == 0.0);
    CHECK(p_ava(s, 240.0, 0.01, db()) < 0.01);
    CHECK(p_ava(s, 240.0, 0.01, db()) > 0.0);
    CHECK_THROWS_AS(p_ava(s, 240.0, -1.0, db()), DomainError);

    const double vbr = breakdown_voltage(s, 240.0, db());
    std::vector<double> xs;
    std::vector<double> ys;
    double prev = 0.0;
    for (double v = 1.0; v <= 7.0 + 1e-9; v += 0.5) {
        const double p = trigger_at_excess_bias(s, 240.0, vbr, v, db()).hole_injection_probability();
        CHECK(p > prev);
        CHECK(p <= 1.0);
        prev = p;
        xs.push_back(v);
        ys.push_back(p);
    }
    // Roughly linear rise: least-squares R^2 above 0.98.
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
        syy += ys[i] * ys[i];
    }
    const double cov = sxy - sx * sy / n;
    const double r2 = cov * cov / ((sxx - sx * sx / n) * (syy - sy * sy / n));
    MESSAGE("p_ava linear-fit R^2 = " << r2);
    CHECK(r2 > 0.98);
}

TEST_CASE("grid halving moves p_ava by less than 1e-4") {
    const auto& s = tuned();
    DeviceSolverOptions fine;
    fine.grid_spacing_um = 0.5e-3;
    for (const double v_ex : {1.0, 5.0}) {
        CHECK(std::abs(p_ava(s, 240.0, v_ex, db()) - p_ava(s, 240.0, v_ex, db(), fine)) < 1e-4);
    }
}

TEST_CASE("solver option handling") {
    const auto& s = tuned();
    const double vbr = breakdown_voltage(s, 240.0, db());
    const auto field = solve_field(s, vbr + 3.0, db());
    AvalancheOptions bad;
    bad.relaxation = 0.0;
    CHECK_THROWS_AS(solve_trigger_profile(field, 240.0, db().ionization("InP"), bad), ValidationError);
    AvalancheOptions short_run;
    short_run.max_iterations = 2;
    try {
        solve_trigger_profile(field, 240.0, db().ionization("InP"), short_run);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.iterations() == 2);
        CHECK(e.residual() > 1e-8);
    }
    // Relaxation changes the path, not the fixed point.
    AvalancheOptions full;
    full.relaxation = 1.0;
    const auto a = solve_trigger_profile(field, 240.0, db().ionization("InP"));
    const auto b = solve_trigger_profile(field, 240.0, db().ionization("InP"), full);
    CHECK(a.hole_injection_probability() == doctest::Approx(b.hole_injection_probability()).epsilon(1e-6));
}

TEST_CASE("trigger CSV dump") {
    const auto& s = tuned();
    const double vbr = breakdown_voltage(s, 240.0, db());
    const auto p = trigger_at_excess_bias(s, 240.0, vbr, 2.0, db());
    std::ostringstream out;
    write_trigger_csv(out, p);
    const auto text = out.str();
    CHECK(text.rfind("x_um,p_e,p_h,p_pair\n", 0) == 0);
    CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == p.size() + 1);
}
