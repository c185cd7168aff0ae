#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "spadsim/constants.hpp"
#include "spadsim/errors.hpp"
#include "spadsim/materials.hpp"
#include "test_support.hpp"

using namespace spadsim;
using spadsim::test::db;
using spadsim::test::rel_err;

TEST_CASE("bandgap is anchored at 300 K and widens on cooling") {
    const auto& inp = db().get("InP");
    CHECK(bandgap(inp, 300.0) == inp.eg_300K);
    CHECK(bandgap(inp, 200.0) > inp.eg_300K);
    // Varshni expression evaluated separately in extended precision.
    CHECK(rel_err(bandgap(inp, 240.0), 1.36455715045188729) < 1e-13);
}

TEST_CASE("bandgap decreases with temperature for every shipped material") {
    for (const auto& name : db().names()) {
        const auto& m = db().get(name);
        double prev = bandgap(m, kMinTemperatureK);
        for (double t = 80.0; t <= kMaxTemperatureK; t += 5.0) {
            const double eg = bandgap(m, t);
            CHECK(eg < prev);
            CHECK(eg > 0.0);
            prev = eg;
        }
    }
}

TEST_CASE("temperature outside [77, 350] K is a domain error") {
    const auto& m = db().get("InGaAs");
    CHECK_THROWS_AS(bandgap(m, 76.9), DomainError);
    CHECK_THROWS_AS(intrinsic_carrier_concentration(m, 351.0), DomainError);
    CHECK_THROWS_AS(ionization_coefficients(db().ionization("InP"), 1e5, 400.0), DomainError);
}

TEST_CASE("intrinsic carrier concentration") {
    const auto& m = db().get("InGaAs");
    CHECK(rel_err(intrinsic_carrier_concentration(m, 300.0), m.ni_300K) < 0.05);
    double prev = 0.0;
    for (double t = 77.0; t <= 350.0; t += 1.0) {
        const double ni = intrinsic_carrier_concentration(m, t);
        CHECK(ni > prev);
        prev = ni;
    }
    const double ratio = intrinsic_carrier_concentration(m, 300.0) / intrinsic_carrier_concentration(m, 180.0);
    CHECK(ratio > 1e3);
    CHECK(rel_err(ratio, 125445.761230549852) < 1e-9);
}

TEST_CASE("log n_i against 1/T follows the activation energy") {
    // d ln n_i / d(1/T) = -(Eg - T dEg/dT) / 2k - 3T/2 with the Varshni derivative.
    const auto& m = db().get("InGaAs");
    for (const double t : {180.0, 240.0, 300.0}) {
        const double h = 0.01;
        const double slope = (std::log(intrinsic_carrier_concentration(m, t + h)) -
                              std::log(intrinsic_carrier_concentration(m, t - h))) /
                             (1.0 / (t + h) - 1.0 / (t - h));
        const double b = m.varshni_beta;
        const double deg_dt = -m.varshni_alpha * t * (t + 2.0 * b) / ((t + b) * (t + b));
        const double expected = -(bandgap(m, t) - t * deg_dt) / (2.0 * PhysicalConstants::k_B_eV) - 1.5 * t;
        CHECK(rel_err(slope, expected) < 1e-6);
    }
}

TEST_CASE("ionization coefficients") {
    const auto& model = db().ionization("InP");
    const auto zero = ionization_coefficients(model, 0.0, 240.0);
    CHECK(zero.alpha_e == 0.0);
    CHECK(zero.beta_h == 0.0);
    CHECK_THROWS_AS(ionization_coefficients(model, -1.0, 240.0), DomainError);

    SUBCASE("monotone and nonnegative in F") {
        for (const double t : {77.0, 180.0, 240.0, 300.0, 350.0}) {
            IonizationCoefficients prev;
            for (double f = 0.0; f <= 1e6; f += 1e4) {
                const auto c = ionization_coefficients(model, f, t);
                CHECK(c.alpha_e >= prev.alpha_e);
                CHECK(c.beta_h >= prev.beta_h);
                prev = c;
            }
        }
    }
    SUBCASE("cross-check against a separate evaluation of the parameterization") {
        // alpha = a exp(-b (1 + 1e-3 (T - 300)) / F) with the room-temperature InP a, b.
        const auto c = ionization_coefficients(model, 4.5e5, 240.0);
        CHECK(rel_err(c.alpha_e, 16898.4958133182983) < 1e-12);
        CHECK(rel_err(c.beta_h, 23280.5680593018750) < 1e-12);
    }
    SUBCASE("holes ionize more readily than electrons at multiplication fields") {
        for (double f = 2e5; f <= 5.5e5; f += 5e4) {
            const auto c = ionization_coefficients(model, f, 240.0);
            CHECK(c.beta_h > c.alpha_e);
        }
    }
    SUBCASE("coefficients grow on cooling") {
        CHECK(ionization_coefficients(model, 4e5, 180.0).alpha_e > ionization_coefficients(model, 4e5, 300.0).alpha_e);
    }
}

TEST_CASE("absorption coefficient") {
    const auto& m = db().get("InGaAs");
    const double a1550 = absorption_coefficient(m, 1550.0, 300.0);
    CHECK(a1550 >= 5e3);
    CHECK(a1550 <= 1e4);
    CHECK(absorption_coefficient(m, 1310.0, 300.0) >= a1550);
    CHECK(cutoff_wavelength_nm(m, 300.0) < 1700.0);
    CHECK(absorption_coefficient(m, 1700.0, 300.0) == 0.0);
    CHECK(absorption_coefficient(m, 1690.0, 77.0) == 0.0);
    CHECK_THROWS_AS(absorption_coefficient(m, 999.0, 300.0), DomainError);
    CHECK_THROWS_AS(absorption_coefficient(m, 1701.0, 300.0), DomainError);
}

TEST_CASE("flat absorption value applies without a table") {
    auto m = db().get("InGaAs");
    m.absorption = AbsorptionTable{};
    CHECK(absorption_coefficient(m, 1550.0, 240.0) == 7e3);
}

TEST_CASE("material database parsing") {
    const char* yaml = R"(
name: Test
eg_300K: 1.0
varshni_alpha: 4e-4
varshni_beta: 300
m_c: 0.1
m_lh: 0.1
eps_r: 12
nc_300K: 1e17
nv_300K: 1e19
ni_300K: 1e10
)";
    const auto custom = MaterialDatabase::from_yaml(yaml);
    CHECK(custom.contains("Test"));
    CHECK_FALSE(custom.get("Test").ionization.has_value());
    CHECK_THROWS_AS(custom.ionization("Test"), ValidationError);
    CHECK_THROWS_AS(custom.get("InP"), ValidationError);

    CHECK_THROWS_AS(MaterialDatabase::from_yaml("name: X\neg_300K: 1.0\n"), ConfigError);
    CHECK_THROWS_AS(MaterialDatabase::from_yaml(std::string(yaml) + "---\nname: Y\neps_r: 0.5\n"), ConfigError);
    CHECK_THROWS_AS(MaterialDatabase::from_file("/nonexistent/materials.yaml"), ConfigError);
}

TEST_CASE("invariants of material parameters are enforced") {
    auto m = db().get("InP");
    m.m_c = 0.0;
    CHECK_THROWS_AS(m.validate(), ValidationError);
    m = db().get("InP");
    m.eps_r = 1.0;
    CHECK_THROWS_AS(m.validate(), ValidationError);
    m = db().get("InP");
    m.nv_300K = -1.0;
    CHECK_THROWS_AS(m.validate(), ValidationError);
}

TEST_CASE("environment variable selects an alternate database") {
    const auto path = std::filesystem::temp_directory_path() / "spadsim_test_materials.yaml";
    {
        std::ofstream out(path);
        out << "name: OnlyThis\neg_300K: 1.0\nvarshni_alpha: 4e-4\nvarshni_beta: 300\nm_c: 0.1\nm_lh: 0.1\n"
               "eps_r: 12\nnc_300K: 1e17\nnv_300K: 1e19\nni_300K: 1e10\n";
    }
    setenv(kMaterialsEnvVar, path.c_str(), 1);
    const auto env_db = MaterialDatabase::from_environment();
    unsetenv(kMaterialsEnvVar);
    std::filesystem::remove(path);
    CHECK(env_db.contains("OnlyThis"));
    CHECK_FALSE(env_db.contains("InP"));
    CHECK(MaterialDatabase::from_environment().contains("InP"));
}
