#pragma once

namespace spadsim {

/// CODATA 2018 exact / recommended values in SI units.
struct PhysicalConstants {
    static constexpr double q = 1.602176634e-19;      // C
    static constexpr double hbar = 1.054571817e-34;   // J s
    static constexpr double k_B = 1.380649e-23;       // J/K
    static constexpr double eps0 = 8.8541878128e-12;  // F/m
    static constexpr double m0 = 9.1093837015e-31;    // kg
    static constexpr double k_B_eV = k_B / q;         // eV/K
    static constexpr double pi = 3.14159265358979323846;
};

inline constexpr double kCmPerUm = 1e-4;

}  // namespace spadsim
