#pragma once

#include <cstdint>

namespace spadsim::oracle {

enum class Carrier { electron, hole };

struct SlabAvalancheSpec {
    double alpha_per_cm = 0.0;  // electron ionization coefficient
    double beta_per_cm = 0.0;   // hole ionization coefficient
    double width_um = 1.0;
    Carrier injected = Carrier::hole;
    double x_um = 1.0;          // injection point; electrons drift to +x, holes to -x
    std::uint64_t trials = 100000;
    std::uint64_t seed = 1;
    /// Pending-carrier count treated as a self-sustaining avalanche.
    std::uint64_t population_threshold = 500;
};

struct MonteCarloEstimate {
    double probability = 0.0;
    double std_error = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t triggered = 0;
};

/// Breakdown-trigger probability of one carrier in a uniform-field slab, estimated by sampling
/// exponential free paths between ionization events. Deterministic for a given seed.
MonteCarloEstimate simulate_slab_trigger(const SlabAvalancheSpec& spec);

}  // namespace spadsim::oracle
