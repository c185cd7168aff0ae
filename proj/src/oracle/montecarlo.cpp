#include "spadsim/oracle/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace spadsim::oracle {

namespace {

struct Particle {
    Carrier type;
    double x;
};

}  // namespace

MonteCarloEstimate simulate_slab_trigger(const SlabAvalancheSpec& spec) {
    if (!(spec.width_um > 0.0) || spec.alpha_per_cm < 0.0 || spec.beta_per_cm < 0.0) {
        throw std::invalid_argument("slab needs positive width and nonnegative coefficients");
    }
    if (spec.x_um < 0.0 || spec.x_um > spec.width_um || spec.trials == 0) {
        throw std::invalid_argument("injection point outside slab or zero trials");
    }
    const double w = spec.width_um * 1e-4;
    std::mt19937_64 rng(spec.seed);
    std::exponential_distribution<double> free_path(1.0);
    std::vector<Particle> pending;

    MonteCarloEstimate out;
    out.trials = spec.trials;
    for (std::uint64_t t = 0; t < spec.trials; ++t) {
        pending.assign(1, {spec.injected, spec.x_um * 1e-4});
        bool triggered = false;
        while (!pending.empty()) {
            if (pending.size() >= spec.population_threshold) {
                triggered = true;
                break;
            }
            const Particle p = pending.back();
            pending.pop_back();
            const bool electron = p.type == Carrier::electron;
            const double rate = electron ? spec.alpha_per_cm : spec.beta_per_cm;
            if (rate <= 0.0) {
                continue;
            }
            const double step = free_path(rng) / rate;
            const double x = electron ? p.x + step : p.x - step;
            if (x >= w || x <= 0.0) {
                continue;  // left the high-field region
            }
            // Parent continues; the new pair starts at the same point.
            pending.push_back({p.type, x});
            pending.push_back({Carrier::electron, x});
            pending.push_back({Carrier::hole, x});
        }
        if (triggered) {
            ++out.triggered;
        }
    }
    const double n = static_cast<double>(out.trials);
    out.probability = static_cast<double>(out.triggered) / n;
    out.std_error = std::sqrt(std::max(out.probability * (1.0 - out.probability), 1.0 / n) / n);
    return out;
}

}  // namespace spadsim::oracle
