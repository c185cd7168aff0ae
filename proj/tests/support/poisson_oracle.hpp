#pragma once

#include <cmath>

namespace spadsim::test {

/// Photon-number-resolved channel: per-n yields Y_n = y0 + (1 - y0)(1 - (1 - eta)^n) summed
/// against Poisson weights, with afterpulsing applied per photon number.
struct PoissonChannel {
    double eta = 0.0;
    double y0 = 0.0;
    double e_opt = 0.0;
    double p_ap = 0.0;
    int n_max = 50;

    double base_yield(int n) const { return y0 + (1.0 - y0) * (1.0 - std::pow(1.0 - eta, n)); }
    double yield(int n) const { return base_yield(n) * (1.0 + p_ap); }
    double error_yield(int n) const {
        return 0.5 * y0 + e_opt * (1.0 - std::pow(1.0 - eta, n)) + 0.5 * p_ap * base_yield(n);
    }

    template <class F>
    double poisson_sum(double mu, F&& term) const {
        double total = 0.0;
        for (int n = 0; n <= n_max; ++n) {
            const double w = std::exp(-mu + n * std::log(mu) - std::lgamma(n + 1.0));
            total += w * term(n);
        }
        return total;
    }

    double gain(double mu) const {
        return poisson_sum(mu, [&](int n) { return yield(n); });
    }
    double error_gain(double mu) const {
        return poisson_sum(mu, [&](int n) { return error_yield(n); });
    }
};

}  // namespace spadsim::test
