#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spadsim/detector.hpp"

namespace spadsim {

/// Decoy-state BB84 protocol and link constants.
struct QkdParams {
    double mu = 0.6;                             // signal mean photon number
    double nu = 0.2;                             // decoy mean photon number
    std::array<double, 3> intensity_ratio{6.0, 1.0, 1.0};  // signal : decoy : vacuum
    double rep_rate_hz = 1e9;
    double f_ec = 1.2;
    double alpha_fiber_db_per_km = 0.2;
    double rx_loss_db = 3.0;
    double e_opt = 0.01;
    double p_ap_low = 0.01;
    double p_ap_high = 0.03;
    double p_ap_threshold_v = 4.0;               // p_ap_low applies for v_ex <= threshold
    double sift_factor = 0.5;
    bool two_detectors = false;                  // doubles the dark-click probability
    double min_channel_efficiency = 1e-30;       // below this the link is treated as cut

    void validate() const;
    double signal_fraction() const;
    double afterpulse_probability(double v_ex) const;
};

struct GainQber {
    double gain = 0.0;
    double qber = 0.0;
};

struct DecoyBounds {
    double y1_lower = 0.0;
    double e1_upper = 0.5;
};

struct KeyRatePoint {
    double distance_km = 0.0;
    double rate_bps = 0.0;
    double qber = 0.5;
    double gain_signal = 0.0;
    double y1_lower = 0.0;
    double e1_upper = 0.5;
};

/// Detector-side inputs to the key-rate model.
struct DetectorSummary {
    double pde = 0.0;
    double dcr_total_hz = 0.0;
    double v_ex = 0.0;

    static DetectorSummary from(const DetectorMetrics& m, const OperatingPoint& op) {
        return {m.pde, m.dcr.total_hz, op.v_ex};
    }
};

/// 10^(-(alpha_f d + t)/10) * pde.
double channel_efficiency(double distance_km, const QkdParams& params, double pde);

/// Dark clicks per gate, dcr / rep_rate (twice that with two detectors), clamped to [0, 1].
double dark_click_probability(double dcr_total_hz, const QkdParams& params);

/// Binary entropy in bits, with H2(0) = H2(1) = 0.
double binary_entropy(double p);

/// Gain and error rate of a coherent state with the given mean photon number.
GainQber gain_and_qber(double intensity, double eta, double y0, double p_ap, const QkdParams& params);

/// Weak + vacuum decoy bounds on the single-photon yield and error rate.
DecoyBounds decoy_bounds(double q_mu, double e_mu, double q_nu, double e_nu, double y0, const QkdParams& params);

KeyRatePoint secure_key_rate(double distance_km, const DetectorSummary& detector, const QkdParams& params = {});
KeyRatePoint secure_key_rate(double distance_km, const DetectorMetrics& metrics, const OperatingPoint& op,
                             const QkdParams& params = {});

/// Largest distance with a positive rate, to 0.1 km.
double max_distance(const DetectorSummary& detector, const QkdParams& params = {});
double max_distance(const DetectorMetrics& metrics, const OperatingPoint& op, const QkdParams& params = {});

std::vector<KeyRatePoint> key_rate_curve(const DetectorSummary& detector, const std::vector<double>& distances_km,
                                         const QkdParams& params = {});

/// Columns: distance_km, rate_bps, qber, q_mu, y1_lower, e1_upper
void write_key_rate_csv(std::ostream& out, const std::vector<KeyRatePoint>& points);

struct DesignSearchSpace {
    std::vector<double> l_abs_um;
    std::vector<double> l_mul_um;
    std::vector<double> t_k;
    std::vector<double> v_ex;
    double wavelength_nm = 1550.0;
};

struct DesignCandidate {
    double l_abs_um = 0.0;
    double l_mul_um = 0.0;
    double t_k = 0.0;
    double v_ex = 0.0;
    double rate_bps = 0.0;
    double pde = 0.0;
    double dcr_total_hz = 0.0;
    std::string status = "ok";
};

struct OptimizationResult {
    double distance_km = 0.0;
    std::optional<DesignCandidate> best;  // empty when no candidate yields key ("no-key")
    std::vector<DesignCandidate> ranking;

    bool has_key() const { return best.has_value(); }
};

/// Orders by rate (descending), then DCR, v_ex and L_mul (ascending). Failed candidates go last.
void rank_candidates(std::vector<DesignCandidate>& candidates);

/// Exhaustive grid search for the highest key rate at a fixed distance.
OptimizationResult optimize_design(const DeviceStack& base, double distance_km, const DesignSearchSpace& space,
                                   const QkdParams& params = {}, const SimulationContext& ctx = {},
                                   const std::optional<ChargeTuning>& tuning = ChargeTuning{}, unsigned workers = 0);

/// Structured optimizer report (best point plus the full ranking) as JSON text.
std::string optimization_report_json(const OptimizationResult& result, int indent = 2);

}  // namespace spadsim
