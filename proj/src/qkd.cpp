#include "spadsim/qkd.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "spadsim/csv.hpp"
#include "spadsim/errors.hpp"

namespace spadsim {

namespace {

constexpr double kE0 = 0.5;  // error rate of vacuum clicks

bool failed(const DesignCandidate& c) { return c.status != "ok"; }

}  // namespace

void QkdParams::validate() const {
    if (!(mu > 0.0 && nu > 0.0 && nu < mu)) {
        throw ValidationError("decoy intensities need 0 < nu < mu");
    }
    for (const double r : intensity_ratio) {
        if (!(r > 0.0)) {
            throw ValidationError("intensity ratio entries must be positive");
        }
    }
    if (!(rep_rate_hz > 0.0)) {
        throw ValidationError("repetition rate must be positive");
    }
    if (!(f_ec >= 1.0)) {
        throw ValidationError("error-correction efficiency must be >= 1");
    }
    if (!(alpha_fiber_db_per_km >= 0.0) || !(rx_loss_db >= 0.0)) {
        throw ValidationError("losses must be nonnegative");
    }
    for (const double p : {e_opt, p_ap_low, p_ap_high, sift_factor}) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw ValidationError("probabilities must lie in [0, 1]");
        }
    }
    if (!(min_channel_efficiency > 0.0)) {
        throw ValidationError("minimum channel efficiency must be positive");
    }
}

double QkdParams::signal_fraction() const {
    return intensity_ratio[0] / (intensity_ratio[0] + intensity_ratio[1] + intensity_ratio[2]);
}

double QkdParams::afterpulse_probability(double v_ex) const { return v_ex <= p_ap_threshold_v ? p_ap_low : p_ap_high; }

double channel_efficiency(double distance_km, const QkdParams& params, double pde) {
    if (!(distance_km >= 0.0)) {
        throw DomainError("distance must be nonnegative");
    }
    return std::pow(10.0, -(params.alpha_fiber_db_per_km * distance_km + params.rx_loss_db) / 10.0) * pde;
}

double dark_click_probability(double dcr_total_hz, const QkdParams& params) {
    if (!(dcr_total_hz >= 0.0)) {
        throw DomainError("dark count rate must be nonnegative");
    }
    const double per_gate = dcr_total_hz / params.rep_rate_hz * (params.two_detectors ? 2.0 : 1.0);
    return std::clamp(per_gate, 0.0, 1.0);
}

double binary_entropy(double p) {
    if (p <= 0.0 || p >= 1.0) {
        return 0.0;
    }
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

GainQber gain_and_qber(double intensity, double eta, double y0, double p_ap, const QkdParams& params) {
    if (!(intensity >= 0.0)) {
        throw DomainError("intensity must be nonnegative");
    }
    const double detect = -std::expm1(-eta * intensity);  // 1 - exp(-eta n)
    const double base = y0 + (1.0 - y0) * detect;
    GainQber out;
    out.gain = base * (1.0 + p_ap);
    if (out.gain <= 0.0) {
        out.qber = 0.5;
        return out;
    }
    const double eq = kE0 * y0 + params.e_opt * detect + 0.5 * p_ap * base;
    out.qber = std::clamp(eq / out.gain, 0.0, 0.5);
    return out;
}

DecoyBounds decoy_bounds(double q_mu, double e_mu, double q_nu, double e_nu, double y0, const QkdParams& params) {
    (void)e_mu;
    const double mu = params.mu;
    const double nu = params.nu;
    DecoyBounds out;
    const double y1 = mu / (mu * nu - nu * nu) *
                      (q_nu * std::exp(nu) - q_mu * std::exp(mu) * nu * nu / (mu * mu) - (mu * mu - nu * nu) / (mu * mu) * y0);
    if (!(y1 > 0.0)) {
        return out;
    }
    out.y1_lower = std::min(y1, 1.0);
    out.e1_upper = std::clamp((e_nu * q_nu * std::exp(nu) - kE0 * y0) / (out.y1_lower * nu), 0.0, 0.5);
    return out;
}

KeyRatePoint secure_key_rate(double distance_km, const DetectorSummary& detector, const QkdParams& params) {
    params.validate();
    if (!(detector.pde >= 0.0 && detector.pde <= 1.0)) {
        throw DomainError("PDE must lie in [0, 1]");
    }
    KeyRatePoint out;
    out.distance_km = distance_km;
    const double eta = channel_efficiency(distance_km, params, detector.pde);
    const double y0 = dark_click_probability(detector.dcr_total_hz, params);
    const double p_ap = params.afterpulse_probability(detector.v_ex);

    const auto sig = gain_and_qber(params.mu, eta, y0, p_ap, params);
    const auto dec = gain_and_qber(params.nu, eta, y0, p_ap, params);
    const auto vac = gain_and_qber(0.0, eta, y0, p_ap, params);
    out.gain_signal = sig.gain;
    out.qber = sig.qber;
    if (eta < params.min_channel_efficiency) {
        return out;
    }
    // The vacuum decoy measures Y0 including afterpulses.
    const auto bounds = decoy_bounds(sig.gain, sig.qber, dec.gain, dec.qber, vac.gain, params);
    out.y1_lower = bounds.y1_lower;
    out.e1_upper = bounds.e1_upper;
    const double q1 = bounds.y1_lower * params.mu * std::exp(-params.mu);
    const double r = -sig.gain * params.f_ec * binary_entropy(sig.qber) + q1 * (1.0 - binary_entropy(bounds.e1_upper));
    out.rate_bps = std::max(0.0, params.rep_rate_hz * params.sift_factor * params.signal_fraction() * r);
    return out;
}

KeyRatePoint secure_key_rate(double distance_km, const DetectorMetrics& metrics, const OperatingPoint& op,
                             const QkdParams& params) {
    return secure_key_rate(distance_km, DetectorSummary::from(metrics, op), params);
}

double max_distance(const DetectorSummary& detector, const QkdParams& params) {
    params.validate();
    const auto rate = [&](double d) { return secure_key_rate(d, detector, params).rate_bps; };
    if (detector.pde <= 0.0 || rate(0.0) <= 0.0) {
        return 0.0;
    }
    // Distance where the channel efficiency hits the underflow guard.
    double guard = (10.0 * std::log10(detector.pde / params.min_channel_efficiency) - params.rx_loss_db) /
                   std::max(params.alpha_fiber_db_per_km, 1e-12);
    guard = std::max(guard, 0.0);
    if (rate(guard) > 0.0) {
        return guard;
    }
    double lo = 0.0;
    double hi = guard;
    while (hi - lo > 0.1) {
        const double mid = 0.5 * (lo + hi);
        (rate(mid) > 0.0 ? lo : hi) = mid;
    }
    return lo;
}

double max_distance(const DetectorMetrics& metrics, const OperatingPoint& op, const QkdParams& params) {
    return max_distance(DetectorSummary::from(metrics, op), params);
}

std::vector<KeyRatePoint> key_rate_curve(const DetectorSummary& detector, const std::vector<double>& distances_km,
                                         const QkdParams& params) {
    std::vector<KeyRatePoint> out;
    out.reserve(distances_km.size());
    for (const double d : distances_km) {
        out.push_back(secure_key_rate(d, detector, params));
    }
    return out;
}

void write_key_rate_csv(std::ostream& out, const std::vector<KeyRatePoint>& points) {
    CsvWriter csv(out, {"distance_km", "rate_bps", "qber", "q_mu", "y1_lower", "e1_upper"});
    for (const auto& p : points) {
        csv.row({p.distance_km, p.rate_bps, p.qber, p.gain_signal, p.y1_lower, p.e1_upper});
    }
}

void rank_candidates(std::vector<DesignCandidate>& candidates) {
    std::stable_sort(candidates.begin(), candidates.end(), [](const DesignCandidate& a, const DesignCandidate& b) {
        if (failed(a) != failed(b)) {
            return !failed(a);
        }
        if (a.rate_bps != b.rate_bps) {
            return a.rate_bps > b.rate_bps;
        }
        if (a.dcr_total_hz != b.dcr_total_hz) {
            return a.dcr_total_hz < b.dcr_total_hz;
        }
        if (a.v_ex != b.v_ex) {
            return a.v_ex < b.v_ex;
        }
        return a.l_mul_um < b.l_mul_um;
    });
}

OptimizationResult optimize_design(const DeviceStack& base, double distance_km, const DesignSearchSpace& space,
                                   const QkdParams& params, const SimulationContext& ctx,
                                   const std::optional<ChargeTuning>& tuning, unsigned workers) {
    params.validate();
    if (!(distance_km >= 0.0)) {
        throw DomainError("distance must be nonnegative");
    }
    SweepSpec spec;
    spec.base = base;
    spec.l_abs_um = space.l_abs_um;
    spec.l_mul_um = space.l_mul_um;
    spec.t_k = space.t_k;
    spec.v_ex = space.v_ex;
    spec.wavelength_nm = space.wavelength_nm;
    spec.tuning = tuning;
    const auto rows = run_sweep(spec, ctx, workers);

    OptimizationResult result;
    result.distance_km = distance_km;
    result.ranking.reserve(rows.size());
    for (const auto& row : rows) {
        DesignCandidate c;
        c.l_abs_um = row.l_abs_um;
        c.l_mul_um = row.l_mul_um;
        c.t_k = row.t_k;
        c.v_ex = row.v_ex;
        c.status = row.status;
        if (row.metrics) {
            c.pde = row.metrics->pde;
            c.dcr_total_hz = row.metrics->dcr.total_hz;
            c.rate_bps = secure_key_rate(distance_km, DetectorSummary{c.pde, c.dcr_total_hz, c.v_ex}, params).rate_bps;
        }
        result.ranking.push_back(c);
    }
    rank_candidates(result.ranking);
    if (!result.ranking.empty() && !failed(result.ranking.front()) && result.ranking.front().rate_bps > 0.0) {
        result.best = result.ranking.front();
    }
    return result;
}

std::string optimization_report_json(const OptimizationResult& result, int indent) {
    using json = nlohmann::ordered_json;
    const auto candidate = [](const DesignCandidate& c) {
        return json{{"l_abs_um", c.l_abs_um}, {"l_mul_um", c.l_mul_um}, {"t_k", c.t_k},
                    {"v_ex_v", c.v_ex},        {"rate_bps", c.rate_bps}, {"pde", c.pde},
                    {"dcr_total_hz", c.dcr_total_hz}, {"status", c.status}};
    };
    json doc;
    doc["distance_km"] = result.distance_km;
    doc["status"] = result.has_key() ? "ok" : "no-key";
    doc["best"] = result.best ? candidate(*result.best) : json(nullptr);
    json ranking = json::array();
    for (const auto& c : result.ranking) {
        ranking.push_back(candidate(c));
    }
    doc["ranking"] = std::move(ranking);
    return doc.dump(indent);
}

}  // namespace spadsim
