#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "afcraman/comb.hpp"
#include "afcraman/constants.hpp"
#include "afcraman/errors.hpp"

namespace afcraman {

// Pulse areas and protocol timing. The write and read pulses enter the model
// only through their areas; temporal pulse shapes are out of scope.
struct ProtocolParams {
    double theta0_sq = 0.0;      // squared write-pulse area (entrance excitation probability)
    double t_d_s = 0.0;          // Stokes detection time after the write pulse
    double tau_s = 0.0;          // delay between detection and the read pulse
    double read_area = pi;       // read pulse area, treated as an exact population exchange
    double branching_ratio = 1.0;  // emission branching ratio multiplier on the Stokes leg
};

inline void validate(const ProtocolParams& p) {
    if (!(p.theta0_sq >= 0.0) || !std::isfinite(p.theta0_sq))
        throw validation_error("protocol.theta0_sq must be nonnegative and finite");
    if (p.theta0_sq > 0.3)
        throw validation_error("protocol.theta0_sq = " + std::to_string(p.theta0_sq) +
                               " is outside the perturbative regime (limit 0.3)");
    if (!(p.t_d_s >= 0.0) || !std::isfinite(p.t_d_s))
        throw validation_error("protocol.t_d_s must be nonnegative and finite");
    if (!(p.tau_s >= 0.0) || !std::isfinite(p.tau_s))
        throw validation_error("protocol.tau_s must be nonnegative and finite");
    if (!(p.read_area > 0.0) || !std::isfinite(p.read_area))
        throw validation_error("protocol.read_area must be positive and finite");
    if (!(p.branching_ratio > 0.0) || p.branching_ratio > 1.0)
        throw validation_error("protocol.branching_ratio must be in (0, 1]");
}

inline WarningList protocol_warnings(const ProtocolParams& p) {
    WarningList w;
    if (p.theta0_sq > 0.1)
        w.push_back({"protocol.theta0_sq_large",
                     "theta0_sq = " + std::to_string(p.theta0_sq) +
                     " exceeds 0.1; first-order emission formulas drift by more than ~5%"});
    if (std::abs(p.read_area - pi) > 1e-6)
        w.push_back({"protocol.read_area_not_pi",
                     "read_area differs from pi; the model still applies an exact "
                     "population exchange"});
    return w;
}

// Detection must precede the first revival, otherwise the echo would predate
// the read pulse.
inline void require_detection_before_revival(const CombParams& c, const ProtocolParams& p) {
    const double revival = 1.0 / c.delta0_hz;  // 2*pi / angular tooth spacing
    if (p.t_d_s >= revival)
        throw regime_error("detection time t_d = " + std::to_string(p.t_d_s) +
                           " s does not precede the revival at 2*pi/delta0 = " +
                           std::to_string(revival) + " s");
}

// Closed forms expressed directly in the effective depth x = abar*L and the
// finesse F. Everything downstream delegates here.
namespace formulas {

inline double stokes_per_mode(double theta0_sq, double depth) {
    return theta0_sq * (1.0 - std::exp(-depth));
}

inline double raman_backward(double depth, double finesse) {
    return (1.0 - std::exp(-depth)) * dephasing_factor(finesse);
}

// Forward retrieval is reabsorption-limited: the depth factor
// x^2 e^{-x} / (1 - e^{-x}) peaks near x = 1.59 and never reaches 1.
inline double raman_forward_depth_factor(double depth) {
    if (depth == 0.0) return 0.0;
    return depth * depth * std::exp(-depth) / (1.0 - std::exp(-depth));
}

inline double raman_forward(double depth, double finesse) {
    return raman_forward_depth_factor(depth) * dephasing_factor(finesse);
}

// A memory must first absorb the photon, which squares the depth term.
inline double memory_backward(double depth, double finesse) {
    const double a = 1.0 - std::exp(-depth);
    return a * a * dephasing_factor(finesse);
}

inline double memory_forward_depth_factor(double depth) {
    return depth * depth * std::exp(-depth);
}

inline double memory_forward(double depth, double finesse) {
    return memory_forward_depth_factor(depth) * dephasing_factor(finesse);
}

inline double noise_per_mode(double theta0_sq, double depth) {
    return 0.5 * theta0_sq * (1.0 - std::exp(-2.0 * depth));
}

}  // namespace formulas

// Mean Stokes photons per temporal mode; this is the heralding probability p.
inline double stokes_photons_per_mode(const CombParams& c, const ProtocolParams& p) {
    return p.branching_ratio * formulas::stokes_per_mode(p.theta0_sq, effective_depth(c));
}

// Usable comb span. The envelope parameter is a Gaussian standard deviation;
// the feasibility bookkeeping (mode capacity, photons per attempt) counts the
// full span of two envelope widths.
inline double comb_span_hz(const CombParams& c) { return 2.0 * c.big_gamma_hz; }

// Total Stokes photons over one storage window 2*pi/delta0, i.e. p times the
// number of temporal modes sqrt(2*pi) * span / delta0.
inline double photons_per_write_attempt(const CombParams& c, const ProtocolParams& p) {
    return std::sqrt(two_pi) * comb_span_hz(c) / c.delta0_hz * stokes_photons_per_mode(c, p);
}

// Fully inverted ensemble: the per-mode Stokes number grows to e^x - 1.
inline double saturated_gain_photons(const CombParams& c) {
    return std::expm1(effective_depth(c));
}

inline double readout_efficiency_backward(const CombParams& c) {
    return formulas::raman_backward(effective_depth(c), finesse(c));
}

inline double readout_efficiency_forward(const CombParams& c) {
    return formulas::raman_forward(effective_depth(c), finesse(c));
}

enum class Direction { backward, forward };

inline double afc_memory_efficiency(const CombParams& c, Direction d) {
    const double depth = effective_depth(c);
    const double f = finesse(c);
    return d == Direction::backward ? formulas::memory_backward(depth, f)
                                    : formulas::memory_forward(depth, f);
}

// Worst-case spontaneous photons in the anti-Stokes mode from the unheralded
// excited population.
inline double noise_per_mode(const CombParams& c, const ProtocolParams& p) {
    return p.branching_ratio * formulas::noise_per_mode(p.theta0_sq, effective_depth(c));
}

// Finite-depth signal-to-noise bound, constructed from the module's own
// signal and noise expressions so the three stay consistent by definition.
inline double snr_bound(const CombParams& c, const ProtocolParams& p) {
    if (p.theta0_sq <= 0.0)
        throw validation_error("snr_bound requires theta0_sq > 0");
    return readout_efficiency_backward(c) / noise_per_mode(c, p);
}

inline double snr_asymptotic(const ProtocolParams& p) {
    if (p.theta0_sq <= 0.0)
        throw validation_error("snr_asymptotic requires theta0_sq > 0");
    return 2.0 / p.theta0_sq;
}

inline int mode_capacity(const CombParams& c) {
    return static_cast<int>(std::floor(comb_span_hz(c) / c.delta0_hz));
}

struct EfficiencyReport {
    double p_stokes = 0.0;
    double eta_readout = 0.0;
    double noise_per_mode = 0.0;
    double snr_lower_bound = 0.0;  // +inf when theta0_sq = 0 (no noise source)
    double echo_time_s = 0.0;
    int mode_capacity = 0;
    double photons_per_write_attempt = 0.0;
    WarningList warnings;
};

inline EfficiencyReport full_report(const CombParams& c, const ProtocolParams& p) {
    validate(c);
    validate(p);
    require_detection_before_revival(c, p);
    EfficiencyReport r;
    r.p_stokes = stokes_photons_per_mode(c, p);
    r.eta_readout = readout_efficiency_backward(c);
    r.noise_per_mode = noise_per_mode(c, p);
    r.snr_lower_bound = p.theta0_sq > 0.0 ? snr_bound(c, p)
                                          : std::numeric_limits<double>::infinity();
    r.echo_time_s = 1.0 / c.delta0_hz;
    r.mode_capacity = mode_capacity(c);
    r.photons_per_write_attempt = photons_per_write_attempt(c, p);
    r.warnings = comb_warnings(c);
    const auto pw = protocol_warnings(p);
    r.warnings.insert(r.warnings.end(), pw.begin(), pw.end());
    return r;
}

}  // namespace afcraman
