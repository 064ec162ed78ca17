#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "afcraman/analytic.hpp"
#include "afcraman/errors.hpp"

namespace afcraman {

// Two crystals separated by distance_km, each sending its Stokes photon
// through fiber to a beamsplitter at the midpoint station.
struct LinkParams {
    double distance_km = 0.0;
    double attenuation_db_per_km = 0.0;
    double eta_c = 0.0;    // source-to-fiber coupling efficiency
    double eta_d = 0.0;    // detector efficiency
    double rate_hz = 0.0;  // write-attempt repetition rate
    double p = 0.0;        // Stokes emission probability per mode
};

enum class DistanceConvention {
    half,  // photons travel distance/2 to the central station
    full,  // photons travel the whole separation
};

inline void validate(const LinkParams& lp) {
    auto in01 = [](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0))
            throw validation_error(std::string("link.") + name + " must lie in [0, 1]");
    };
    if (!(lp.distance_km >= 0.0) || !std::isfinite(lp.distance_km))
        throw validation_error("link.distance_km must be nonnegative and finite");
    if (!(lp.attenuation_db_per_km >= 0.0) || !std::isfinite(lp.attenuation_db_per_km))
        throw validation_error("link.attenuation_db_per_km must be nonnegative and finite");
    in01(lp.eta_c, "eta_c");
    in01(lp.eta_d, "eta_d");
    if (!(lp.rate_hz > 0.0) || !std::isfinite(lp.rate_hz))
        throw validation_error("link.rate_hz must be positive and finite");
    if (!(lp.p > 0.0 && lp.p < 1.0))
        throw validation_error("link.p must lie in (0, 1)");
}

inline WarningList link_warnings(const LinkParams& lp) {
    WarningList w;
    if (lp.p > 0.2)
        w.push_back({"link.p_large",
                     "p = " + std::to_string(lp.p) +
                     " exceeds 0.2; the two-photon fidelity penalty grows linearly in p "
                     "and the formula loses accuracy"});
    return w;
}

// Fiber transmission to the central station.
inline double transmission(double distance_km, double attenuation_db_per_km,
                           DistanceConvention convention = DistanceConvention::half) {
    const double travelled =
        convention == DistanceConvention::half ? 0.5 * distance_km : distance_km;
    return std::pow(10.0, -attenuation_db_per_km * travelled / 10.0);
}

// Mean time to herald entanglement between the two crystals.
inline double entangle_time(const LinkParams& lp,
                            DistanceConvention convention = DistanceConvention::half) {
    validate(lp);
    const double eta_t = transmission(lp.distance_km, lp.attenuation_db_per_km, convention);
    const double denominator = 2.0 * lp.rate_hz * lp.p * lp.eta_c * eta_t * lp.eta_d;
    if (!(denominator > 0.0))
        throw validation_error("entangle_time requires every rate and efficiency factor "
                               "to be positive");
    return 1.0 / denominator;
}

// Entangled-state fidelity after heralding; multi-pair emission trades off
// against loss. Values must land in [0, 1] on their own: an excursion means
// the inputs left the formula's regime, and is an error rather than a clamp.
inline double fidelity(const LinkParams& lp,
                       DistanceConvention convention = DistanceConvention::half) {
    validate(lp);
    const double eta_t = transmission(lp.distance_km, lp.attenuation_db_per_km, convention);
    const double value = 1.0 - 3.0 * lp.p * (1.0 - lp.eta_c * eta_t * lp.eta_d);
    if (value < 0.0 || value > 1.0)
        throw regime_error("fidelity formula returned " + std::to_string(value) +
                           ", outside [0, 1]; inputs are outside the small-p regime");
    return value;
}

// Material parameter set sufficient to build a comb and a link budget.
// The comb span here is the full usable bandwidth; the envelope standard
// deviation is half of it.
struct MaterialPreset {
    std::string name;
    double gamma_fwhm_hz = 0.0;
    double big_gamma_span_hz = 0.0;
    double alpha_l = 0.0;
    double wavelength_nm = 0.0;
    double attenuation_db_per_km = 0.0;
};

inline void validate(const MaterialPreset& m) {
    if (m.name.empty()) throw validation_error("preset.name must be nonempty");
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw validation_error(std::string("preset.") + name +
                                   " must be positive and finite");
    };
    positive(m.gamma_fwhm_hz, "gamma_fwhm_hz");
    positive(m.big_gamma_span_hz, "big_gamma_span_hz");
    positive(m.alpha_l, "alpha_l");
    positive(m.wavelength_nm, "wavelength_nm");
    positive(m.attenuation_db_per_km, "attenuation_db_per_km");
}

// Comb built from a preset at a chosen tooth spacing.
inline CombParams comb_from_preset(const MaterialPreset& m, double delta0_hz) {
    validate(m);
    if (!(delta0_hz > 0.0))
        throw validation_error("preset comb requires delta0_hz > 0");
    CombParams c;
    c.gamma_fwhm_hz = m.gamma_fwhm_hz;
    c.delta0_hz = delta0_hz;
    c.big_gamma_hz = 0.5 * m.big_gamma_span_hz;
    c.alpha_l = m.alpha_l;
    return c;
}

inline std::vector<MaterialPreset> builtin_presets() {
    return {
        // Praseodymium-doped yttrium orthosilicate, 606 nm transition.
        {"pr_yso_606nm", 30e3, 2e6, 10.0, 606.0, 9.0},
    };
}

inline MaterialPreset find_preset(const std::vector<MaterialPreset>& presets,
                                  const std::string& name) {
    for (const auto& m : presets)
        if (m.name == name) return m;
    throw validation_error("unknown preset '" + name + "'");
}

struct LinkReport {
    double eta_t = 0.0;
    double entangle_time_s = 0.0;
    double fidelity = 0.0;
};

inline LinkReport link_report(const LinkParams& lp,
                              DistanceConvention convention = DistanceConvention::half) {
    LinkReport r;
    r.eta_t = transmission(lp.distance_km, lp.attenuation_db_per_km, convention);
    r.entangle_time_s = entangle_time(lp, convention);
    r.fidelity = fidelity(lp, convention);
    return r;
}

struct FeasibilityReport {
    EfficiencyReport comb;
    LinkReport link;
    double tomography_time_s = 0.0;
    long heralds_needed = 0;
    bool phase_stabilization_required = true;  // interferometric links need active
                                               // fiber-length stabilization
    WarningList warnings;
};

// End-to-end feasibility: comb predictions plus link budget plus a
// data-collection time estimate. When lp.p is zero it is derived from the
// comb and protocol; otherwise the caller's value is used as-is.
inline FeasibilityReport feasibility_report(const MaterialPreset& preset, double delta0_hz,
                                            LinkParams lp, const ProtocolParams& pp,
                                            long heralds_needed = 10000,
                                            DistanceConvention convention =
                                                DistanceConvention::half) {
    if (heralds_needed <= 0)
        throw validation_error("heralds_needed must be positive");
    const CombParams comb = comb_from_preset(preset, delta0_hz);
    if (lp.attenuation_db_per_km == 0.0)
        lp.attenuation_db_per_km = preset.attenuation_db_per_km;
    FeasibilityReport r;
    r.comb = full_report(comb, pp);
    if (lp.p == 0.0) lp.p = r.comb.p_stokes;
    r.link = link_report(lp, convention);
    r.heralds_needed = heralds_needed;
    r.tomography_time_s = static_cast<double>(heralds_needed) * r.link.entangle_time_s;
    r.warnings = r.comb.warnings;
    const auto lw = link_warnings(lp);
    r.warnings.insert(r.warnings.end(), lw.begin(), lw.end());
    return r;
}

}  // namespace afcraman
