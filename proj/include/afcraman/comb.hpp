#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "afcraman/constants.hpp"
#include "afcraman/errors.hpp"

namespace afcraman {

// Comb geometry at the API boundary. All frequencies are plain Hz; the
// angular-frequency conversion happens once, inside CombGeometry.
struct CombParams {
    double gamma_fwhm_hz = 0.0;  // FWHM of a single tooth
    double delta0_hz = 0.0;      // tooth separation
    double big_gamma_hz = 0.0;   // envelope standard deviation
    double alpha_l = 0.0;        // peak optical depth of the central tooth
};

// Thresholds quantifying the "envelope >> spacing >> tooth width" regime.
struct ResolveThresholds {
    double envelope_to_spacing = 10.0;  // require big_gamma >= this * delta0
    double spacing_to_width = 2.0;      // require delta0 >= this * gamma_fwhm
};

inline void validate(const CombParams& c) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw validation_error(std::string("comb.") + name + " must be positive and finite");
    };
    positive(c.gamma_fwhm_hz, "gamma_fwhm_hz");
    positive(c.delta0_hz, "delta0_hz");
    positive(c.big_gamma_hz, "big_gamma_hz");
    if (!(c.alpha_l >= 0.0) || !std::isfinite(c.alpha_l))
        throw validation_error("comb.alpha_l must be nonnegative and finite");
}

inline bool well_resolved(const CombParams& c, const ResolveThresholds& th = {}) {
    return c.big_gamma_hz >= th.envelope_to_spacing * c.delta0_hz &&
           c.delta0_hz >= th.spacing_to_width * c.gamma_fwhm_hz;
}

inline WarningList comb_warnings(const CombParams& c, const ResolveThresholds& th = {}) {
    WarningList w;
    if (!well_resolved(c, th)) {
        w.push_back({"comb.not_well_resolved",
                     "comb outside the envelope >> spacing >> tooth-width regime "
                     "(big_gamma/delta0 = " + std::to_string(c.big_gamma_hz / c.delta0_hz) +
                     ", delta0/gamma = " + std::to_string(c.delta0_hz / c.gamma_fwhm_hz) +
                     "); closed forms degrade gracefully but lose accuracy"});
    }
    return w;
}

// Internal working representation: angular frequencies plus the Gaussian
// product decomposition of the tooth series. Each envelope*tooth product is
// itself a Gaussian, which gives both the closed-form Fourier transform and
// an exact sampling recipe for the distribution.
class CombGeometry {
public:
    explicit CombGeometry(const CombParams& p, double truncation_sigmas = 6.0)
        : params_(p), truncation_sigmas_(truncation_sigmas) {
        validate(p);
        if (!(truncation_sigmas > 0.0))
            throw validation_error("comb truncation_sigmas must be positive");
        delta0_ = two_pi * p.delta0_hz;
        big_gamma_ = two_pi * p.big_gamma_hz;
        gamma_fwhm_ = two_pi * p.gamma_fwhm_hz;
        gamma_tilde_ = gamma_fwhm_ / fwhm_per_sigma;
        // Tooth count from the Hz-level ratio: converting to angular units
        // first perturbs exact-integer ratios across the ceil boundary, so
        // the retained series would differ between rescaled parameter sets.
        const double teeth_span = truncation_sigmas * (p.big_gamma_hz / p.delta0_hz);
        j_max_ = static_cast<int>(std::ceil(teeth_span * (1.0 - 1e-12)));

        const double g2 = big_gamma_ * big_gamma_;
        const double t2 = gamma_tilde_ * gamma_tilde_;
        product_var_ = g2 * t2 / (g2 + t2);
        mean_slope_ = g2 / (g2 + t2);  // tooth j contributes a Gaussian at -j*delta0*mean_slope_
        component_.resize(2 * j_max_ + 1);
        double sum = 0.0;
        for (int j = -j_max_; j <= j_max_; ++j) {
            const double mu = j * delta0_;
            component_[j + j_max_] = std::exp(-mu * mu / (2.0 * (g2 + t2)));
            sum += component_[j + j_max_];
        }
        component_sum_ = sum;
    }

    const CombParams& params() const { return params_; }
    double delta0() const { return delta0_; }          // rad/s
    double big_gamma() const { return big_gamma_; }    // rad/s
    double gamma_fwhm() const { return gamma_fwhm_; }  // rad/s
    double gamma_tilde() const { return gamma_tilde_; }
    double alpha_l() const { return params_.alpha_l; }
    int j_max() const { return j_max_; }
    double truncation_sigmas() const { return truncation_sigmas_; }

    double finesse() const { return delta0_ / gamma_fwhm_; }
    double effective_depth() const { return depth_factor * params_.alpha_l / finesse(); }
    double revival_time() const { return two_pi / delta0_; }  // seconds

    // Detuning extent that contains every retained tooth out to `tail_sigmas`
    // tooth widths.
    double support(double tail_sigmas = 5.0) const {
        return (j_max_ + 0.5) * delta0_ + tail_sigmas * gamma_tilde_;
    }

    // Spectral density over angular detuning, normalized to unit integral.
    double density(double delta_rad) const {
        const double envelope =
            std::exp(-delta_rad * delta_rad / (2.0 * big_gamma_ * big_gamma_));
        // Only teeth within a generous tail distance contribute above 1e-30.
        const double reach = 13.0 * gamma_tilde_;
        const int lo = std::max(-j_max_, static_cast<int>(std::floor((-delta_rad - reach) / delta0_)));
        const int hi = std::min(j_max_, static_cast<int>(std::ceil((-delta_rad + reach) / delta0_)));
        double teeth = 0.0;
        for (int j = lo; j <= hi; ++j) {
            const double d = delta_rad + j * delta0_;
            teeth += std::exp(-d * d / (2.0 * gamma_tilde_ * gamma_tilde_));
        }
        const double prefactor = delta0_ / (two_pi * gamma_tilde_ * big_gamma_);
        return prefactor * envelope * teeth;
    }

    // Closed-form Fourier transform: each Gaussian product component
    // transforms to a Gaussian in time, so the comb transform is a phased sum
    // of identical envelopes. Exact for the truncated tooth series.
    std::complex<double> fourier_closed(double t) const {
        const double envelope = std::exp(-product_var_ * t * t / 2.0);
        double re = 0.0, im = 0.0;
        for (int j = -j_max_; j <= j_max_; ++j) {
            const double m = -static_cast<double>(j) * delta0_ * mean_slope_;
            re += component_[j + j_max_] * std::cos(m * t);
            im -= component_[j + j_max_] * std::sin(m * t);
        }
        const double prefactor = delta0_ / (two_pi * gamma_tilde_ * big_gamma_) *
                                 std::sqrt(two_pi * product_var_);
        return prefactor * envelope * std::complex<double>(re, im);
    }

    // Gaussian-mixture view used by the Monte Carlo grid sampler: component j
    // has weight `component_weight`, mean `component_mean`, and common
    // standard deviation `component_sigma`.
    double component_weight(int j) const { return component_[j + j_max_] / component_sum_; }
    double component_mean(int j) const { return -static_cast<double>(j) * delta0_ * mean_slope_; }
    double component_sigma() const { return std::sqrt(product_var_); }

private:
    CombParams params_;
    double truncation_sigmas_;
    double delta0_, big_gamma_, gamma_fwhm_, gamma_tilde_;
    int j_max_;
    double product_var_;   // variance of each envelope*tooth product Gaussian
    double mean_slope_;    // big_gamma^2 / (big_gamma^2 + gamma_tilde^2)
    std::vector<double> component_;
    double component_sum_;
};

inline double finesse(const CombParams& c) { return CombGeometry(c).finesse(); }

inline double effective_depth(const CombParams& c) { return CombGeometry(c).effective_depth(); }

// Spectral density per Hz of detuning at detuning_hz.
inline double density(const CombParams& c, double detuning_hz) {
    return two_pi * CombGeometry(c).density(two_pi * detuning_hz);
}

enum class FourierMethod { closed_form, adaptive_quadrature, fixed_grid };

namespace detail {

// Integrates fn over the comb support one tooth interval at a time. A single
// whole-interval adaptive call sees a train of spikes much narrower than the
// interval and its error estimate can miss teeth entirely; per-tooth pieces
// always present the rule with one peak.
template <class Fn>
double toothwise_integral(const CombGeometry& g, double limit, double tol, Fn&& fn) {
    using boost::math::quadrature::gauss_kronrod;
    const double half = 0.5 * g.delta0();
    double total = 0.0;
    for (int k = -g.j_max(); k <= g.j_max(); ++k) {
        const double center = k * g.delta0();
        const double lo = std::max(center - half, -limit);
        const double hi = std::min(center + half, limit);
        if (!(lo < hi)) continue;
        total += gauss_kronrod<double, 61>::integrate(fn, lo, hi, 15, tol);
    }
    return total;
}

inline std::complex<double> fourier_quadrature(const CombGeometry& g, double t, double tol) {
    const double span = g.support();
    const auto re = toothwise_integral(
        g, span, tol, [&](double d) { return g.density(d) * std::cos(d * t); });
    const auto im = toothwise_integral(
        g, span, tol, [&](double d) { return -g.density(d) * std::sin(d * t); });
    return {re, im};
}

inline std::complex<double> fourier_fixed_grid(const CombGeometry& g, double t,
                                               int samples_per_tooth) {
    const double span = 6.0 * g.big_gamma() + 0.5 * g.delta0() + 5.0 * g.gamma_tilde();
    const double h = g.gamma_fwhm() / samples_per_tooth;
    const auto n = static_cast<std::size_t>(std::ceil(2.0 * span / h)) + 1;
    double re = 0.0, im = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double d = -span + 2.0 * span * static_cast<double>(k) / static_cast<double>(n - 1);
        const double w = (k == 0 || k == n - 1) ? 0.5 : 1.0;  // trapezoid ends
        const double rho = g.density(d);
        re += w * rho * std::cos(d * t);
        im -= w * rho * std::sin(d * t);
    }
    const double step = 2.0 * span / static_cast<double>(n - 1);
    return {re * step, im * step};
}

}  // namespace detail

// Fourier transform of the spectral density at time t (seconds). The closed
// form is exact for the truncated tooth series; the quadrature methods exist
// as independent cross-checks.
inline std::complex<double> fourier(const CombParams& c, double t,
                                    FourierMethod method = FourierMethod::closed_form) {
    CombGeometry g(c);
    switch (method) {
        case FourierMethod::closed_form: return g.fourier_closed(t);
        case FourierMethod::adaptive_quadrature: return detail::fourier_quadrature(g, t, 1e-8);
        case FourierMethod::fixed_grid: return detail::fourier_fixed_grid(g, t, 40);
    }
    throw validation_error("unknown fourier method");
}

// Integral of the spectral density over +-6 envelope widths; should be 1 for
// any sane comb.
inline double normalization_integral(const CombParams& c) {
    CombGeometry g(c);
    return detail::toothwise_integral(g, 6.0 * g.big_gamma(), 1e-12,
                                      [&](double d) { return g.density(d); });
}

}  // namespace afcraman
