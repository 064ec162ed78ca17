#pragma once

#include <cmath>
#include <numbers>

namespace afcraman {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double ln2 = std::numbers::ln2;

// FWHM of a Gaussian in units of its standard deviation: sqrt(8 ln 2).
inline const double fwhm_per_sigma = std::sqrt(8.0 * ln2);

// Comb-average factor: effective depth = depth_factor * alpha_L / finesse
// for Gaussian teeth, i.e. sqrt(pi / (4 ln 2)).
inline const double depth_factor = std::sqrt(pi / (4.0 * ln2));

// Tooth-width dephasing penalty at the first revival: exp(-pi^2/(2 ln2 F^2)).
inline double dephasing_factor(double finesse) {
    return std::exp(-pi * pi / (2.0 * ln2 * finesse * finesse));
}

}  // namespace afcraman
