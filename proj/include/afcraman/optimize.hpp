#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "afcraman/analytic.hpp"
#include "afcraman/constants.hpp"
#include "afcraman/errors.hpp"

namespace afcraman {

enum class Objective { raman_backward, raman_forward, memory_backward, memory_forward };

inline std::string to_string(Objective o) {
    switch (o) {
        case Objective::raman_backward: return "raman_backward";
        case Objective::raman_forward: return "raman_forward";
        case Objective::memory_backward: return "memory_backward";
        case Objective::memory_forward: return "memory_forward";
    }
    return "unknown";
}

inline Objective objective_from_string(const std::string& s) {
    if (s == "raman_backward") return Objective::raman_backward;
    if (s == "raman_forward") return Objective::raman_forward;
    if (s == "memory_backward") return Objective::memory_backward;
    if (s == "memory_forward") return Objective::memory_forward;
    throw validation_error("unknown objective '" + s +
                           "' (expected raman_backward, raman_forward, memory_backward "
                           "or memory_forward)");
}

// Efficiency as a function of finesse at fixed peak depth alpha_L. The
// effective depth abar L = depth_factor * alpha_L / F falls with F while the
// tooth-width dephasing penalty shrinks, producing an interior optimum.
inline double objective_value(Objective o, double alpha_l, double f) {
    const double depth = depth_factor * alpha_l / f;
    switch (o) {
        case Objective::raman_backward: return formulas::raman_backward(depth, f);
        case Objective::raman_forward: return formulas::raman_forward(depth, f);
        case Objective::memory_backward: return formulas::memory_backward(depth, f);
        case Objective::memory_forward: return formulas::memory_forward(depth, f);
    }
    throw validation_error("unknown objective");
}

struct FinesseBounds {
    double f_min = 1.2;
    double f_max = 100.0;
};

enum class BoundaryHit { none, lower, upper };

struct OptimizationResult {
    std::string objective;
    double alpha_l = 0.0;
    double f_star = 0.0;
    double eta_star = 0.0;
    BoundaryHit boundary = BoundaryHit::none;
    double f_min = 0.0;
    double f_max = 0.0;
    int coarse_points = 0;
    double tolerance = 0.0;
};

namespace detail {

// Golden-section maximization on [a, b]; assumes unimodality on the bracket.
template <class Fn>
double golden_section_max(Fn&& fn, double a, double b, double tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = fn(x1), f2 = fn(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = fn(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = fn(x1);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace detail

// Best finesse at fixed depth: coarse scan to bracket the maximum, then
// golden-section refinement to |dF| < 1e-3.
inline OptimizationResult optimize_finesse(double alpha_l, Objective objective,
                                           const FinesseBounds& bounds = {}) {
    if (!(alpha_l > 0.0) || !std::isfinite(alpha_l))
        throw validation_error("optimize_finesse requires alpha_l > 0");
    if (!(bounds.f_min > 1.0) || !(bounds.f_max > bounds.f_min))
        throw validation_error("finesse bounds must satisfy 1 < f_min < f_max");

    constexpr int coarse_points = 400;
    constexpr double tol = 1e-3;
    const auto fn = [&](double f) { return objective_value(objective, alpha_l, f); };

    // Scan log-spaced to treat the wide range evenly.
    const double la = std::log(bounds.f_min), lb = std::log(bounds.f_max);
    int best = 0;
    double best_val = -1.0;
    for (int i = 0; i < coarse_points; ++i) {
        const double f = std::exp(la + (lb - la) * i / (coarse_points - 1));
        const double v = fn(f);
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    const auto grid_f = [&](int i) {
        return std::exp(la + (lb - la) * std::clamp(i, 0, coarse_points - 1) /
                        (coarse_points - 1));
    };
    const double lo = grid_f(best - 1);
    const double hi = grid_f(best + 1);
    const double f_star = detail::golden_section_max(fn, lo, hi, tol);

    OptimizationResult r;
    r.objective = to_string(objective);
    r.alpha_l = alpha_l;
    r.f_star = f_star;
    r.eta_star = fn(f_star);
    r.f_min = bounds.f_min;
    r.f_max = bounds.f_max;
    r.coarse_points = coarse_points;
    r.tolerance = tol;
    if (best == 0 || f_star - bounds.f_min < 2.0 * tol)
        r.boundary = BoundaryHit::lower;
    else if (best == coarse_points - 1 || bounds.f_max - f_star < 2.0 * tol)
        r.boundary = BoundaryHit::upper;
    // A maximum sitting on the boundary is the boundary point itself.
    if (r.boundary == BoundaryHit::lower && fn(bounds.f_min) >= r.eta_star) {
        r.f_star = bounds.f_min;
        r.eta_star = fn(bounds.f_min);
    } else if (r.boundary == BoundaryHit::upper && fn(bounds.f_max) >= r.eta_star) {
        r.f_star = bounds.f_max;
        r.eta_star = fn(bounds.f_max);
    }
    return r;
}

struct CurvePoint {
    double alpha_l = 0.0;
    double f_star = 0.0;
    double eta_star = 0.0;
};

// Optimized efficiency against depth, for trade-off plots. alpha_l = 0 rows
// report zero efficiency with an undefined finesse.
inline std::vector<CurvePoint> efficiency_curve(Objective objective,
                                                const std::vector<double>& alpha_l_grid,
                                                const FinesseBounds& bounds = {}) {
    if (alpha_l_grid.empty())
        throw validation_error("efficiency_curve requires a nonempty alpha_l grid");
    for (std::size_t i = 0; i < alpha_l_grid.size(); ++i) {
        if (!(alpha_l_grid[i] >= 0.0))
            throw validation_error("efficiency_curve grid values must be >= 0");
        if (i > 0 && !(alpha_l_grid[i] > alpha_l_grid[i - 1]))
            throw validation_error("efficiency_curve grid must be strictly increasing");
    }
    std::vector<CurvePoint> curve;
    curve.reserve(alpha_l_grid.size());
    for (double a : alpha_l_grid) {
        CurvePoint pt;
        pt.alpha_l = a;
        if (a == 0.0) {
            pt.f_star = std::numeric_limits<double>::quiet_NaN();
            pt.eta_star = 0.0;
        } else {
            const auto r = optimize_finesse(a, objective, bounds);
            pt.f_star = r.f_star;
            pt.eta_star = r.eta_star;
        }
        curve.push_back(pt);
    }
    return curve;
}

}  // namespace afcraman
