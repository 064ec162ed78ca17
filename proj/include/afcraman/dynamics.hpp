#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "afcraman/analytic.hpp"
#include "afcraman/comb.hpp"
#include "afcraman/constants.hpp"
#include "afcraman/errors.hpp"
#include "afcraman/parallel.hpp"
#include "afcraman/quadrature.hpp"

namespace afcraman {

// Discretization controls for the ensemble oracle.
struct GridSpec {
    int n_z = 64;                      // Gauss-Legendre nodes over the crystal length
    double classes_per_fwhm = 8.0;     // detuning classes per tooth FWHM
    double envelope_sigmas = 6.0;      // tooth-series truncation, in envelope widths
    double tooth_tail_sigmas = 5.0;    // detuning extent beyond the outermost tooth
    double time_step_fraction = 20.0;  // dt = (1 / big_gamma) / time_step_fraction
    bool force = false;                // accept under-resolved detuning grids

    enum class Sampling { quadrature, monte_carlo };
    Sampling sampling = Sampling::quadrature;
    int n_atoms = 20000;          // Monte Carlo detuning samples
    std::uint64_t seed = 1;       // Monte Carlo reproducibility
};

// Discrete (z, detuning) ensemble. The detuning axis carries the spectral
// distribution through its weights; the z axis is a quadrature over the
// normalized crystal length.
struct EnsembleGrid {
    CombGeometry geometry;
    GridSpec spec;
    std::vector<double> z_nodes;      // in [0, 1]
    std::vector<double> z_weights;    // sum to 1
    std::vector<double> detunings;    // rad/s
    std::vector<double> freq_weights; // sum to 1
    double dt_s = 0.0;                // trace time step

    int n_z() const { return static_cast<int>(z_nodes.size()); }
    int n_freq() const { return static_cast<int>(detunings.size()); }
    double revival_time_s() const { return geometry.revival_time(); }
    // Temporal-mode duration sqrt(2*pi)/big_gamma used for flux normalization.
    double mode_window_s() const { return std::sqrt(two_pi) / geometry.big_gamma(); }
};

namespace detail {

// 53-bit uniform in [0, 1) from a raw 64-bit generator, fixed across
// platforms so seeded runs are reproducible everywhere.
template <class Rng>
double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

inline EnsembleGrid build_grid(const CombParams& c, const GridSpec& spec = {}) {
    validate(c);
    if (spec.n_z < 2) throw validation_error("grid.n_z must be >= 2");
    if (!(spec.classes_per_fwhm > 0.0))
        throw validation_error("grid.classes_per_fwhm must be positive");
    if (spec.classes_per_fwhm < 8.0 && !spec.force)
        throw validation_error(
            "grid.classes_per_fwhm = " + std::to_string(spec.classes_per_fwhm) +
            " under-resolves the comb teeth (minimum 8); set grid.force to override");
    if (!(spec.time_step_fraction >= 1.0))
        throw validation_error("grid.time_step_fraction must be >= 1");

    EnsembleGrid g{CombGeometry(c, spec.envelope_sigmas), spec, {}, {}, {}, {}, 0.0};
    auto zr = gauss_legendre_01(spec.n_z);
    g.z_nodes = std::move(zr.nodes);
    g.z_weights = std::move(zr.weights);

    if (spec.sampling == GridSpec::Sampling::quadrature) {
        const double h = g.geometry.gamma_fwhm() / spec.classes_per_fwhm;
        const double span = g.geometry.support(spec.tooth_tail_sigmas);
        const int m = static_cast<int>(std::ceil(span / h));
        g.detunings.resize(2 * m + 1);
        g.freq_weights.resize(2 * m + 1);
        double sum = 0.0;
        for (int k = -m; k <= m; ++k) {
            const double d = k * h;
            const double w = g.geometry.density(d);
            g.detunings[k + m] = d;
            g.freq_weights[k + m] = w;
            sum += w;
        }
        for (auto& w : g.freq_weights) w /= sum;
    } else {
        if (spec.n_atoms < 2) throw validation_error("grid.n_atoms must be >= 2");
        // Sample the Gaussian-mixture form of the distribution directly:
        // pick a tooth component by its weight, then draw from its Gaussian.
        std::mt19937_64 rng(spec.seed);
        const int jm = g.geometry.j_max();
        std::vector<double> cumulative(2 * jm + 1);
        double acc = 0.0;
        for (int j = -jm; j <= jm; ++j) {
            acc += g.geometry.component_weight(j);
            cumulative[j + jm] = acc;
        }
        g.detunings.resize(spec.n_atoms);
        g.freq_weights.assign(spec.n_atoms, 1.0 / spec.n_atoms);
        const double sigma = g.geometry.component_sigma();
        for (int i = 0; i < spec.n_atoms; ++i) {
            const double u = detail::uniform01(rng) * acc;
            const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
            const int j = static_cast<int>(it - cumulative.begin()) - jm;
            const double u1 = std::max(detail::uniform01(rng), 0x1.0p-60);
            const double u2 = detail::uniform01(rng);
            const double gauss = std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
            g.detunings[i] = g.geometry.component_mean(std::clamp(j, -jm, jm)) + sigma * gauss;
        }
    }
    g.dt_s = 1.0 / g.geometry.big_gamma() / spec.time_step_fraction;
    return g;
}

enum class Scenario { unwritten, written };

// Mean-field ensemble state after the write pulse. The write amplitudes
// depend only on z; detuning classes start in phase and acquire their
// relative phases through free evolution, applied at readout time.
struct EnsembleState {
    Scenario scenario = Scenario::unwritten;
    double theta0_sq = 0.0;
    double branching_ratio = 1.0;
    std::vector<double> ground_amp;   // per z node
    std::vector<double> excited_amp;  // per z node

    double amplitude_g(int iz, int /*ifreq*/ = 0) const { return ground_amp[iz]; }
    double amplitude_e(int iz, int /*ifreq*/ = 0) const { return excited_amp[iz]; }
    // Optical coherence magnitude per cell right after the write pulse.
    double coherence(int iz, int /*ifreq*/ = 0) const {
        return ground_amp[iz] * excited_amp[iz];
    }
};

inline EnsembleState write_step(const EnsembleGrid& g, const ProtocolParams& p) {
    validate(p);
    EnsembleState s;
    s.scenario = Scenario::written;
    s.theta0_sq = p.theta0_sq;
    s.branching_ratio = p.branching_ratio;
    const double depth = g.geometry.effective_depth();
    s.ground_amp.resize(g.n_z());
    s.excited_amp.resize(g.n_z());
    for (int i = 0; i < g.n_z(); ++i) {
        const double u = std::exp(-depth * g.z_nodes[i]);  // Beer-law intensity attenuation
        const double norm = std::sqrt(1.0 + 0.25 * p.theta0_sq * p.theta0_sq * u * u);
        s.ground_amp[i] = (1.0 - 0.5 * p.theta0_sq * u) / norm;
        s.excited_amp[i] = std::sqrt(p.theta0_sq * u) / norm;
    }
    return s;
}

// Fraction of the ensemble transferred to the excited state by the write.
inline double excited_fraction(const EnsembleState& s, const EnsembleGrid& g) {
    double f = 0.0;
    for (int i = 0; i < g.n_z(); ++i)
        f += g.z_weights[i] * s.excited_amp[i] * s.excited_amp[i];
    return f;
}

// Forward Stokes flux at z = L. Each cell radiates independently (distinct
// atoms), so detuning phases drop out of the sum and the flux is flat in t;
// the exponential factor is the stimulated gain accumulated from z to L.
inline double stokes_flux(const EnsembleState& s, const EnsembleGrid& g, double t = 0.0) {
    if (s.scenario != Scenario::written)
        throw validation_error("stokes_flux requires a state produced by write_step");
    const double depth = g.geometry.effective_depth();
    const double u_end = std::exp(-depth);
    double phase_norm = 0.0;
    for (int k = 0; k < g.n_freq(); ++k)
        phase_norm += g.freq_weights[k] *
                      std::norm(std::polar(1.0, -g.detunings[k] * t));
    double count = 0.0;
    for (int i = 0; i < g.n_z(); ++i) {
        const double u = std::exp(-depth * g.z_nodes[i]);
        const double gain = std::exp(s.theta0_sq * (u - u_end));
        const double e2 = s.excited_amp[i] * s.excited_amp[i];
        count += g.z_weights[i] * e2 * gain;
    }
    count *= depth * s.branching_ratio * phase_norm;
    return count / g.mode_window_s();
}

// Per-mode Stokes count: flat flux times the temporal-mode duration.
inline double stokes_mode_count(const EnsembleState& s, const EnsembleGrid& g) {
    return stokes_flux(s, g) * g.mode_window_s();
}

enum class SumMode { coherent, incoherent };

enum class TraceKind { stokes_forward, anti_stokes_backward, anti_stokes_forward };

inline std::string to_string(TraceKind k) {
    switch (k) {
        case TraceKind::stokes_forward: return "stokes_forward";
        case TraceKind::anti_stokes_backward: return "anti_stokes_backward";
        case TraceKind::anti_stokes_forward: return "anti_stokes_forward";
    }
    return "unknown";
}

struct FieldTrace {
    std::vector<double> times_s;  // absolute time, write pulse at zero
    std::vector<double> flux;     // photons per second
    TraceKind direction = TraceKind::anti_stokes_backward;
    double mode_window_s = 0.0;
    double peak_time_s = 0.0;
    double peak_flux = 0.0;
    double mode_counts = 0.0;  // integral of flux over one mode window at the peak

    // Per-mode retrieval efficiency in the closed-form normalization: the
    // flux plateau value over one temporal mode.
    double peak_mode_efficiency() const { return peak_flux * mode_window_s; }

    double total_counts() const {
        if (times_s.size() < 2) return 0.0;
        double acc = 0.0;
        for (std::size_t i = 1; i < times_s.size(); ++i)
            acc += 0.5 * (flux[i] + flux[i - 1]) * (times_s[i] - times_s[i - 1]);
        return acc;
    }
};

namespace detail {

// |sum_k w_k exp(-i d_k t)|^2 for a strip of trace times, evaluated with a
// per-class phase recurrence. Phases are re-synchronized from scratch every
// few hundred steps to keep rounding drift below measurement level. The
// chunk decomposition is fixed by the class count, so the in-order partial
// combination is bit-stable for any thread count.
inline std::vector<std::complex<double>> phase_sum_series(const std::vector<double>& detunings,
                                                          const std::vector<double>& weights,
                                                          double t0, double dt,
                                                          std::size_t n_steps) {
    constexpr std::size_t chunk = 2048;
    constexpr std::size_t resync = 512;
    const std::size_t n = detunings.size();
    const std::size_t n_chunks = (n + chunk - 1) / chunk;
    std::vector<std::vector<std::complex<double>>> partial(n_chunks);
    parallel_chunks(n, chunk, [&](std::size_t ci, std::size_t begin, std::size_t end) {
        std::vector<std::complex<double>> acc(n_steps, {0.0, 0.0});
        std::vector<std::complex<double>> phase(end - begin);
        std::vector<std::complex<double>> step(end - begin);
        for (std::size_t k = begin; k < end; ++k)
            step[k - begin] = std::polar(1.0, -detunings[k] * dt);
        for (std::size_t i = 0; i < n_steps; ++i) {
            if (i % resync == 0) {
                const double t = t0 + static_cast<double>(i) * dt;
                for (std::size_t k = begin; k < end; ++k)
                    phase[k - begin] = std::polar(weights[k], -detunings[k] * t);
            }
            std::complex<double> sum{0.0, 0.0};
            for (std::size_t k = 0; k < end - begin; ++k) {
                sum += phase[k];
                phase[k] *= step[k];
            }
            acc[i] = sum;
        }
        partial[ci] = std::move(acc);
    });
    std::vector<std::complex<double>> total(n_steps, {0.0, 0.0});
    for (const auto& part : partial)
        for (std::size_t i = 0; i < n_steps; ++i) total[i] += part[i];
    return total;
}

// Spatial kernel of the retrieval sum. Backward emission picks up the full
// two-way attenuation e^{-abar L z}; forward emission is attenuated
// uniformly by e^{-abar L / 2}. A residual phase mismatch adds e^{i dkL z}.
inline std::complex<double> spatial_sum(const EnsembleGrid& g, Direction dir,
                                        double delta_k_l) {
    const double depth = g.geometry.effective_depth();
    std::complex<double> acc{0.0, 0.0};
    for (int i = 0; i < g.n_z(); ++i) {
        const double z = g.z_nodes[i];
        const double amp = dir == Direction::backward ? std::exp(-depth * z)
                                                      : std::exp(-0.5 * depth);
        acc += g.z_weights[i] * amp * std::polar(1.0, delta_k_l * z);
    }
    return acc;
}

inline double spatial_sum_incoherent(const EnsembleGrid& g, Direction dir) {
    const double depth = g.geometry.effective_depth();
    double acc = 0.0;
    for (int i = 0; i < g.n_z(); ++i) {
        const double z = g.z_nodes[i];
        const double amp = dir == Direction::backward ? std::exp(-depth * z)
                                                      : std::exp(-0.5 * depth);
        acc += g.z_weights[i] * g.z_weights[i] * amp * amp;
    }
    return acc;
}

}  // namespace detail

struct ReadoutOptions {
    SumMode sum_mode = SumMode::coherent;
    double delta_k_l = 0.0;  // residual phase mismatch times crystal length
};

namespace detail {

inline FieldTrace readout_trace(const EnsembleState& s, const EnsembleGrid& g,
                                const ProtocolParams& p, Direction dir,
                                const ReadoutOptions& opt,
                                const std::vector<double>& detection_times,
                                double read_time_offset) {
    if (s.scenario != Scenario::written)
        throw validation_error("readout requires a state produced by write_step");
    const double revival = g.revival_time_s();
    for (double td : detection_times)
        if (td >= revival)
            throw regime_error("detection time t_d = " + std::to_string(td) +
                               " s does not precede the revival at 2*pi/delta0 = " +
                               std::to_string(revival) + " s");

    const double depth = g.geometry.effective_depth();
    // Conditional-state normalization: a single stored excitation retrieved
    // through the collective sum carries (abar L)^2 / (1 - e^{-abar L}).
    const double norm = depth == 0.0 ? 0.0 : depth * depth / (1.0 - std::exp(-depth));

    const double dt = g.dt_s;
    const std::size_t n_steps = static_cast<std::size_t>(std::ceil(2.0 * revival / dt)) + 1;
    const double t_read = read_time_offset;  // absolute time of the read pulse

    FieldTrace trace;
    trace.direction = dir == Direction::backward ? TraceKind::anti_stokes_backward
                                                 : TraceKind::anti_stokes_forward;
    trace.mode_window_s = g.mode_window_s();
    trace.times_s.resize(n_steps);
    trace.flux.assign(n_steps, 0.0);

    // Skip the read-pulse transient: spin wave k's phase clock reads
    // t - t_read + t_dk, and its near-zero peak tail has settled once the
    // earliest clock passes 5 / Gamma. A fixed guard measured from t_read
    // would overrun echoes that rephase within 5 / Gamma of the read pulse.
    const double settle = 5.0 / g.geometry.big_gamma();
    const double min_clock =
        *std::min_element(detection_times.begin(), detection_times.end());
    const double guard = std::max(0.0, settle - min_clock);
    double spatial2;
    if (opt.sum_mode == SumMode::coherent) {
        spatial2 = std::norm(detail::spatial_sum(g, dir, opt.delta_k_l));
    } else {
        spatial2 = detail::spatial_sum_incoherent(g, dir);
    }

    std::size_t peak_i = 0;
    bool have_peak = false;
    for (std::size_t k = 0; k < detection_times.size(); ++k) {
        // Spin wave k accumulated optical phase for a time t_dk before
        // storage, so its phase clock at trace time t reads t - t_read + t_dk.
        const double t0_phase = p.tau_s - t_read + detection_times[k];
        std::vector<double> dens(n_steps, 0.0);
        if (opt.sum_mode == SumMode::coherent) {
            const auto series = detail::phase_sum_series(g.detunings, g.freq_weights,
                                                         t0_phase, dt, n_steps);
            for (std::size_t i = 0; i < n_steps; ++i) dens[i] = std::norm(series[i]);
        } else {
            double w2 = 0.0;
            for (int j = 0; j < g.n_freq(); ++j) w2 += g.freq_weights[j] * g.freq_weights[j];
            std::fill(dens.begin(), dens.end(), w2);
        }
        for (std::size_t i = 0; i < n_steps; ++i) {
            const double t = p.tau_s + static_cast<double>(i) * dt;
            if (t < t_read) continue;  // no optical coherence before the read pulse
            trace.flux[i] += norm * spatial2 * dens[i] / trace.mode_window_s;
        }
    }
    for (std::size_t i = 0; i < n_steps; ++i) {
        const double t = p.tau_s + static_cast<double>(i) * dt;
        trace.times_s[i] = t;
        if (t >= t_read + guard && (!have_peak || trace.flux[i] > trace.flux[peak_i])) {
            peak_i = i;
            have_peak = true;
        }
    }
    if (have_peak) {
        trace.peak_time_s = trace.times_s[peak_i];
        trace.peak_flux = trace.flux[peak_i];
        // Literal count inside one mode window centered on the peak.
        const double lo = trace.peak_time_s - 0.5 * trace.mode_window_s;
        const double hi = trace.peak_time_s + 0.5 * trace.mode_window_s;
        double acc = 0.0;
        for (std::size_t i = 1; i < n_steps; ++i) {
            const double a = std::max(lo, trace.times_s[i - 1]);
            const double b = std::min(hi, trace.times_s[i]);
            if (b > a) acc += 0.5 * (trace.flux[i] + trace.flux[i - 1]) * (b - a);
        }
        trace.mode_counts = acc;
    }
    return trace;
}

}  // namespace detail

// Backward anti-Stokes retrieval conditioned on one Stokes detection at
// p.t_d_s, with the read pulse applied p.tau_s later. The trace spans
// t - tau in [0, 2 * revival]; the echo peaks at t - tau = revival.
inline FieldTrace heralded_readout(const EnsembleState& s, const EnsembleGrid& g,
                                   const ProtocolParams& p, const ReadoutOptions& opt = {}) {
    return detail::readout_trace(s, g, p, Direction::backward, opt, {p.t_d_s},
                                 p.t_d_s + p.tau_s);
}

inline FieldTrace forward_readout(const EnsembleState& s, const EnsembleGrid& g,
                                  const ProtocolParams& p, const ReadoutOptions& opt = {}) {
    return detail::readout_trace(s, g, p, Direction::forward, opt, {p.t_d_s},
                                 p.t_d_s + p.tau_s);
}

// Worst-case anti-Stokes noise per mode from the unheralded excited
// population. The incoherent population sum carries no detuning phases, so
// the result is flat in time; the optional t argument exists to demonstrate
// exactly that.
inline double noise_flux(const EnsembleGrid& g, const ProtocolParams& p,
                         double t_minus_tau = 0.0) {
    validate(p);
    const double depth = g.geometry.effective_depth();
    double phase_norm = 0.0;
    for (int k = 0; k < g.n_freq(); ++k)
        phase_norm += g.freq_weights[k] *
                      std::norm(std::polar(1.0, -g.detunings[k] * t_minus_tau));
    double acc = 0.0;
    for (int i = 0; i < g.n_z(); ++i) {
        const double e2 = std::exp(-2.0 * depth * g.z_nodes[i]);
        acc += g.z_weights[i] * e2;
    }
    return depth * p.theta0_sq * p.branching_ratio * acc * phase_norm;
}

struct RevivalPeak {
    double detection_time_s = 0.0;
    double predicted_s = 0.0;  // tau + revival - (t_dk - t_d1), absolute
    double located_s = 0.0;    // flux peak of this spin wave's own trace
    double peak_flux = 0.0;
};

struct MultimodeResult {
    std::vector<RevivalPeak> revivals;
    FieldTrace trace;  // incoherent sum over the independent spin waves
    WarningList warnings;
};

// Several Stokes detections herald independent spin waves that re-emit in
// first-in last-out order after a single read pulse. The read pulse fires
// tau after the first detection.
inline MultimodeResult multimode_rephasing(const std::vector<double>& detection_times_s,
                                           double tau_s, const EnsembleGrid& g,
                                           const ProtocolParams& p,
                                           const ReadoutOptions& opt = {}) {
    if (detection_times_s.empty())
        throw validation_error("multimode_rephasing needs at least one detection time");
    std::vector<double> sorted = detection_times_s;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        const double sep = sorted[i] - sorted[i - 1];
        if (sep > 0.0 && sep <= g.dt_s)
            throw validation_error("detection separations must exceed the trace step " +
                                   std::to_string(g.dt_s) + " s (or coincide exactly)");
    }
    ProtocolParams pp = p;
    pp.tau_s = tau_s;
    pp.t_d_s = sorted.front();
    EnsembleState s = write_step(g, pp);
    const double t_read = sorted.front() + tau_s;

    MultimodeResult result;
    result.trace = detail::readout_trace(s, g, pp, Direction::backward, opt,
                                         detection_times_s, t_read);
    const double revival = g.revival_time_s();
    const double mode_duration = two_pi / g.geometry.big_gamma();
    for (double td : detection_times_s) {
        RevivalPeak peak;
        peak.detection_time_s = td;
        peak.predicted_s = tau_s + revival - (td - sorted.front());
        const FieldTrace own = detail::readout_trace(s, g, pp, Direction::backward, opt,
                                                     {td}, t_read);
        // Search this spin wave's own flux near its predicted revival.
        const double lo = peak.predicted_s - 0.25 * revival;
        const double hi = peak.predicted_s + 0.25 * revival;
        std::size_t best = 0;
        bool found = false;
        for (std::size_t i = 0; i < own.times_s.size(); ++i) {
            if (own.times_s[i] < lo || own.times_s[i] > hi) continue;
            if (!found || own.flux[i] > own.flux[best]) {
                best = i;
                found = true;
            }
        }
        if (found) {
            peak.located_s = own.times_s[best];
            peak.peak_flux = own.flux[best];
        }
        result.revivals.push_back(peak);
    }
    for (std::size_t i = 0; i < result.revivals.size(); ++i)
        for (std::size_t j = i + 1; j < result.revivals.size(); ++j) {
            const double sep =
                std::abs(result.revivals[i].predicted_s - result.revivals[j].predicted_s);
            if (sep > 0.0 && sep < 2.0 * mode_duration / two_pi)
                result.warnings.push_back(
                    {"multimode.overlapping_revivals",
                     "revivals " + std::to_string(i) + " and " + std::to_string(j) +
                     " are separated by " + std::to_string(sep) +
                     " s, less than twice the echo duration"});
        }
    return result;
}

}  // namespace afcraman
