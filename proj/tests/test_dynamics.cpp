#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "afcraman/dynamics.hpp"

using namespace afcraman;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const CombParams reference_comb{30e3, 150e3, 1e6, 10.0};   // F = 5
const CombParams wide_comb{30e3, 150e3, 3e6, 10.0};    // F = 5, envelope/spacing = 20
const ProtocolParams reference_protocol{0.1, 2e-6, 6.666e-6, pi, 1.0};

double backward_efficiency(const CombParams& c, const ProtocolParams& p,
                           const GridSpec& spec = {}) {
    const auto g = build_grid(c, spec);
    const auto s = write_step(g, p);
    return heralded_readout(s, g, p).peak_mode_efficiency();
}

}  // namespace

TEST_CASE("grid resolves every tooth and normalizes its weights") {
    const auto g = build_grid(wide_comb);
    const int teeth = 2 * g.geometry.j_max() + 1;
    CHECK(g.n_freq() >= 8 * teeth * 5);
    double wsum = 0.0;
    for (double w : g.freq_weights) wsum += w;
    CHECK_THAT(wsum, WithinAbs(1.0, 1e-6));
    double zsum = 0.0;
    for (double w : g.z_weights) zsum += w;
    CHECK_THAT(zsum, WithinAbs(1.0, 1e-12));
    CHECK(g.dt_s > 0.0);
    CHECK_THAT(g.revival_time_s(), WithinRel(1.0 / 150e3, 1e-12));
}

TEST_CASE("grid refuses under-resolved teeth unless forced") {
    GridSpec coarse;
    coarse.classes_per_fwhm = 4.0;
    CHECK_THROWS_AS(build_grid(wide_comb, coarse), validation_error);
    coarse.force = true;
    CHECK(build_grid(wide_comb, coarse).n_freq() > 0);

    GridSpec bad;
    bad.n_z = 1;
    CHECK_THROWS_AS(build_grid(wide_comb, bad), validation_error);
    bad = GridSpec{};
    bad.time_step_fraction = 0.5;
    CHECK_THROWS_AS(build_grid(wide_comb, bad), validation_error);
}

TEST_CASE("write step conserves per-cell population") {
    const auto g = build_grid(reference_comb);
    const auto s = write_step(g, reference_protocol);
    for (int i = 0; i < g.n_z(); ++i) {
        const double gg = s.amplitude_g(i), ee = s.amplitude_e(i);
        CHECK_THAT(gg * gg + ee * ee, WithinAbs(1.0, 1e-9));
        CHECK(s.coherence(i) >= 0.0);
        CHECK(s.coherence(i) <= 1.0);
    }
}

TEST_CASE("zero write pulse leaves the ensemble in the ground state") {
    const auto g = build_grid(reference_comb);
    ProtocolParams off = reference_protocol;
    off.theta0_sq = 0.0;
    const auto s = write_step(g, off);
    for (int i = 0; i < g.n_z(); ++i) {
        CHECK(s.amplitude_e(i) == 0.0);
        CHECK(s.coherence(i) == 0.0);
    }
    CHECK(excited_fraction(s, g) == 0.0);
    CHECK(stokes_flux(s, g) == 0.0);
}

TEST_CASE("excited fraction follows the attenuated-drive average") {
    const auto g = build_grid(reference_comb);
    const auto s = write_step(g, reference_protocol);
    // (theta0^2 / abar L)(1 - e^{-abar L}); the exact per-cell normalization
    // shifts the value by O(theta0^4).
    CHECK_THAT(excited_fraction(s, g), WithinRel(0.041383901360401, 2.5e-3));
}

TEST_CASE("stokes count matches the first-order emission probability") {
    ProtocolParams weak = reference_protocol;
    weak.theta0_sq = 0.002;
    const auto g = build_grid(reference_comb);
    const auto s = write_step(g, weak);
    const double expected = weak.theta0_sq * (1.0 - std::exp(-g.geometry.effective_depth()));
    CHECK_THAT(stokes_mode_count(s, g), WithinRel(expected, 1e-2));
}

TEST_CASE("stokes count carries the full stimulated gain at larger drive") {
    const auto g = build_grid(reference_comb);
    const auto s = write_step(g, reference_protocol);
    const double exponent = 0.1 * (1.0 - std::exp(-g.geometry.effective_depth()));
    CHECK_THAT(stokes_mode_count(s, g), WithinRel(std::expm1(exponent), 2e-3));
}

TEST_CASE("stokes flux is flat over the emission window") {
    const auto g = build_grid(reference_comb);
    const auto s = write_step(g, reference_protocol);
    const double at0 = stokes_flux(s, g, 0.0);
    for (double frac : {0.15, 0.3}) {
        CHECK_THAT(stokes_flux(s, g, frac / g.geometry.big_gamma()),
                   WithinRel(at0, 1e-12));
    }
}

TEST_CASE("flux operations require a written state") {
    const auto g = build_grid(reference_comb);
    EnsembleState blank;
    CHECK_THROWS_AS(stokes_flux(blank, g), validation_error);
    CHECK_THROWS_AS(heralded_readout(blank, g, reference_protocol), validation_error);
}

TEST_CASE("echo peaks one revival after the read pulse") {
    const auto g = build_grid(reference_comb);
    const auto s = write_step(g, reference_protocol);
    const auto trace = heralded_readout(s, g, reference_protocol);
    const double expected = reference_protocol.tau_s + g.revival_time_s();
    CHECK(std::abs(trace.peak_time_s - expected) <= g.dt_s);
    CHECK_THAT(trace.peak_mode_efficiency(), WithinRel(0.662699642005480, 1e-3));
    CHECK(trace.direction == TraceKind::anti_stokes_backward);
    CHECK(trace.times_s.front() == reference_protocol.tau_s);
    for (double f : trace.flux) CHECK(f >= 0.0);
    CHECK(trace.mode_counts <= trace.total_counts() + 1e-15);
}

TEST_CASE("readout efficiency matches the closed form on a resolved comb") {
    CHECK_THAT(backward_efficiency(wide_comb, reference_protocol),
               WithinRel(0.662699642005480, 2e-3));
}

TEST_CASE("window-integrated counts fall below the plateau estimate") {
    const auto g = build_grid(wide_comb);
    const auto s = write_step(g, reference_protocol);
    const auto trace = heralded_readout(s, g, reference_protocol);
    // The echo is shorter than one temporal mode, so the literal window
    // integral recovers only part of the peak-flux normalization.
    CHECK_THAT(trace.mode_counts / trace.peak_mode_efficiency(),
               WithinAbs(0.6528, 0.02));
}

TEST_CASE("readout efficiency does not depend on the detection time") {
    const auto g = build_grid(reference_comb);
    std::vector<double> etas;
    for (double frac : {0.1, 0.5, 0.9}) {
        ProtocolParams p = reference_protocol;
        p.t_d_s = frac * g.revival_time_s();
        const auto s = write_step(g, p);
        etas.push_back(heralded_readout(s, g, p).peak_mode_efficiency());
    }
    CHECK_THAT(etas[1], WithinRel(etas[0], 1e-9));
    CHECK_THAT(etas[2], WithinRel(etas[0], 1e-9));
}

TEST_CASE("detection after the revival is a protocol violation") {
    const auto g = build_grid(reference_comb);
    ProtocolParams late = reference_protocol;
    late.t_d_s = g.revival_time_s();
    const auto s = write_step(g, reference_protocol);
    CHECK_THROWS_AS(heralded_readout(s, g, late), regime_error);
    late.t_d_s = 1.5 * g.revival_time_s();
    CHECK_THROWS_AS(heralded_readout(s, g, late), regime_error);
}

TEST_CASE("forward retrieval is reabsorption limited") {
    // abar L = 1.6 at F = 50: close to the forward optimum.
    const CombParams c{3e3, 150e3, 1.5e6, 1.6 * 50.0 / depth_factor};
    const auto g = build_grid(c);
    const auto s = write_step(g, reference_protocol);
    const auto trace = forward_readout(s, g, reference_protocol);
    CHECK(trace.direction == TraceKind::anti_stokes_forward);
    CHECK_THAT(trace.peak_mode_efficiency(), WithinRel(0.645762497, 2e-2));
    const double expected = reference_protocol.tau_s + g.revival_time_s();
    CHECK(std::abs(trace.peak_time_s - expected) <= g.dt_s);
}

TEST_CASE("forward falls below backward at large depth") {
    const auto g = build_grid(reference_comb);  // abar L = 2.13 > 1.8
    const auto s = write_step(g, reference_protocol);
    const double fwd = forward_readout(s, g, reference_protocol).peak_mode_efficiency();
    const double bwd = heralded_readout(s, g, reference_protocol).peak_mode_efficiency();
    CHECK(fwd < bwd);
}

TEST_CASE("noise flux matches the double-pass absorption integral") {
    const auto g = build_grid(reference_comb);
    CHECK_THAT(noise_flux(g, reference_protocol), WithinRel(0.049292377891117, 1e-9));
    // No revival structure: flat wherever it is sampled.
    const double at0 = noise_flux(g, reference_protocol);
    for (double frac : {0.5, 1.0, 1.5}) {
        CHECK_THAT(noise_flux(g, reference_protocol, frac * g.revival_time_s()),
                   WithinRel(at0, 1e-12));
    }
    ProtocolParams off = reference_protocol;
    off.theta0_sq = 0.0;
    CHECK(noise_flux(g, off) == 0.0);
}

TEST_CASE("incoherent summation destroys the revival") {
    const auto g = build_grid(reference_comb);
    const auto s = write_step(g, reference_protocol);
    const auto coherent = heralded_readout(s, g, reference_protocol);
    ReadoutOptions opt;
    opt.sum_mode = SumMode::incoherent;
    const auto incoherent = heralded_readout(s, g, reference_protocol, opt);
    CHECK(coherent.peak_flux >= 10.0 * incoherent.peak_flux);
}

TEST_CASE("phase mismatch monotonically degrades the echo") {
    const auto g = build_grid(reference_comb);
    const double mismatches[] = {0.0, 0.5, 1.0, 2.0, pi};
    const double expected[] = {0.171263, 0.168400, 0.160076, 0.130464, 0.086938};
    double prev = 1e9;
    for (std::size_t i = 0; i < 5; ++i) {
        const double s2 =
            std::norm(detail::spatial_sum(g, Direction::backward, mismatches[i]));
        CHECK_THAT(s2, WithinRel(expected[i], 1e-4));
        CHECK(s2 < prev);
        prev = s2;
    }
    // The full trace inherits the spatial factor.
    const auto s = write_step(g, reference_protocol);
    ReadoutOptions opt;
    opt.delta_k_l = 1.0;
    const double ratio = heralded_readout(s, g, reference_protocol, opt).peak_mode_efficiency() /
                         heralded_readout(s, g, reference_protocol).peak_mode_efficiency();
    CHECK_THAT(ratio, WithinRel(0.160076 / 0.171263, 1e-3));
}

TEST_CASE("grid refinement leaves the results unchanged") {
    const double base = backward_efficiency(wide_comb, reference_protocol);
    GridSpec fine;
    fine.n_z = 128;
    fine.classes_per_fwhm = 16.0;
    const double refined = backward_efficiency(wide_comb, reference_protocol, fine);
    CHECK_THAT(refined, WithinRel(base, 5e-3));

    const auto g = build_grid(wide_comb);
    const auto gf = build_grid(wide_comb, fine);
    const auto s = write_step(g, reference_protocol);
    const auto sf = write_step(gf, reference_protocol);
    CHECK_THAT(stokes_mode_count(sf, gf), WithinRel(stokes_mode_count(s, g), 5e-3));
    CHECK_THAT(noise_flux(gf, reference_protocol), WithinRel(noise_flux(g, reference_protocol), 5e-3));
}

TEST_CASE("trace is bit-identical for any worker count") {
    const auto g = build_grid(reference_comb);
    const auto s = write_step(g, reference_protocol);
    setenv("AFCRAMAN_THREADS", "1", 1);
    const auto serial = heralded_readout(s, g, reference_protocol);
    setenv("AFCRAMAN_THREADS", "2", 1);
    const auto threaded = heralded_readout(s, g, reference_protocol);
    unsetenv("AFCRAMAN_THREADS");
    REQUIRE(serial.flux.size() == threaded.flux.size());
    for (std::size_t i = 0; i < serial.flux.size(); ++i)
        CHECK(serial.flux[i] == threaded.flux[i]);
    CHECK(serial.peak_time_s == threaded.peak_time_s);
}

TEST_CASE("monte carlo sampling reproduces the quadrature grid") {
    GridSpec mc;
    mc.sampling = GridSpec::Sampling::monte_carlo;
    mc.n_atoms = 20000;
    mc.seed = 7;
    const auto g1 = build_grid(reference_comb, mc);
    const auto g2 = build_grid(reference_comb, mc);
    REQUIRE(g1.n_freq() == 20000);
    for (int i = 0; i < g1.n_freq(); ++i) CHECK(g1.detunings[i] == g2.detunings[i]);

    const auto s = write_step(g1, reference_protocol);
    const double eta = heralded_readout(s, g1, reference_protocol).peak_mode_efficiency();
    CHECK_THAT(eta, WithinRel(0.662699642005480, 5e-2));

    mc.n_atoms = 1;
    CHECK_THROWS_AS(build_grid(reference_comb, mc), validation_error);
}

TEST_CASE("multimode spin waves rephase in first-in last-out order") {
    const auto g = build_grid(reference_comb);
    const double rev = g.revival_time_s();
    const double tau = 6.666e-6;

    const auto single = multimode_rephasing({0.5e-6}, tau, g, reference_protocol);
    REQUIRE(single.revivals.size() == 1);
    CHECK_THAT(single.revivals[0].predicted_s, WithinRel(tau + rev, 1e-12));
    CHECK(std::abs(single.revivals[0].located_s - single.revivals[0].predicted_s) <=
          g.dt_s + 1e-15);

    const std::vector<double> three{0.5e-6, 1.6e-6, 3.3e-6};
    const auto multi = multimode_rephasing(three, tau, g, reference_protocol);
    REQUIRE(multi.revivals.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK_THAT(multi.revivals[k].predicted_s,
                   WithinRel(tau + rev - (three[k] - three[0]), 1e-12));
        CHECK(std::abs(multi.revivals[k].located_s - multi.revivals[k].predicted_s) <=
              g.dt_s + 1e-15);
        CHECK(multi.revivals[k].peak_flux > 0.0);
    }
    CHECK(multi.warnings.empty());
}

TEST_CASE("coincident detections double the echo flux") {
    const auto g = build_grid(reference_comb);
    const double tau = 6.666e-6;
    const auto one = multimode_rephasing({1e-6}, tau, g, reference_protocol);
    const auto two = multimode_rephasing({1e-6, 1e-6}, tau, g, reference_protocol);
    CHECK_THAT(two.trace.peak_flux, WithinRel(2.0 * one.trace.peak_flux, 1e-12));
}

TEST_CASE("multimode input validation") {
    const auto g = build_grid(reference_comb);
    CHECK_THROWS_AS(multimode_rephasing({}, 6.666e-6, g, reference_protocol),
                    validation_error);
    // Separation below the trace step cannot be resolved.
    CHECK_THROWS_AS(
        multimode_rephasing({1e-6, 1e-6 + 0.5 * g.dt_s}, 6.666e-6, g, reference_protocol),
        validation_error);
}

TEST_CASE("close revivals are flagged as overlapping") {
    const auto g = build_grid(reference_comb);
    // 0.2 us apart: below twice the echo duration 2/big_gamma = 0.32 us.
    const auto r = multimode_rephasing({1e-6, 1.2e-6}, 6.666e-6, g, reference_protocol);
    REQUIRE_FALSE(r.warnings.empty());
    CHECK(r.warnings[0].code == "multimode.overlapping_revivals");
}
