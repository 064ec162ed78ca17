#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "afcraman/analytic.hpp"

using namespace afcraman;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const CombParams reference_comb{30e3, 150e3, 1e6, 10.0};  // F = 5, abar L = 2.1289
const ProtocolParams reference_protocol{0.1, 2e-6, 6.666e-6, pi, 1.0};

// Counts strict sign changes of the discrete derivative of fn over a grid.
template <class Fn>
int direction_changes(Fn&& fn, double lo, double hi, int n) {
    int changes = 0;
    int last_sign = 0;
    double prev = fn(lo);
    for (int i = 1; i <= n; ++i) {
        const double x = lo + (hi - lo) * i / n;
        const double v = fn(x);
        const int sign = v > prev ? 1 : (v < prev ? -1 : 0);
        if (sign != 0 && last_sign != 0 && sign != last_sign) ++changes;
        if (sign != 0) last_sign = sign;
        prev = v;
    }
    return changes;
}

}  // namespace

TEST_CASE("stokes photons per mode") {
    CHECK_THAT(stokes_photons_per_mode(reference_comb, reference_protocol),
               WithinRel(0.088103596267084, 1e-12));
    // Saturated depth: every photon scattered, p -> theta0^2.
    const CombParams deep{30e3, 150e3, 1e6, 1e4};
    CHECK_THAT(stokes_photons_per_mode(deep, reference_protocol), WithinRel(0.1, 1e-12));
    ProtocolParams off = reference_protocol;
    off.theta0_sq = 0.0;
    CHECK(stokes_photons_per_mode(reference_comb, off) == 0.0);
}

TEST_CASE("photons emitted per write attempt") {
    CHECK_THAT(photons_per_write_attempt(reference_comb, reference_protocol),
               WithinRel(2.944572873329971, 1e-12));
    const double ratio = photons_per_write_attempt(reference_comb, reference_protocol) /
                         stokes_photons_per_mode(reference_comb, reference_protocol);
    CHECK_THAT(ratio, WithinRel(std::sqrt(two_pi) * 2e6 / 150e3, 1e-12));
    ProtocolParams off = reference_protocol;
    off.theta0_sq = 0.0;
    CHECK(photons_per_write_attempt(reference_comb, off) == 0.0);
}

TEST_CASE("saturated gain photon number") {
    CHECK_THAT(saturated_gain_photons(reference_comb), WithinRel(7.405901669536831, 1e-12));
    CHECK(saturated_gain_photons(CombParams{30e3, 150e3, 1e6, 0.0}) == 0.0);
    // Linear regime: e^x - 1 ~ x for small effective depth.
    const CombParams shallow{30e3, 150e3, 1e6, 1e-6};
    CHECK_THAT(saturated_gain_photons(shallow),
               WithinRel(effective_depth(shallow), 1e-5));
}

TEST_CASE("backward readout efficiency") {
    CHECK_THAT(readout_efficiency_backward(reference_comb),
               WithinRel(0.662699642005480, 1e-12));
    CHECK(readout_efficiency_backward(CombParams{30e3, 150e3, 1e6, 0.0}) == 0.0);
    // Jointly large depth and finesse approach unit efficiency.
    CHECK(readout_efficiency_backward(CombParams{150.0, 150e3, 1e6, 1e6}) > 0.9999);
}

TEST_CASE("forward readout efficiency") {
    CHECK_THAT(readout_efficiency_forward(reference_comb),
               WithinRel(0.460330308448826, 1e-12));
    CHECK(readout_efficiency_forward(CombParams{30e3, 150e3, 1e6, 0.0}) == 0.0);
}

TEST_CASE("forward depth factor peaks below one") {
    double best = 0.0, best_x = 0.0;
    for (int i = 0; i <= 25000; ++i) {
        const double x = 0.5 + 2.5 * i / 25000.0;
        const double v = formulas::raman_forward_depth_factor(x);
        if (v > best) {
            best = v;
            best_x = x;
        }
    }
    CHECK_THAT(best, WithinRel(0.647610237892, 1e-6));
    CHECK_THAT(best_x, WithinAbs(1.593624273031, 1e-3));
}

TEST_CASE("memory efficiency in both directions") {
    CHECK_THAT(afc_memory_efficiency(reference_comb, Direction::backward),
               WithinRel(0.583862217055922, 1e-12));
    CHECK_THAT(afc_memory_efficiency(reference_comb, Direction::forward),
               WithinRel(0.405567556450778, 1e-12));
    CHECK(afc_memory_efficiency(CombParams{30e3, 150e3, 1e6, 0.0},
                                Direction::backward) == 0.0);
    // The forward memory depth factor x^2 e^{-x} peaks at exactly x = 2.
    CHECK_THAT(formulas::memory_forward_depth_factor(2.0),
               WithinRel(4.0 * std::exp(-2.0), 1e-15));
    double best = 0.0, best_x = 0.0;
    for (int i = 0; i <= 25000; ++i) {
        const double x = 0.5 + 2.5 * i / 25000.0;
        const double v = formulas::memory_forward_depth_factor(x);
        if (v > best) {
            best = v;
            best_x = x;
        }
    }
    CHECK_THAT(best, WithinRel(0.541341132946, 1e-6));
    CHECK_THAT(best_x, WithinAbs(2.0, 1e-3));
}

TEST_CASE("raman readout beats a memory by the absorption factor") {
    for (double alpha_l : {0.05, 0.1, 1.0, 10.0}) {
        const CombParams c{30e3, 150e3, 1e6, alpha_l};
        const double x = effective_depth(c);
        const double ratio = readout_efficiency_backward(c) /
                             afc_memory_efficiency(c, Direction::backward);
        CHECK_THAT(ratio, WithinRel(1.0 / (1.0 - std::exp(-x)), 1e-12));
        CHECK(ratio >= 1.0);
    }
}

TEST_CASE("noise per mode") {
    CHECK_THAT(noise_per_mode(reference_comb, reference_protocol),
               WithinRel(0.049292377891117, 1e-12));
    ProtocolParams off = reference_protocol;
    off.theta0_sq = 0.0;
    CHECK(noise_per_mode(reference_comb, off) == 0.0);
    const CombParams deep{30e3, 150e3, 1e6, 1e4};
    CHECK_THAT(noise_per_mode(deep, reference_protocol), WithinRel(0.05, 1e-12));
}

TEST_CASE("signal-to-noise bound") {
    CHECK_THAT(snr_bound(reference_comb, reference_protocol),
               WithinRel(13.444261980408557, 1e-12));
    // The bound is the quotient of the module's own signal and noise.
    const double quotient = readout_efficiency_backward(reference_comb) /
                            noise_per_mode(reference_comb, reference_protocol);
    CHECK(snr_bound(reference_comb, reference_protocol) == quotient);
    CHECK_THAT(snr_asymptotic(reference_protocol), WithinRel(20.0, 1e-12));
    ProtocolParams unit;
    unit.theta0_sq = 1.0;
    CHECK_THAT(snr_asymptotic(unit), WithinRel(2.0, 1e-12));
    ProtocolParams off = reference_protocol;
    off.theta0_sq = 0.0;
    CHECK_THROWS_AS(snr_bound(reference_comb, off), validation_error);
    CHECK_THROWS_AS(snr_asymptotic(off), validation_error);
}

TEST_CASE("mode capacity counts the comb span") {
    CHECK(mode_capacity(reference_comb) == 13);
    CHECK(mode_capacity(CombParams{30e3, 2e6, 1e6, 10.0}) == 1);
    // Doubling the envelope doubles the capacity.
    CHECK(mode_capacity(CombParams{30e3, 150e3, 2e6, 10.0}) == 26);
}

TEST_CASE("backward efficiency is monotone in depth, dephasing in finesse") {
    double prev = -1.0;
    for (double alpha_l : {0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0, 100.0}) {
        const double eta = readout_efficiency_backward(CombParams{30e3, 150e3, 1e6, alpha_l});
        CHECK(eta >= prev);
        prev = eta;
    }
    prev = 0.0;
    for (double f : {1.5, 2.0, 3.0, 5.0, 10.0, 20.0, 50.0}) {
        CHECK(dephasing_factor(f) > prev);
        prev = dephasing_factor(f);
    }
}

TEST_CASE("backward efficiency has a single interior maximum in finesse") {
    for (double alpha_l : {0.1, 1.0, 10.0, 30.0}) {
        const auto eta = [&](double f) {
            return formulas::raman_backward(depth_factor * alpha_l / f, f);
        };
        CHECK(direction_changes(eta, 1.5, 50.0, 2000) == 1);
    }
}

TEST_CASE("closed forms stay inside the unit interval") {
    for (double alpha_l : {0.01, 0.1, 1.0, 3.0, 10.0, 30.0, 100.0}) {
        for (double f : {1.2, 2.0, 5.0, 20.0, 100.0}) {
            const double x = depth_factor * alpha_l / f;
            for (double v : {formulas::raman_backward(x, f), formulas::raman_forward(x, f),
                             formulas::memory_backward(x, f),
                             formulas::memory_forward(x, f)}) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
            CHECK(formulas::noise_per_mode(0.1, x) >= 0.0);
        }
    }
}

TEST_CASE("full report matches the scalar operations") {
    const auto r = full_report(reference_comb, reference_protocol);
    CHECK(r.p_stokes == stokes_photons_per_mode(reference_comb, reference_protocol));
    CHECK(r.eta_readout == readout_efficiency_backward(reference_comb));
    CHECK(r.noise_per_mode == noise_per_mode(reference_comb, reference_protocol));
    CHECK(r.snr_lower_bound == snr_bound(reference_comb, reference_protocol));
    CHECK(r.photons_per_write_attempt == photons_per_write_attempt(reference_comb, reference_protocol));
    CHECK(r.mode_capacity == mode_capacity(reference_comb));
    CHECK_THAT(r.echo_time_s, WithinRel(1.0 / 150e3, 1e-12));
    // The reference envelope standard deviation covers fewer than ten tooth spacings.
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].code == "comb.not_well_resolved");
}

TEST_CASE("full report with zero write pulse") {
    ProtocolParams off = reference_protocol;
    off.theta0_sq = 0.0;
    const auto r = full_report(reference_comb, off);
    CHECK(r.p_stokes == 0.0);
    CHECK(r.noise_per_mode == 0.0);
    CHECK(std::isinf(r.snr_lower_bound));
    CHECK(r.eta_readout == readout_efficiency_backward(reference_comb));
}

TEST_CASE("protocol validation and warnings") {
    ProtocolParams p = reference_protocol;
    CHECK_NOTHROW(validate(p));
    p.theta0_sq = 0.31;
    CHECK_THROWS_AS(validate(p), validation_error);
    p = reference_protocol;
    p.t_d_s = -1.0;
    CHECK_THROWS_AS(validate(p), validation_error);
    p = reference_protocol;
    p.tau_s = -1e-9;
    CHECK_THROWS_AS(validate(p), validation_error);
    p = reference_protocol;
    p.read_area = 0.0;
    CHECK_THROWS_AS(validate(p), validation_error);
    p = reference_protocol;
    p.branching_ratio = 0.0;
    CHECK_THROWS_AS(validate(p), validation_error);
    p.branching_ratio = 1.5;
    CHECK_THROWS_AS(validate(p), validation_error);

    p = reference_protocol;
    CHECK(protocol_warnings(p).empty());
    p.theta0_sq = 0.15;
    auto w = protocol_warnings(p);
    REQUIRE(w.size() == 1);
    CHECK(w[0].code == "protocol.theta0_sq_large");
    p = reference_protocol;
    p.read_area = 0.5 * pi;
    w = protocol_warnings(p);
    REQUIRE(w.size() == 1);
    CHECK(w[0].code == "protocol.read_area_not_pi");
}

TEST_CASE("detection must precede the revival") {
    ProtocolParams p = reference_protocol;
    CHECK_NOTHROW(require_detection_before_revival(reference_comb, p));
    p.t_d_s = 1.0 / 150e3;  // exactly at the revival
    CHECK_THROWS_AS(require_detection_before_revival(reference_comb, p), regime_error);
    p.t_d_s = 7e-6;
    CHECK_THROWS_AS(require_detection_before_revival(reference_comb, p), regime_error);
    CHECK_THROWS_AS(full_report(reference_comb, p), regime_error);
}
