#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "sonoloc/errors.hpp"
#include "sonoloc/waveform.hpp"
#include "support.hpp"

using namespace sonoloc;
using doctest::Approx;

namespace {

WaveformParams defaults() { return WaveformParams{}; }

// Brute-force schedule: enumerate cycles directly from the cycle rule.
std::vector<double> enumerate_pulses(const WaveformParams& p, double duration) {
    std::vector<double> tau;
    for (int k = 0;; ++k) {
        bool any = false;
        for (int j = 0; j < 3; ++j) {
            const double t = k * p.T2 + p.T1 + j * p.T3;
            if (t < duration) {
                tau.push_back(t);
                any = true;
            }
        }
        if (!any) break;
    }
    return tau;
}

}  // namespace

TEST_CASE("pulse schedule for one cycle") {
    const auto sched = build_pulse_schedule(defaults(), 0.25);
    REQUIRE(sched.tau.size() == 3);
    CHECK(sched.tau[0] == Approx(0.16).epsilon(1e-12));
    CHECK(sched.tau[1] == Approx(0.19).epsilon(1e-12));
    CHECK(sched.tau[2] == Approx(0.22).epsilon(1e-12));
    CHECK(sched.pulses_per_cycle == 3);
    CHECK(sched.cycle_period == Approx(0.25));
}

TEST_CASE("empty duration yields an empty schedule") {
    CHECK(build_pulse_schedule(defaults(), 0.0).tau.empty());
}

TEST_CASE("schedule matches brute-force enumeration") {
    const auto p = defaults();
    for (double duration : {0.5, 0.47, 1.0, 3.21}) {
        const auto sched = build_pulse_schedule(p, duration);
        const auto expected = enumerate_pulses(p, duration);
        REQUIRE(sched.tau.size() == expected.size());
        for (std::size_t i = 0; i < expected.size(); ++i)
            CHECK(sched.tau[i] == Approx(expected[i]).epsilon(1e-12));
    }
    // two cycles -> six pulses at the cycle rule positions
    const auto two = build_pulse_schedule(p, 0.5);
    REQUIRE(two.tau.size() == 6);
    CHECK(two.tau[3] == Approx(0.41));
    CHECK(two.tau[4] == Approx(0.44));
    CHECK(two.tau[5] == Approx(0.47));
}

TEST_CASE("schedule is periodic with the cycle length") {
    const auto p = defaults();
    const auto sched = build_pulse_schedule(p, 5.0);
    for (std::size_t i = 0; i + 3 < sched.tau.size(); ++i)
        CHECK(sched.tau[i + 3] - sched.tau[i] == Approx(p.T2).epsilon(1e-12));
    // pulses stay strictly increasing and each ends inside its cycle
    for (std::size_t i = 1; i < sched.tau.size(); ++i)
        CHECK(sched.tau[i] > sched.tau[i - 1]);
    for (double tau : sched.tau) {
        const double cycle_end = (std::floor(tau / p.T2) + 1.0) * p.T2;
        CHECK(tau + p.Tp < cycle_end);
    }
}

TEST_CASE("phase offset endpoints and summit") {
    const auto p = defaults();
    const auto sched = build_pulse_schedule(p, 0.5);
    for (double tau : sched.tau) {
        CHECK(pulse_phase_offset(sched, p, tau) == Approx(0.0).epsilon(1e-12));
        CHECK(std::abs(pulse_phase_offset(sched, p, tau + p.Tp)) < 1e-12);
        CHECK(pulse_phase_offset(sched, p, tau + p.Tp / 2.0) ==
              Approx(std::numbers::pi).epsilon(1e-12));
    }
    CHECK(pulse_phase_offset(sched, p, 0.01) == 0.0);
    CHECK(pulse_phase_offset(sched, p, 0.1599) == 0.0);
}

TEST_CASE("first sample of the pure carrier is one") {
    const auto p = defaults();
    const auto stream = synthesize(p, PulseSchedule{{}, p.T2, 3}, 0.01);
    CHECK(stream.samples[0] == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("synthesized stream is unit amplitude") {
    const auto p = defaults();
    const auto sched = build_pulse_schedule(p, 0.5);
    const auto stream = synthesize(p, sched, 0.5);
    REQUIRE(stream.samples.size() == 22050);
    double peak = 0.0;
    for (double s : stream.samples) {
        CHECK(std::abs(s) <= 1.0 + 1e-12);
        peak = std::max(peak, std::abs(s));
    }
    CHECK(peak == Approx(1.0).epsilon(1e-9));
}

TEST_CASE("demodulated pulse shape: flat outside, near pi at the summit") {
    const auto p = defaults();
    const auto sched = build_pulse_schedule(p, 0.5);
    const auto stream = synthesize(p, sched, 0.5);
    const auto phase = testsupport::demod_phase(stream, p.f, 3000.0);

    // outside every pulse window the carrier is unmodulated
    for (double t : {0.05, 0.10, 0.14, 0.30, 0.38}) {
        const auto n = static_cast<std::size_t>(t * p.sample_rate);
        CHECK(std::abs(phase[n]) < 0.02);
    }
    // at a pulse summit the offset approaches pi (the measuring low-pass
    // shaves a little off the peak)
    const auto n_mid = static_cast<std::size_t>((sched.tau[0] + p.Tp / 2.0) * p.sample_rate);
    CHECK(phase[n_mid] > 2.5);
    CHECK(phase[n_mid] < std::numbers::pi + 0.05);
}

TEST_CASE("99 percent of the energy stays in the nominal pulse band") {
    const auto p = defaults();
    const auto sched = build_pulse_schedule(p, p.T2);
    const auto stream = synthesize(p, sched, p.T2);
    const std::size_t n = stream.samples.size();
    REQUIRE(n == 11025);

    double total = 0.0;
    for (double s : stream.samples) total += s * s;

    // One-sided band energy via direct DFT bins, doubled for the mirror.
    const double half_band = std::numbers::pi / p.Tp;  // the design estimate, Hz
    const double bin_hz = p.sample_rate / static_cast<double>(n);
    const auto k_lo = static_cast<std::size_t>(std::ceil((p.f - half_band) / bin_hz));
    const auto k_hi = static_cast<std::size_t>(std::floor((p.f + half_band) / bin_hz));
    double band = 0.0;
    for (std::size_t k = k_lo; k <= k_hi; ++k) {
        std::complex<double> acc{0.0, 0.0};
        const double w = testsupport::kTwoPi * static_cast<double>(k) / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
            acc += stream.samples[i] *
                   std::complex<double>(std::cos(w * static_cast<double>(i)),
                                        -std::sin(w * static_cast<double>(i)));
        band += std::norm(acc);
    }
    band = 2.0 * band / static_cast<double>(n);
    CHECK(band / total > 0.99);
}

TEST_CASE("windowed synthesis matches a single long run") {
    const auto p = defaults();
    const auto sched = build_pulse_schedule(p, 1.0);
    const auto full = synthesize(p, sched, 1.0);
    const auto head = synthesize(p, sched, 0.4);
    const auto tail = synthesize(p, sched, 0.6, 0.4);
    REQUIRE(head.samples.size() + tail.samples.size() == full.samples.size());
    for (std::size_t i = 0; i < head.samples.size(); ++i)
        CHECK(head.samples[i] == Approx(full.samples[i]).epsilon(1e-9));
    for (std::size_t i = 0; i < tail.samples.size(); ++i)
        CHECK(tail.samples[i] ==
              Approx(full.samples[head.samples.size() + i]).epsilon(1e-9));
}

TEST_CASE("parameter invariants are enforced") {
    auto p = defaults();
    p.f = 16000.0;
    CHECK_THROWS_AS(p.validate(), InvalidParams);
    p = defaults();
    p.f = 24500.0;
    CHECK_THROWS_AS(p.validate(), InvalidParams);
    p = defaults();
    p.T3 = 0.006;  // < Tp: adjacent pulses would overlap
    p.T1 = p.T2 - 3.0 * p.T3;
    CHECK_THROWS_AS(p.validate(), InvalidParams);
    p = defaults();
    p.T1 = 0.17;  // breaks the cycle rule
    CHECK_THROWS_AS(p.validate(), InvalidParams);
    p = defaults();
    p.l_m = 90.0;  // v_a*T2 = 85 < l_m
    CHECK_THROWS_AS(p.validate(), InvalidParams);
    p = defaults();
    p.sample_rate = 37000.0;
    CHECK_THROWS_AS(p.validate(), InvalidParams);
    CHECK_THROWS_AS(build_pulse_schedule(defaults(), -1.0), InvalidParams);
}
