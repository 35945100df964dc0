#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include <hom/analytic.hpp>
#include <hom/config.hpp>
#include <hom/errors.hpp>

#include "oracles.hpp"

using namespace hom;

namespace {

PhotonPacket ungated() { return PhotonPacket(ExponentialEnvelope{800.0}); }

PhotonPacket gated(double length = 300.0) {
    return PhotonPacket(GatedExponentialEnvelope{800.0, {1980.0 - length, 1980.0}});
}

DipSetup reference_setup() {
    RunConfig rc;
    rc.emitter.dephasing_rate = dephasing_rate_for_coherence_time(800, 60);
    rc.jitter.sigma = 31;
    return rc.dip_setup();
}

}  // namespace

TEST(Coincidence, IdenticalPurePacketsNeverCoincide) {
    EXPECT_NEAR(coincidence_probability({ungated(), ungated(), 0.0, 0.0}), 0.0, 1e-9);
    EXPECT_NEAR(coincidence_probability({gated(), gated(), 0.0, 0.0}), 0.0, 1e-9);
}

TEST(Coincidence, OrthogonalIsHalf) {
    for (double dt : {0.0, 40.0, -500.0})
        for (double g : {0.0, 0.01})
            EXPECT_NEAR(coincidence_probability(
                            {gated(), gated(), dt, g, PolarizationMode::Orthogonal}),
                        0.5, 1e-9);
    const PhotonPacket h(ExponentialEnvelope{800.0}, 0.0, std::nullopt, Polarization::H);
    const PhotonPacket v(ExponentialEnvelope{800.0}, 0.0, std::nullopt, Polarization::V);
    EXPECT_NEAR(coincidence_probability({h, v, 0.0, 0.0}), 0.5, 1e-9);
}

TEST(Coincidence, UngatedDephasedClosedForm) {
    const double g = 1.0 / 62.34, gamma = 1.0 / 800.0;
    const double pc = coincidence_probability({ungated(), ungated(), 0.0, g});
    EXPECT_NEAR(pc, 0.5 * (1.0 - gamma / (gamma + 2 * g)), 1e-9);
    EXPECT_NEAR(pc, 0.481, 5e-4);
}

TEST(Coincidence, BoundedInHalfInterval) {
    for (double dt : {-250.0, -20.0, 0.0, 3.0, 120.0, 299.0, 400.0})
        for (double g : {0.0, 1e-3, 0.05}) {
            const double p = coincidence_probability({gated(), gated(), dt, g});
            EXPECT_GE(p, -1e-9);
            EXPECT_LE(p, 0.5 + 1e-9);
        }
}

TEST(Density, NonNegativeAndSymmetricPair) {
    const PairConfig c{gated(), gated(), 37.0, 0.01};
    for (double t = 1650; t < 2000; t += 13.3)
        for (double tau = -350; tau < 350; tau += 17.1) EXPECT_GE(joint_density(c, t, tau), 0.0);
    const PairConfig same{gated(), gated(), 0.0, 0.0};
    EXPECT_NEAR(joint_density(same, 1700.0, 50.0), 0.0, 1e-18);
}

TEST(Visibility, Examples) {
    EXPECT_NEAR(pair_visibility({ungated(), ungated(), 0.0, 0.0}), 1.0, 1e-9);
    EXPECT_NEAR(pair_visibility({ungated(), ungated(), 0.0, 1.0 / 62.34}), 0.0375, 5e-5);
    EXPECT_NEAR(pair_visibility({ungated(), ungated(), 100.0, 0.0}), std::exp(-100.0 / 800.0),
                1e-9);
    EXPECT_NEAR(pair_visibility({ungated(), ungated(), 100.0, 0.0}), 0.8825, 5e-5);
}

TEST(Visibility, UngatedIdentityAcrossRates) {
    const double gamma = 1.0 / 800.0;
    for (double g : {0.0, 1.0 / 500, 1.0 / 62.34, 1.0 / 10}) {
        const double v = pair_visibility({ungated(), ungated(), 0.0, g});
        EXPECT_NEAR(v, gamma / (gamma + 2 * g), 1e-6) << g;
        const double t2 = 1.0 / (1.0 / 1600.0 + g);
        EXPECT_NEAR(gamma / (gamma + 2 * g), fixed_bias_visibility(800.0, t2), 1e-9);
    }
}

TEST(Visibility, GatedMatchesBruteForce) {
    for (double len : {50.0, 300.0})
        for (double g : {0.0, 1.0 / 62.34, 0.05})
            for (double dt : {0.0, 23.0, -71.0, 180.0}) {
                const double v = pair_visibility({gated(len), gated(len), dt, g});
                EXPECT_NEAR(v, oracle::gated_visibility(800.0, len, g, dt), 2e-6)
                    << len << " " << g << " " << dt;
            }
}

TEST(Visibility, NonIncreasingInDephasing) {
    for (double dt : {0.0, 60.0}) {
        double prev = 2.0;
        for (double g : {0.0, 1e-4, 1e-3, 5e-3, 1e-2, 0.02, 0.05, 0.1, 0.5}) {
            const double v = pair_visibility({gated(), gated(), dt, g});
            EXPECT_LE(v, prev + 1e-9);
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
            prev = v;
        }
    }
}

TEST(Visibility, ChirpInvariantAtZeroOffset) {
    const auto w = build_waveform({{1.2, 1680}, {0.9, 120}, {0.7, 180}}, 1980);
    const GateWindow gate{1680, 1980};
    const EmitterParams p;
    const auto chirped = make_gated_packet(p, gate, &w);
    const auto plain = make_gated_packet(p, gate);
    for (double g : {0.0, 0.01})
        EXPECT_NEAR(pair_visibility({chirped, chirped, 0.0, g}), pair_visibility({plain, plain, 0.0, g}),
                    1e-10);
    // A real chirp does matter once the packets are offset.
    EXPECT_LT(pair_visibility({chirped, chirped, 60.0, 0.0}),
              pair_visibility({plain, plain, 60.0, 0.0}) - 1e-3);
}

TEST(Visibility, CarrierDetuningReducesOverlap) {
    const PhotonPacket a(ExponentialEnvelope{800.0});
    const PhotonPacket b(ExponentialEnvelope{800.0}, 0.0, std::nullopt, Polarization::H, 0.002);
    const double gamma = 1.0 / 800.0;
    // |<a|b>|^2 for a detuning w: gamma^2 / (gamma^2 + w^2)
    EXPECT_NEAR(pair_visibility({a, b, 0.0, 0.0}), gamma * gamma / (gamma * gamma + 0.002 * 0.002),
                1e-7);
}

TEST(Dip, ZeroJitterPurePacketsIsZero) {
    DipSetup s;
    s.gate = {1680, 1980};
    EXPECT_NEAR(dip_central_area(0.0, s), 0.0, 1e-9);
}

TEST(Dip, OrthogonalIsHalfEverywhere) {
    auto s = reference_setup();
    s.mode = PolarizationMode::Orthogonal;
    for (double d : {-400.0, -25.0, 0.0, 150.0}) EXPECT_DOUBLE_EQ(dip_central_area(d, s), 0.5);
}

TEST(Dip, MatchesJitterOracle) {
    auto s = reference_setup();
    for (auto interp : {JitterInterpretation::StdDev, JitterInterpretation::OneOverEHalfWidth}) {
        s.jitter.interpretation = interp;
        const double sd = std::sqrt(2.0) * s.jitter.standard_deviation();
        for (double delta : {0.0, 40.0, 150.0}) {
            auto v = [&](double x) {
                return oracle::gated_visibility(800.0, 300.0, s.emitter.dephasing_rate, x, 1000);
            };
            const double expect = 0.5 * (1.0 - oracle::gaussian_mean(v, delta, sd, 1600));
            EXPECT_NEAR(dip_central_area(delta, s), expect, 5e-5) << delta;
        }
    }
}

TEST(Dip, SymmetricAndMonotone) {
    auto s = reference_setup();
    const auto grid = delta_grid(0.0, 400.0, 25.0);
    double prev = -1.0;
    for (double d : grid) {
        const double plus = dip_central_area(d, s);
        EXPECT_NEAR(plus, dip_central_area(-d, s), 1e-7) << d;
        EXPECT_GE(plus, prev - 1e-9) << d;
        EXPECT_GE(plus, 0.0);
        EXPECT_LE(plus, 0.5);
        prev = plus;
    }
}

TEST(Dip, MonotoneWithoutDephasingOrJitter) {
    DipSetup s;
    s.gate = {1680, 1980};
    double prev = -1.0;
    for (double d = 0.0; d <= 320.0; d += 20.0) {
        const double c = dip_central_area(d, s);
        EXPECT_GE(c, prev - 1e-9);
        prev = c;
    }
    EXPECT_NEAR(prev, 0.5, 1e-12);
}

TEST(Dip, ChirpNegligibleAtReferenceOperatingPoint) {
    auto s = reference_setup();
    auto c = s;
    c.chirp_on = true;
    for (double d : delta_grid(-400.0, 400.0, 50.0))
        EXPECT_LT(std::abs(dip_central_area(d, c) - dip_central_area(d, s)), 0.01);
}

TEST(Dip, ChirpNeedsWaveform) {
    DipSetup s;
    s.gate = {1680, 1980};
    s.chirp_on = true;
    EXPECT_THROW(dip_central_area(0.0, s), ValidationError);
}

TEST(Dip, CsvRoundTrip) {
    auto s = reference_setup();
    const auto grid = delta_grid(-100.0, 100.0, 50.0);
    ASSERT_EQ(grid.size(), 5u);
    const auto curve = dip_curve(grid, s);
    std::stringstream ss;
    write_csv(ss, curve);
    const std::string text = ss.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "delta_ps,central_area");
    const auto back = read_dip_csv(ss);
    ASSERT_EQ(back.size(), grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EXPECT_DOUBLE_EQ(back[i].delta, grid[i]);
        EXPECT_NEAR(back[i].central_area, curve.points[i].central_area, 1e-11);
    }
}

TEST(Dip, EvaluationOrderDoesNotMatter) {
    auto s = reference_setup();
    const std::vector<double> fwd{-50.0, 0.0, 75.0};
    const std::vector<double> rev{75.0, 0.0, -50.0};
    const auto a = dip_curve(fwd, s), b = dip_curve(rev, s);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(a.points[i].central_area, b.points[2 - i].central_area);
}

TEST(Relations, FixedBias) {
    EXPECT_DOUBLE_EQ(fixed_bias_visibility(800, 60), 0.0375);
    EXPECT_DOUBLE_EQ(fixed_bias_visibility(800, 1600), 1.0);
    EXPECT_DOUBLE_EQ(fixed_bias_visibility(800, 120), 0.075);
    EXPECT_THROW(fixed_bias_visibility(800, 1601), DomainError);
    EXPECT_THROW(fixed_bias_visibility(0, 60), ValidationError);
}

TEST(Relations, DephasingTime) {
    EXPECT_NEAR(dephasing_time(800, 60), 62.34, 5e-3);
    EXPECT_EQ(dephasing_time(800, 1600), std::numeric_limits<double>::infinity());
    EXPECT_NEAR(dephasing_time(1e12, 60), 60.0, 1e-6);
    EXPECT_THROW(dephasing_time(800, 2000), DomainError);
    EXPECT_NEAR(1.0 / dephasing_rate_for_coherence_time(800, 60), dephasing_time(800, 60), 1e-9);
}

TEST(Relations, EntanglementCriterion) {
    EXPECT_TRUE(entanglement_criterion(0.64, 0.03));
    EXPECT_FALSE(entanglement_criterion(0.05, 0.03));
    EXPECT_FALSE(entanglement_criterion(0.06, 0.03));
}
