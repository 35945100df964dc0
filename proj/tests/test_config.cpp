#include <gtest/gtest.h>

#include <hom/config.hpp>
#include <hom/errors.hpp>

using namespace hom;

TEST(Config, DefaultsValidate) {
    const RunConfig rc = parse_run_config("{}");
    EXPECT_NO_THROW(rc.validate());
    EXPECT_DOUBLE_EQ(rc.gate().t_on, 1680.0);
    EXPECT_DOUBLE_EQ(rc.analysis_window(), 495.0);
}

TEST(Config, ParsesSections) {
    const auto rc = parse_run_config(R"({
      "emitter": {"t1_radiative": 700, "coherence_time": 60},
      "waveform": {"period": 2000, "segments": [{"voltage": 1.45, "duration": 1700},
                                               {"voltage": 0.84, "duration": 300}]},
      "jitter": {"sigma": 31, "interpretation": "fwhm"},
      "source": {"background_mean": 0.01, "chirp_on": true},
      "interferometer": {"delay": 2000, "mode": "orthogonal"},
      "detector": {"timing_sigma": 50, "dark_rate": 1e-7},
      "simulation": {"cycles": 1000, "seed": 42, "workers": 3},
      "analysis": {"window_half_width": 400},
      "dip": {"delta_min": -100, "delta_max": 100, "delta_step": 10},
      "output": {"dir": "out"},
      "comment": "ignored"
    })");
    EXPECT_DOUBLE_EQ(rc.emitter.t1_radiative, 700.0);
    EXPECT_NEAR(rc.emitter.coherence_time(), 60.0, 1e-9);
    EXPECT_DOUBLE_EQ(rc.waveform.period(), 2000.0);
    EXPECT_EQ(rc.jitter.interpretation, JitterInterpretation::Fwhm);
    EXPECT_TRUE(rc.chirp_on);
    EXPECT_EQ(rc.interferometer.mode, PolarizationMode::Orthogonal);
    EXPECT_EQ(rc.cycles, 1000u);
    EXPECT_EQ(rc.seed, 42u);
    EXPECT_EQ(rc.workers, 3);
    EXPECT_DOUBLE_EQ(rc.analysis_window(), 400.0);
    EXPECT_EQ(rc.output_dir, "out");
    EXPECT_DOUBLE_EQ(rc.gate().t_on, 1700.0);
    EXPECT_NO_THROW(rc.validate());
}

TEST(Config, Rejects) {
    EXPECT_THROW(parse_run_config("{\"emitter\": {\"t1\": 800}}"), ValidationError);
    EXPECT_THROW(parse_run_config("{\"bogus\": 1}"), ValidationError);
    EXPECT_THROW(parse_run_config("not json"), ValidationError);
    EXPECT_THROW(parse_run_config("{\"jitter\": {\"interpretation\": \"rms\"}}"), ValidationError);
    EXPECT_THROW(parse_run_config(R"({"emitter": {"dephasing_rate": 0.1, "coherence_time": 60}})"),
                 ValidationError);
    EXPECT_THROW(parse_run_config(R"({"waveform": {"period": 1980, "segments": [{"voltage": 1, "duration": 1000}]}})"),
                 ValidationError);
    EXPECT_THROW(load_run_config("/nonexistent/config.json"), ValidationError);
    auto rc = parse_run_config(R"({"detector": {"span": 5000}})");
    EXPECT_THROW(rc.validate(), ValidationError);
}

TEST(Config, HashIsCanonical) {
    const auto a = parse_run_config(R"({"simulation": {"seed": 3, "workers": 1}})");
    const auto b = parse_run_config(R"({"simulation": {"workers": 8, "seed": 3}, "output": {"dir": "x"}})");
    const auto c = parse_run_config(R"({"simulation": {"seed": 4}})");
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_NE(config_hash(a), config_hash(c));
    EXPECT_EQ(config_hash(a).size(), 16u);
    EXPECT_EQ(to_json(parse_run_config(to_json(a))), to_json(a));
}
