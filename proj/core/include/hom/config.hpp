#pragma once

// JSON run configuration. Keys mirror the field names of the engine types;
// units are fixed (ps, V, eV, meV/V, 1/ps). See docs/config.md.

#include <cstdint>
#include <filesystem>
#include <string>

#include "hom/analytic.hpp"
#include "hom/model.hpp"
#include "hom/montecarlo.hpp"

namespace hom {

/// Drive sequence used for the reference runs: bias, injection pulse,
/// then the 0.61 V step down into the collection window.
DriveWaveform reference_waveform();

struct DipScan {
    double delta_min = -400.0;
    double delta_max = 400.0;
    double delta_step = 25.0;
};

struct RunConfig {
    EmitterParams emitter;
    DriveWaveform waveform = reference_waveform();
    FilterWindow filter;
    JitterSpec jitter;
    double emission_probability = 1.0;
    double background_mean = 0.0;
    bool chirp_on = false;
    InterferometerSim interferometer;
    DetectorSim detector;
    std::uint64_t cycles = 100000;
    std::uint64_t seed = 1;
    int workers = 1;
    double window_half_width = 0.0;  ///< 0 selects a quarter period
    DipScan dip;
    std::string output_dir;

    void validate() const;

    GateWindow gate() const;
    SourceSim source() const;
    DipSetup dip_setup() const;
    double analysis_window() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical JSON of the fully resolved configuration.
std::string to_json(const RunConfig& config);

/// 64-bit FNV-1a of the canonical JSON, as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace hom
