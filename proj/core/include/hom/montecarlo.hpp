#pragma once

// Event-level simulation of the pulsed source, the unbalanced fibre
// Mach-Zehnder interferometer and two imperfect detectors, accumulated into
// start-stop-free (all pairs) D1 - D2 time-difference histograms.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hom/analytic.hpp"
#include "hom/model.hpp"
#include "hom/random.hpp"

namespace hom {

struct SourceSim {
    EmitterParams emitter;
    DriveWaveform waveform;
    GateWindow gate;
    JitterSpec jitter;
    double emission_probability = 1.0;
    double background_mean = 0.0;  ///< uncorrelated photons per cycle
    bool chirp_on = false;

    void validate() const;
};

struct InterferometerSim {
    double delay = 1980.0;   ///< long-arm excess delay (ps)
    double split_a = 0.5;    ///< probability of taking the long arm at the first coupler
    double split_b = 0.5;    ///< power reflectivity of the final coupler
    PolarizationMode mode = PolarizationMode::Parallel;

    void validate() const;
};

struct DetectorSim {
    double efficiency = 1.0;
    double dark_rate = 0.0;      ///< counts per ps, per detector
    double timing_sigma = 200.0; ///< ps
    double bin_width = 64.0;     ///< ps
    double span = 0.0;           ///< half range (ps); 0 selects 7 source periods

    void validate(double period) const;
    double effective_span(double period) const;
};

struct CorrelationHistogram {
    double bin_width = 0.0;
    double origin = 0.0;  ///< left edge of bin 0 (ps)
    std::vector<std::int64_t> counts;
    std::uint64_t cycles_simulated = 0;
    std::uint64_t seed = 0;

    double bin_start(std::size_t i) const { return origin + bin_width * static_cast<double>(i); }
    double bin_center(std::size_t i) const { return bin_start(i) + 0.5 * bin_width; }
    /// Largest |time difference| fully covered on both sides.
    double half_range() const;
    std::int64_t total() const;
};

/// Empty histogram with an odd bin count so that one bin is centered on zero.
CorrelationHistogram make_histogram(double bin_width, double half_range);

/// Sums counts and cycles; binning must match.
CorrelationHistogram merge(const CorrelationHistogram& a, const CorrelationHistogram& b);

struct UniformGrid {
    double t0 = 0.0;
    double step = 1.0;
    std::size_t size = 0;
};

/// Wiener phase theta(t) with increment variance 2 gamma* dt and theta(t0) = 0.
std::vector<double> sample_phase_trajectory(double gamma_star, const UniformGrid& grid,
                                            RandomStream& rng);

/// theta(t + lag) - theta(t) for one realization: N(0, 2 gamma* |lag|).
double sample_phase_increment(double gamma_star, double lag, RandomStream& rng);

struct Detection {
    double time;
    int detector;  ///< 0 -> D1, 1 -> D2
};

struct EventStats {
    std::uint64_t photons = 0;       ///< source + background photons emitted
    std::uint64_t pairs_resolved = 0;
    std::uint64_t photon_detections = 0;
    std::uint64_t dark_counts = 0;
};

/// Detections for cycles [first, last) of a run of `total_cycles`. With a
/// null interferometer the photons go straight to a 50/50 splitter (HBT).
std::vector<Detection> simulate_detections(const SourceSim& source,
                                           const InterferometerSim* mz,
                                           const DetectorSim& det, std::uint64_t first,
                                           std::uint64_t last, std::uint64_t total_cycles,
                                           std::uint64_t seed, EventStats* stats = nullptr);

/// All-pairs histogram of D1 - D2 time differences.
CorrelationHistogram correlate(std::span<const Detection> events, double bin_width,
                               double half_range, int workers = 1);

CorrelationHistogram simulate_hom(const SourceSim& source, const InterferometerSim& mz,
                                  const DetectorSim& det, std::uint64_t cycles,
                                  std::uint64_t seed, int workers = 1);

CorrelationHistogram simulate_hbt(const SourceSim& source, const DetectorSim& det,
                                  std::uint64_t cycles, std::uint64_t seed, int workers = 1);

/// Fraction of a photon-photon correlation peak that falls inside a window
/// of +/- window_half_width around its center, after emission jitter and
/// detector timing blur on both photons.
double peak_capture_fraction(const SourceSim& source, const DetectorSim& det,
                             double window_half_width);

/// Mean background photons per cycle for which the normalized zero-delay
/// peak of an HBT histogram reads `target_g2`. `window_fraction` is the
/// share of a period covered by the integration window, `capture` the share
/// of a photon-photon peak inside it. Accidentals from a background uniform
/// in the cycle are flat.
double background_for_g2(double target_g2, double window_fraction,
                         double emission_probability = 1.0, double capture = 1.0);

/// CSV `bin_start_ps,counts`.
void write_csv(std::ostream& os, const CorrelationHistogram& hist);
CorrelationHistogram read_histogram_csv(std::istream& is);

/// JSON sidecar with seed, cycles, binning and the caller's config hash.
std::string sidecar_json(const CorrelationHistogram& hist, const std::string& config_hash);

}  // namespace hom
