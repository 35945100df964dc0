#pragma once

// Two-photon interference by deterministic quadrature: the ensemble-averaged
// joint detection density behind a balanced coupler, coincidence
// probabilities, pair visibilities and the jitter-averaged dip curve, plus
// the closed-form coherence relations.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hom/model.hpp"
#include "hom/quadrature.hpp"

namespace hom {

enum class PolarizationMode { Parallel, Orthogonal };

struct PairConfig {
    PhotonPacket packet_a;
    PhotonPacket packet_b;
    double relative_offset = 0.0;  ///< ps, added to packet_b's center
    double dephasing_rate = 0.0;   ///< gamma* (1/ps), shared by both photons
    PolarizationMode mode = PolarizationMode::Parallel;

    void validate() const;
};

/// Ensemble-averaged joint density G(t, tau) for one detection at t and the
/// other at t + tau on opposite outputs. Tiny negative round-off is clamped;
/// a materially negative value throws NumericalError.
double joint_density(const PairConfig& cfg, double t, double tau);

/// Probability that the two photons leave through different outputs.
double coincidence_probability(const PairConfig& cfg, const QuadratureSpec& quad = {});

/// 1 - 2 * P_c evaluated in PARALLEL mode.
double pair_visibility(const PairConfig& cfg, const QuadratureSpec& quad = {});

/// Fixed inputs of a dip scan.
struct DipSetup {
    EmitterParams emitter;
    GateWindow gate;
    JitterSpec jitter;
    bool chirp_on = false;
    /// Needed when chirp_on; the gate chirp is derived from it.
    std::optional<DriveWaveform> waveform;
    PolarizationMode mode = PolarizationMode::Parallel;

    void validate() const;
};

struct DipPoint {
    double delta;         ///< ps, source period minus interferometer delay
    double central_area;  ///< normalized to the uncorrelated peaks
};

struct DipCurve {
    std::vector<DipPoint> points;
    DipSetup params;
};

/// Central-peak area for one period mismatch, averaged over the Gaussian
/// pair offset N(delta, 2 s^2).
double dip_central_area(double delta, const DipSetup& setup, const QuadratureSpec& quad = {});

/// Pair visibility averaged over the jitter distribution at mismatch delta.
double mean_visibility(double delta, const DipSetup& setup, const QuadratureSpec& quad = {});

DipCurve dip_curve(std::span<const double> deltas, const DipSetup& setup,
                   const QuadratureSpec& quad = {});

/// Uniform grid min, min+step, ..., up to and including max.
std::vector<double> delta_grid(double min, double max, double step);

/// CSV with header `delta_ps,central_area`, 12 significant digits.
void write_csv(std::ostream& os, const DipCurve& curve);
std::vector<DipPoint> read_dip_csv(std::istream& is);

// Closed-form relations between T1, T2 and T2*.

/// T2 / (2 T1): visibility of photons from a fixed-bias emitter.
double fixed_bias_visibility(double t1, double t2);

/// T2* from 1/T2 = 1/(2 T1) + 1/T2*; +infinity when T2 == 2 T1.
double dephasing_time(double t1, double t2);

/// gamma* = 1/T2* for a given coherence time T2.
double dephasing_rate_for_coherence_time(double t1, double t2);

/// visibility > 2 g2(0), strict.
bool entanglement_criterion(double visibility, double g2_zero);

}  // namespace hom
