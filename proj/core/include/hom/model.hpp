#pragma once

// Shared physical model of the electrically driven single-photon diode:
// emitter parameters, the periodic drive waveform, the linear Stark map,
// the energy-filter time gate it induces, and single-photon wave packets.
//
// Units are fixed throughout: time in ps, voltage in V, photon energy in eV,
// Stark coefficient in meV/V, rates in 1/ps, phases in rad.

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace hom {

/// Reduced Planck constant in meV * ps.
inline constexpr double kHbarMeVps = 0.6582119569;

enum class Polarization { H, V };

struct EmitterParams {
    double t1_radiative = 800.0;            ///< radiative lifetime T1 (ps)
    double dephasing_rate = 0.0;            ///< pure dephasing rate gamma* = 1/T2* (1/ps)
    double center_energy = 1.31495;         ///< line energy at reference_voltage (eV)
    double stark_coefficient = 0.2 / 0.61;  ///< dE/dV (meV/V)
    double reference_voltage = 1.45;        ///< V

    void validate() const;

    /// T2 from 1/T2 = 1/(2 T1) + gamma*.
    double coherence_time() const;
};

struct Segment {
    double voltage;   ///< V
    double duration;  ///< ps
};

/// Piecewise-constant periodic voltage sequence.
class DriveWaveform {
public:
    DriveWaveform(std::vector<Segment> segments, double period);

    double period() const noexcept { return period_; }
    std::span<const Segment> segments() const noexcept { return segments_; }

    /// Start time of segment i within the cycle.
    double segment_start(std::size_t i) const { return starts_.at(i); }

    /// Voltage at absolute time t; the sequence repeats with period().
    double voltage_at(double t) const;

private:
    std::vector<Segment> segments_;
    std::vector<double> starts_;
    double period_;
};

DriveWaveform build_waveform(std::vector<Segment> segments, double period);

struct FilterWindow {
    double center_energy = 1.31475;  ///< eV
    double full_width = 1e-4;        ///< eV
    Polarization polarization = Polarization::H;

    void validate() const;
    bool passes(double energy) const;
};

/// Within-cycle collection interval [t_on, t_off].
struct GateWindow {
    double t_on = 0.0;
    double t_off = 0.0;

    double duration() const noexcept { return t_off - t_on; }
    void validate() const;
    void validate(double period) const;
};

enum class JitterInterpretation { StdDev, Fwhm, OneOverEHalfWidth };

/// Gaussian spread of each wave-packet's emission reference time.
struct JitterSpec {
    double sigma = 0.0;  ///< ps, read according to `interpretation`
    JitterInterpretation interpretation = JitterInterpretation::OneOverEHalfWidth;

    void validate() const;

    /// Standard deviation of the per-photon Gaussian.
    double standard_deviation() const;
};

/// Line energy (eV) at a given bias voltage.
double stark_energy(double voltage, const EmitterParams& params);

/// Interval of the cycle during which the Stark-shifted line lies in the
/// filter band. Throws EmptyGateError or MultipleGatesError.
GateWindow collection_gate(const DriveWaveform& waveform, const EmitterParams& params,
                           const FilterWindow& filter);

/// Deterministic phase sampled on a uniform grid, linearly interpolated and
/// held constant beyond the ends.
class SampledPhase {
public:
    SampledPhase(double t0, double step, std::vector<double> values,
                 std::vector<double> kinks = {});

    double t0() const noexcept { return t0_; }
    double step() const noexcept { return step_; }
    double t_end() const noexcept { return t0_ + step_ * static_cast<double>(values_.size() - 1); }
    std::span<const double> values() const noexcept { return values_; }

    /// Interior times where the slope changes (segment edges).
    std::span<const double> kinks() const noexcept { return kinks_; }

    double operator()(double t) const;

    /// Angular-frequency offset (rad/ps), i.e. the local slope.
    double frequency_offset(double t) const;

private:
    double t0_;
    double step_;
    std::vector<double> values_;
    std::vector<double> kinks_;
};

/// phi(t) = (1/hbar) * integral from gate.t_on to t of (E(V(t')) - center_energy).
SampledPhase chirp_phase(const GateWindow& gate, const DriveWaveform& waveform,
                         const EmitterParams& params, double step = 1.0);

struct ExponentialEnvelope {
    double decay;  ///< intensity 1/e time (ps)
};

/// Exponential decay starting at gate.t_on, truncated to the gate and renormalized.
struct GatedExponentialEnvelope {
    double decay;
    GateWindow gate;
};

using Envelope = std::variant<ExponentialEnvelope, GatedExponentialEnvelope>;

/// Temporal amplitude of a single photon. The envelope and chirp are defined
/// in packet-local time; center_time shifts the whole packet.
class PhotonPacket {
public:
    explicit PhotonPacket(Envelope envelope, double center_time = 0.0,
                          std::optional<SampledPhase> chirp = std::nullopt,
                          Polarization polarization = Polarization::H,
                          double carrier_detuning = 0.0);

    const Envelope& envelope() const noexcept { return envelope_; }
    double center_time() const noexcept { return center_time_; }
    const std::optional<SampledPhase>& chirp() const noexcept { return chirp_; }
    Polarization polarization() const noexcept { return polarization_; }
    double carrier_detuning() const noexcept { return carrier_detuning_; }

    /// Normalized |zeta(t)|^2 (1/ps).
    double intensity(double t) const;

    /// Deterministic phase: carrier detuning plus chirp.
    double phase(double t) const;

    double support_begin() const;
    /// +infinity for an untruncated exponential.
    double support_end() const;

    double decay() const;

    /// Kinks of the phase in absolute time.
    std::vector<double> phase_kinks() const;

    /// Inverse CDF of the intensity, u in [0, 1).
    double sample_time(double u) const;

    PhotonPacket shifted(double dt) const;

private:
    Envelope envelope_;
    double center_time_;
    std::optional<SampledPhase> chirp_;
    Polarization polarization_;
    double carrier_detuning_;
    double norm_;  // 1 / (decay * (1 - exp(-L/decay)))
};

/// Gated exponential packet with decay T1, optionally carrying the gate chirp.
PhotonPacket make_gated_packet(const EmitterParams& params, const GateWindow& gate,
                               const DriveWaveform* chirp_source = nullptr,
                               double center_time = 0.0);

}  // namespace hom
