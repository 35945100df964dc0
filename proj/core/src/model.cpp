#include "hom/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "hom/errors.hpp"

namespace hom {

namespace {

constexpr double kEnergyEps = 1e-12;  // eV

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

// Integral of the detuning (meV * ps) over [a, b] within one cycle.
double detuning_integral(const DriveWaveform& waveform, const EmitterParams& params, double a,
                         double b) {
    double acc = 0.0;
    auto segments = waveform.segments();
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const double s0 = waveform.segment_start(i);
        const double s1 = s0 + segments[i].duration;
        const double lo = std::max(a, s0);
        const double hi = std::min(b, s1);
        if (hi <= lo) continue;
        const double detuning_mev =
            (stark_energy(segments[i].voltage, params) - params.center_energy) * 1e3;
        acc += detuning_mev * (hi - lo);
    }
    return acc;
}

}  // namespace

void EmitterParams::validate() const {
    if (!finite_positive(t1_radiative))
        throw ValidationError("emitter: t1_radiative must be > 0");
    if (!std::isfinite(dephasing_rate) || dephasing_rate < 0.0)
        throw ValidationError("emitter: dephasing_rate must be >= 0");
    if (!finite_positive(center_energy))
        throw ValidationError("emitter: center_energy must be > 0");
    if (!std::isfinite(stark_coefficient) || !std::isfinite(reference_voltage))
        throw ValidationError("emitter: Stark calibration must be finite");
}

double EmitterParams::coherence_time() const {
    return 1.0 / (0.5 / t1_radiative + dephasing_rate);
}

DriveWaveform::DriveWaveform(std::vector<Segment> segments, double period)
    : segments_(std::move(segments)), period_(period) {
    if (segments_.empty()) throw ValidationError("waveform: empty segment list");
    if (!finite_positive(period_)) throw ValidationError("waveform: period must be > 0");
    double total = 0.0;
    starts_.reserve(segments_.size());
    for (const auto& s : segments_) {
        if (!finite_positive(s.duration))
            throw ValidationError("waveform: segment durations must be > 0");
        if (!std::isfinite(s.voltage)) throw ValidationError("waveform: voltage must be finite");
        starts_.push_back(total);
        total += s.duration;
    }
    if (std::abs(total - period_) > 1e-9 * period_)
        throw ValidationError("waveform: segment durations sum to " + std::to_string(total) +
                              " ps, period is " + std::to_string(period_) + " ps");
}

double DriveWaveform::voltage_at(double t) const {
    double local = std::fmod(t, period_);
    if (local < 0.0) local += period_;
    auto it = std::upper_bound(starts_.begin(), starts_.end(), local);
    const auto idx = static_cast<std::size_t>(std::distance(starts_.begin(), it)) - 1;
    return segments_[idx].voltage;
}

DriveWaveform build_waveform(std::vector<Segment> segments, double period) {
    return DriveWaveform(std::move(segments), period);
}

void FilterWindow::validate() const {
    if (!finite_positive(full_width)) throw ValidationError("filter: full_width must be > 0");
    if (!finite_positive(center_energy))
        throw ValidationError("filter: center_energy must be > 0");
}

bool FilterWindow::passes(double energy) const {
    return std::abs(energy - center_energy) <= 0.5 * full_width + kEnergyEps;
}

void GateWindow::validate() const {
    if (!std::isfinite(t_on) || !std::isfinite(t_off) || t_on < 0.0 || !(t_on < t_off))
        throw ValidationError("gate: require 0 <= t_on < t_off");
}

void GateWindow::validate(double period) const {
    validate();
    if (t_off > period * (1.0 + 1e-12))
        throw ValidationError("gate: t_off exceeds the waveform period");
}

void JitterSpec::validate() const {
    if (!std::isfinite(sigma) || sigma < 0.0) throw ValidationError("jitter: sigma must be >= 0");
}

double JitterSpec::standard_deviation() const {
    switch (interpretation) {
        case JitterInterpretation::StdDev:
            return sigma;
        case JitterInterpretation::Fwhm:
            return sigma / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
        case JitterInterpretation::OneOverEHalfWidth:
            return sigma / std::numbers::sqrt2;
    }
    return sigma;
}

double stark_energy(double voltage, const EmitterParams& params) {
    return params.center_energy +
           params.stark_coefficient * 1e-3 * (voltage - params.reference_voltage);
}

GateWindow collection_gate(const DriveWaveform& waveform, const EmitterParams& params,
                           const FilterWindow& filter) {
    filter.validate();
    auto segments = waveform.segments();
    std::vector<GateWindow> runs;
    bool open = false;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const bool in_band = filter.passes(stark_energy(segments[i].voltage, params));
        const double s0 = waveform.segment_start(i);
        const double s1 = s0 + segments[i].duration;
        if (in_band && open) {
            runs.back().t_off = s1;
        } else if (in_band) {
            runs.push_back({s0, s1});
        }
        open = in_band;
    }
    if (runs.empty()) throw EmptyGateError("collection gate: line never enters the filter band");
    if (runs.size() > 1)
        throw MultipleGatesError("collection gate: " + std::to_string(runs.size()) +
                                 " disjoint in-band intervals per cycle");
    runs.front().t_off = std::min(runs.front().t_off, waveform.period());
    return runs.front();
}

SampledPhase::SampledPhase(double t0, double step, std::vector<double> values,
                           std::vector<double> kinks)
    : t0_(t0), step_(step), values_(std::move(values)), kinks_(std::move(kinks)) {
    if (values_.size() < 2) throw ValidationError("sampled phase: need at least two samples");
    if (!finite_positive(step_)) throw ValidationError("sampled phase: grid must be increasing");
    std::sort(kinks_.begin(), kinks_.end());
}

double SampledPhase::operator()(double t) const {
    const double x = (t - t0_) / step_;
    if (x <= 0.0) return values_.front();
    const auto last = static_cast<double>(values_.size() - 1);
    if (x >= last) return values_.back();
    const auto i = static_cast<std::size_t>(x);
    const double f = x - static_cast<double>(i);
    return values_[i] + f * (values_[i + 1] - values_[i]);
}

double SampledPhase::frequency_offset(double t) const {
    const double x = (t - t0_) / step_;
    const auto last = values_.size() - 1;
    std::size_t i = x <= 0.0 ? 0 : std::min(static_cast<std::size_t>(x), last - 1);
    return (values_[i + 1] - values_[i]) / step_;
}

SampledPhase chirp_phase(const GateWindow& gate, const DriveWaveform& waveform,
                         const EmitterParams& params, double step) {
    gate.validate(waveform.period());
    if (!finite_positive(step)) throw ValidationError("chirp: step must be > 0");
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(gate.duration() / step)));
    const double h = gate.duration() / static_cast<double>(n);
    std::vector<double> values(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = gate.t_on + h * static_cast<double>(i);
        values[i] = detuning_integral(waveform, params, gate.t_on, t) / kHbarMeVps;
    }
    std::vector<double> kinks;
    for (std::size_t i = 1; i < waveform.segments().size(); ++i) {
        const double edge = waveform.segment_start(i);
        if (edge > gate.t_on && edge < gate.t_off) kinks.push_back(edge);
    }
    return SampledPhase(gate.t_on, h, std::move(values), std::move(kinks));
}

PhotonPacket::PhotonPacket(Envelope envelope, double center_time,
                           std::optional<SampledPhase> chirp, Polarization polarization,
                           double carrier_detuning)
    : envelope_(std::move(envelope)),
      center_time_(center_time),
      chirp_(std::move(chirp)),
      polarization_(polarization),
      carrier_detuning_(carrier_detuning) {
    if (!std::isfinite(center_time_) || !std::isfinite(carrier_detuning_))
        throw ValidationError("packet: center_time and detuning must be finite");
    const double d = decay();
    if (!finite_positive(d)) throw ValidationError("packet: envelope decay must be > 0");
    if (const auto* g = std::get_if<GatedExponentialEnvelope>(&envelope_)) {
        g->gate.validate();
        norm_ = 1.0 / (d * -std::expm1(-g->gate.duration() / d));
    } else {
        norm_ = 1.0 / d;
    }
}

double PhotonPacket::decay() const {
    return std::visit([](const auto& e) { return e.decay; }, envelope_);
}

double PhotonPacket::support_begin() const {
    if (const auto* g = std::get_if<GatedExponentialEnvelope>(&envelope_))
        return center_time_ + g->gate.t_on;
    return center_time_;
}

double PhotonPacket::support_end() const {
    if (const auto* g = std::get_if<GatedExponentialEnvelope>(&envelope_))
        return center_time_ + g->gate.t_off;
    return std::numeric_limits<double>::infinity();
}

double PhotonPacket::intensity(double t) const {
    const double start = support_begin();
    if (t < start || t > support_end()) return 0.0;
    return norm_ * std::exp(-(t - start) / decay());
}

double PhotonPacket::phase(double t) const {
    double phi = carrier_detuning_ * t;
    if (chirp_) phi += (*chirp_)(t - center_time_);
    return phi;
}

std::vector<double> PhotonPacket::phase_kinks() const {
    std::vector<double> out;
    if (!chirp_) return out;
    for (double k : chirp_->kinks()) out.push_back(k + center_time_);
    return out;
}

double PhotonPacket::sample_time(double u) const {
    const double d = decay();
    if (const auto* g = std::get_if<GatedExponentialEnvelope>(&envelope_)) {
        const double mass = -std::expm1(-g->gate.duration() / d);
        const double t = -d * std::log1p(-u * mass);
        return support_begin() + std::min(t, g->gate.duration());
    }
    return support_begin() - d * std::log1p(-u);
}

PhotonPacket PhotonPacket::shifted(double dt) const {
    PhotonPacket copy = *this;
    copy.center_time_ += dt;
    return copy;
}

PhotonPacket make_gated_packet(const EmitterParams& params, const GateWindow& gate,
                               const DriveWaveform* chirp_source, double center_time) {
    std::optional<SampledPhase> chirp;
    if (chirp_source) chirp = chirp_phase(gate, *chirp_source, params);
    return PhotonPacket(GatedExponentialEnvelope{params.t1_radiative, gate}, center_time,
                        std::move(chirp));
}

}  // namespace hom
