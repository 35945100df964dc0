#include "hom/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "hom/errors.hpp"

namespace hom {

namespace {

// Untruncated exponential supports are cut where the remaining intensity
// mass drops below 1% of the absolute tolerance (never fewer than 16 decays).
double truncated_end(const PhotonPacket& p, const QuadratureSpec& quad) {
    const double end = p.support_end();
    if (std::isfinite(end)) return end;
    const double decays = std::max(16.0, std::log(100.0 / quad.absolute_tolerance));
    return p.support_begin() + decays * p.decay();
}

bool interferes(const PairConfig& cfg) {
    return cfg.mode == PolarizationMode::Parallel &&
           cfg.packet_a.polarization() == cfg.packet_b.polarization();
}

bool has_phase(const PhotonPacket& a, const PhotonPacket& b) {
    return a.chirp().has_value() || b.chirp().has_value() ||
           a.carrier_detuning() != b.carrier_detuning();
}

void check_density(double classical, double interference) {
    // classical >= interference by AM-GM; allow round-off only.
    if (classical - interference < -1e-9 * (classical + 1e-300))
        throw NumericalError("joint density went negative", classical - interference);
}

QuadratureSpec outer_spec(const QuadratureSpec& quad) {
    QuadratureSpec s = quad;
    s.relative_tolerance *= 10.0;
    s.absolute_tolerance *= 10.0;
    return s;
}

PhotonPacket dip_packet(const DipSetup& setup) {
    const DriveWaveform* source =
        setup.chirp_on && setup.waveform ? &*setup.waveform : nullptr;
    return make_gated_packet(setup.emitter, setup.gate, source);
}

}  // namespace

void PairConfig::validate() const {
    if (!std::isfinite(relative_offset)) throw ValidationError("pair: offset must be finite");
    if (!std::isfinite(dephasing_rate) || dephasing_rate < 0.0)
        throw ValidationError("pair: dephasing_rate must be >= 0");
}

double joint_density(const PairConfig& cfg, double t, double tau) {
    const PhotonPacket& a = cfg.packet_a;
    const PhotonPacket b = cfg.packet_b.shifted(cfg.relative_offset);
    const double t2 = t + tau;
    const double a1 = a.intensity(t), a1p = a.intensity(t2);
    const double b1 = b.intensity(t), b1p = b.intensity(t2);
    const double classical = a1 * b1p + b1 * a1p;
    double interference = 0.0;
    if (interferes(cfg)) {
        const double dphi = (a.phase(t) - b.phase(t)) - (a.phase(t2) - b.phase(t2));
        interference = 2.0 * std::sqrt(a1 * b1 * a1p * b1p) * std::cos(dphi) *
                       std::exp(-2.0 * cfg.dephasing_rate * std::abs(tau));
    }
    check_density(classical, interference);
    return std::max(0.0, 0.25 * (classical - interference));
}

double coincidence_probability(const PairConfig& cfg, const QuadratureSpec& quad) {
    cfg.validate();
    quad.validate();
    const PhotonPacket& a = cfg.packet_a;
    const PhotonPacket b = cfg.packet_b.shifted(cfg.relative_offset);

    // The two classical terms of G factorize into products of norms.
    auto norm = [&](const PhotonPacket& p) {
        return integrate([&](double t) { return p.intensity(t); }, p.support_begin(),
                         truncated_end(p, quad), quad)
            .value;
    };
    const double na = norm(a);
    const double nb = norm(b);
    const double separable = 0.5 * na * nb;
    if (!interferes(cfg)) return separable;

    const double lo = std::max(a.support_begin(), b.support_begin());
    const double hi = std::min(truncated_end(a, quad), truncated_end(b, quad));
    if (!(hi > lo)) return separable;

    std::vector<double> kinks = a.phase_kinks();
    for (double k : b.phase_kinks()) kinks.push_back(k);
    const bool phased = has_phase(a, b);
    const double rate = 2.0 * cfg.dephasing_rate;
    // Lags beyond this carry a kernel weight below 1% of the absolute tolerance.
    const double memory = rate > 0.0 ? std::log(100.0 / quad.absolute_tolerance) / rate
                                     : std::numeric_limits<double>::infinity();

    // I = 2 * int_lo^hi dt s(t) int_lo^t dt' s(t') cos(psi(t) - psi(t')) exp(-rate (t - t'))
    auto outer = [&](double t) {
        const double at = a.intensity(t), bt = b.intensity(t);
        const double st = std::sqrt(at * bt);
        if (st == 0.0) return 0.0;
        const double psi_t = phased ? a.phase(t) - b.phase(t) : 0.0;
        auto inner = [&](double u) {
            const double au = a.intensity(u), bu = b.intensity(u);
            const double su = std::sqrt(au * bu);
            const double c = phased ? std::cos(psi_t - (a.phase(u) - b.phase(u))) : 1.0;
            const double term = 2.0 * st * su * c * std::exp(-rate * (t - u));
            check_density(at * bu + bt * au, term);
            return su * c * std::exp(-rate * (t - u));
        };
        return st * integrate(inner, std::max(lo, t - memory), t, quad, kinks).value;
    };
    const double interference = 2.0 * integrate(outer, lo, hi, quad, kinks).value;
    return separable - 0.5 * interference;
}

double pair_visibility(const PairConfig& cfg, const QuadratureSpec& quad) {
    PairConfig parallel = cfg;
    parallel.mode = PolarizationMode::Parallel;
    const double v = 1.0 - 2.0 * coincidence_probability(parallel, quad);
    const double slack = 10.0 * (quad.absolute_tolerance + quad.relative_tolerance);
    if (v < -slack || v > 1.0 + slack)
        throw NumericalError("pair visibility outside [0, 1]", v);
    return std::clamp(v, 0.0, 1.0);
}

void DipSetup::validate() const {
    emitter.validate();
    gate.validate();
    jitter.validate();
    if (chirp_on && !waveform) throw ValidationError("dip: chirp_on requires a waveform");
    if (waveform) gate.validate(waveform->period());
}

double mean_visibility(double delta, const DipSetup& setup, const QuadratureSpec& quad) {
    setup.validate();
    quad.validate();
    if (setup.mode == PolarizationMode::Orthogonal) return 0.0;
    const PhotonPacket packet = dip_packet(setup);
    PairConfig cfg{packet, packet, delta, setup.emitter.dephasing_rate,
                   PolarizationMode::Parallel};
    const double sd = std::numbers::sqrt2 * setup.jitter.standard_deviation();
    if (sd == 0.0) return pair_visibility(cfg, quad);

    // Visibility vanishes once the gated packets no longer overlap.
    const double reach = setup.gate.duration();
    const double lo = std::max(delta - 8.0 * sd, -reach);
    const double hi = std::min(delta + 8.0 * sd, reach);
    if (!(hi > lo)) return 0.0;
    const double norm = 1.0 / (sd * std::sqrt(2.0 * std::numbers::pi));
    auto weighted = [&](double x) {
        PairConfig c = cfg;
        c.relative_offset = x;
        const double z = (x - delta) / sd;
        return pair_visibility(c, quad) * norm * std::exp(-0.5 * z * z);
    };
    const double breaks[] = {0.0};
    const double v = integrate(weighted, lo, hi, outer_spec(quad), breaks).value;
    return std::clamp(v, 0.0, 1.0);
}

double dip_central_area(double delta, const DipSetup& setup, const QuadratureSpec& quad) {
    return 0.5 * (1.0 - mean_visibility(delta, setup, quad));
}

DipCurve dip_curve(std::span<const double> deltas, const DipSetup& setup,
                   const QuadratureSpec& quad) {
    setup.validate();
    DipCurve curve{{}, setup};
    curve.points.reserve(deltas.size());
    for (double d : deltas) curve.points.push_back({d, dip_central_area(d, setup, quad)});
    return curve;
}

std::vector<double> delta_grid(double min, double max, double step) {
    if (!(step > 0.0) || !(max >= min) || !std::isfinite(min) || !std::isfinite(max))
        throw ValidationError("delta grid: need min <= max and step > 0");
    const auto n = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9));
    std::vector<double> out;
    out.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) out.push_back(min + step * static_cast<double>(i));
    return out;
}

void write_csv(std::ostream& os, const DipCurve& curve) {
    os << "delta_ps,central_area\n";
    std::ostringstream row;
    row.precision(12);
    for (const auto& p : curve.points) {
        row.str({});
        row << p.delta << ',' << p.central_area << '\n';
        os << row.str();
    }
}

std::vector<DipPoint> read_dip_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ValidationError("dip csv: empty input");
    std::vector<DipPoint> out;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        DipPoint p{};
        if (!(fields >> p.delta >> p.central_area))
            throw ValidationError("dip csv: malformed row '" + line + "'");
        out.push_back(p);
    }
    return out;
}

double fixed_bias_visibility(double t1, double t2) {
    if (!(t1 > 0.0) || !(t2 > 0.0) || !std::isfinite(t1) || !std::isfinite(t2))
        throw DomainError("fixed_bias_visibility: T1 and T2 must be > 0");
    if (t2 > 2.0 * t1) throw DomainError("fixed_bias_visibility: T2 exceeds 2 T1");
    return t2 / (2.0 * t1);
}

double dephasing_time(double t1, double t2) {
    if (!(t1 > 0.0) || !(t2 > 0.0) || std::isnan(t1) || !std::isfinite(t2))
        throw DomainError("dephasing_time: T1 and T2 must be > 0");
    if (t2 > 2.0 * t1) throw DomainError("dephasing_time: T2 exceeds 2 T1");
    if (t2 == 2.0 * t1) return std::numeric_limits<double>::infinity();
    return 1.0 / (1.0 / t2 - 0.5 / t1);
}

double dephasing_rate_for_coherence_time(double t1, double t2) {
    const double t2_star = dephasing_time(t1, t2);
    return std::isinf(t2_star) ? 0.0 : 1.0 / t2_star;
}

bool entanglement_criterion(double visibility, double g2_zero) {
    if (!(visibility >= 0.0) || !(g2_zero >= 0.0))
        throw ValidationError("entanglement_criterion: arguments must be >= 0");
    return visibility > 2.0 * g2_zero;
}

}  // namespace hom
