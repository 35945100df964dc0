#include "hom/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "hom/errors.hpp"

namespace hom {

namespace {

// Stream tags; each (seed, cycle, tag) triple is an independent stream.
constexpr std::uint64_t kEmitTag = 1;
constexpr std::uint64_t kDetectTag = 2;
constexpr std::uint64_t kDarkTag = 3;

bool probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

double normal(RandomStream& rng, double sd) {
    if (sd == 0.0) return 0.0;
    std::normal_distribution<double> dist(0.0, sd);
    return dist(rng);
}

struct Photon {
    double time = 0.0;    // arrival at the final coupler (or splitter)
    double origin = 0.0;  // packet center at the final coupler
    bool long_arm = false;
    bool signal = false;
};

struct CycleEmission {
    bool has_signal = false;
    Photon signal;
    std::vector<Photon> background;
};

struct Context {
    const SourceSim& source;
    const InterferometerSim* mz;
    const DetectorSim& det;
    std::uint64_t total_cycles;
    std::uint64_t seed;
    PhotonPacket packet;
    double period;
    double jitter_sd;
    double gamma_star;
    std::uint64_t pair_lag;   // cycles between paired long- and short-arm photons
    double pair_reach;        // max |origin difference| for amplitude-level treatment

    CycleEmission emit(std::uint64_t k) const {
        RandomStream rng(seed, k, kEmitTag);
        CycleEmission out;
        const double cycle_start = period * static_cast<double>(k);
        const double delay = mz ? mz->delay : 0.0;
        const double split_a = mz ? mz->split_a : 0.0;
        if (rng.uniform() < source.emission_probability) {
            out.has_signal = true;
            const double jitter = normal(rng, jitter_sd);
            const double local = packet.sample_time(rng.uniform());
            const bool long_arm = rng.uniform() < split_a;
            const double shift = long_arm ? delay : 0.0;
            out.signal = {cycle_start + local + jitter + shift, cycle_start + jitter + shift,
                          long_arm, true};
        }
        if (source.background_mean > 0.0) {
            std::poisson_distribution<int> count(source.background_mean);
            const int n = count(rng);
            for (int i = 0; i < n; ++i) {
                const double t = cycle_start + period * rng.uniform();
                const bool long_arm = rng.uniform() < split_a;
                out.background.push_back({t + (long_arm ? delay : 0.0), 0.0, long_arm, false});
            }
        }
        return out;
    }

    bool paired(const CycleEmission& early, const CycleEmission& late) const {
        return mz && mz->mode == PolarizationMode::Parallel && early.has_signal &&
               late.has_signal && early.signal.long_arm && !late.signal.long_arm &&
               std::abs(early.signal.origin - late.signal.origin) < pair_reach;
    }

    // Output port for a photon routed without interference.
    int classical_port(const Photon& p, RandomStream& rng) const {
        if (!mz) return rng.uniform() < 0.5 ? 0 : 1;
        const double r = mz->split_b;
        // Long arm enters port 1 (transmits to D1), short arm enters port 2.
        const double to_d1 = p.long_arm ? 1.0 - r : r;
        return rng.uniform() < to_d1 ? 0 : 1;
    }

    void detect(double t, int port, RandomStream& rng, std::vector<Detection>& out,
                EventStats& stats) const {
        if (rng.uniform() >= det.efficiency) return;
        out.push_back({t + normal(rng, det.timing_sigma), port});
        ++stats.photon_detections;
    }

    // Two temporally overlapping photons at the final coupler. Detection
    // times follow the classical marginal (which the interference term leaves
    // unchanged); the output pattern is then drawn from the realized
    // two-photon amplitudes given those times and the sampled phases.
    void resolve_pair(const Photon& p1, const Photon& p2, RandomStream& rng,
                      std::vector<Detection>& out, EventStats& stats) const {
        const double x = p1.time;
        const double y = p2.time;
        const double a1x = packet.intensity(x - p1.origin), a1y = packet.intensity(y - p1.origin);
        const double a2x = packet.intensity(x - p2.origin), a2y = packet.intensity(y - p2.origin);
        const double p = a1x * a2y;
        const double q = a1y * a2x;
        double r = 0.0;
        const double lag = y - x;
        const double dtheta1 = sample_phase_increment(gamma_star, lag, rng);
        const double dtheta2 = sample_phase_increment(gamma_star, lag, rng);
        if (q > 0.0) {
            const double phi1 = packet.phase(x - p1.origin) - packet.phase(y - p1.origin);
            const double phi2 = packet.phase(x - p2.origin) - packet.phase(y - p2.origin);
            r = std::sqrt(p * q) * std::cos(phi1 - phi2 - dtheta1 + dtheta2);
        }
        const double refl = mz->split_b;
        const double trans = 1.0 - refl;
        const double w_xy = trans * trans * p + refl * refl * q - 2.0 * trans * refl * r;
        const double w_yx = trans * trans * q + refl * refl * p - 2.0 * trans * refl * r;
        const double w_same = trans * refl * (p + q + 2.0 * r);
        const double u = rng.uniform() * (p + q);
        int port_x = 0, port_y = 0;
        if (u < w_xy) {
            port_x = 0, port_y = 1;
        } else if (u < w_xy + w_yx) {
            port_x = 1, port_y = 0;
        } else if (u < w_xy + w_yx + w_same) {
            port_x = 0, port_y = 0;
        } else {
            port_x = 1, port_y = 1;
        }
        ++stats.pairs_resolved;
        detect(x, port_x, rng, out, stats);
        detect(y, port_y, rng, out, stats);
    }

    void run(std::uint64_t first, std::uint64_t last, std::vector<Detection>& out,
             EventStats& stats) const {
        if (first >= last) return;
        const std::uint64_t lag = pair_lag;
        const std::uint64_t lo = first >= lag ? first - lag : 0;
        const std::uint64_t hi = std::min(total_cycles, last + lag);
        std::vector<CycleEmission> cache;
        cache.reserve(hi - lo);
        for (std::uint64_t k = lo; k < hi; ++k) cache.push_back(emit(k));
        auto at = [&](std::uint64_t k) -> const CycleEmission& { return cache[k - lo]; };

        for (std::uint64_t k = first; k < last; ++k) {
            RandomStream rng(seed, k, kDetectTag);
            const CycleEmission& here = at(k);
            if (here.has_signal) {
                ++stats.photons;
                const Photon& s = here.signal;
                if (!s.long_arm) {
                    if (k >= lag && paired(at(k - lag), here)) {
                        resolve_pair(at(k - lag).signal, s, rng, out, stats);
                    } else {
                        detect(s.time, classical_port(s, rng), rng, out, stats);
                    }
                } else if (!(k + lag < total_cycles && paired(here, at(k + lag)))) {
                    detect(s.time, classical_port(s, rng), rng, out, stats);
                }
            }
            for (const Photon& b : here.background) {
                ++stats.photons;
                detect(b.time, classical_port(b, rng), rng, out, stats);
            }
            if (det.dark_rate > 0.0) {
                RandomStream dark(seed, k, kDarkTag);
                std::poisson_distribution<int> count(det.dark_rate * period);
                const double start = period * static_cast<double>(k);
                for (int port = 0; port < 2; ++port) {
                    const int n = count(dark);
                    for (int i = 0; i < n; ++i) {
                        out.push_back({start + period * dark.uniform(), port});
                        ++stats.dark_counts;
                    }
                }
            }
        }
    }
};

Context make_context(const SourceSim& source, const InterferometerSim* mz,
                     const DetectorSim& det, std::uint64_t total, std::uint64_t seed) {
    source.validate();
    if (mz) mz->validate();
    const double period = source.waveform.period();
    det.validate(period);
    const DriveWaveform* chirp = source.chirp_on ? &source.waveform : nullptr;
    PhotonPacket packet = make_gated_packet(source.emitter, source.gate, chirp);
    std::uint64_t lag = 0;
    if (mz) lag = static_cast<std::uint64_t>(std::llround(mz->delay / period));
    const double reach = source.gate.duration() + 10.0 * source.emitter.coherence_time();
    return Context{source,
                   mz,
                   det,
                   total,
                   seed,
                   std::move(packet),
                   period,
                   source.jitter.standard_deviation(),
                   source.emitter.dephasing_rate,
                   lag,
                   reach};
}

template <class Fn>
void parallel_for(int workers, std::uint64_t n, Fn&& fn) {
    const auto w = static_cast<std::uint64_t>(std::max(1, workers));
    if (w == 1 || n < 2) {
        fn(0, std::uint64_t{0}, n);
        return;
    }
    std::vector<std::thread> threads;
    for (std::uint64_t i = 0; i < w; ++i) {
        const std::uint64_t a = n * i / w;
        const std::uint64_t b = n * (i + 1) / w;
        threads.emplace_back([&, i, a, b] { fn(static_cast<int>(i), a, b); });
    }
    for (auto& t : threads) t.join();
}

CorrelationHistogram simulate(const SourceSim& source, const InterferometerSim* mz,
                              const DetectorSim& det, std::uint64_t cycles, std::uint64_t seed,
                              int workers) {
    if (cycles < 1) throw ValidationError("simulation: cycles must be >= 1");
    const Context ctx = make_context(source, mz, det, cycles, seed);
    const auto w = static_cast<std::size_t>(std::max(1, workers));
    std::vector<std::vector<Detection>> parts(w);
    std::vector<EventStats> stats(w);
    parallel_for(workers, cycles, [&](int i, std::uint64_t a, std::uint64_t b) {
        ctx.run(a, b, parts[static_cast<std::size_t>(i)], stats[static_cast<std::size_t>(i)]);
    });
    std::vector<Detection> events;
    for (auto& p : parts) events.insert(events.end(), p.begin(), p.end());
    auto hist = correlate(events, det.bin_width, det.effective_span(ctx.period), workers);
    hist.cycles_simulated = cycles;
    hist.seed = seed;
    return hist;
}

}  // namespace

void SourceSim::validate() const {
    emitter.validate();
    gate.validate(waveform.period());
    jitter.validate();
    if (!probability(emission_probability))
        throw ValidationError("source: emission_probability must be in [0, 1]");
    if (!std::isfinite(background_mean) || background_mean < 0.0)
        throw ValidationError("source: background_mean must be >= 0");
}

void InterferometerSim::validate() const {
    if (!std::isfinite(delay) || delay < 0.0)
        throw ValidationError("interferometer: delay must be >= 0");
    if (!(split_a > 0.0 && split_a < 1.0) || !(split_b > 0.0 && split_b < 1.0))
        throw ValidationError("interferometer: splitting ratios must be in (0, 1)");
}

void DetectorSim::validate(double period) const {
    if (!probability(efficiency)) throw ValidationError("detector: efficiency must be in [0, 1]");
    if (!std::isfinite(dark_rate) || dark_rate < 0.0)
        throw ValidationError("detector: dark_rate must be >= 0");
    if (!std::isfinite(timing_sigma) || timing_sigma < 0.0)
        throw ValidationError("detector: timing_sigma must be >= 0");
    if (!(bin_width > 0.0) || !std::isfinite(bin_width))
        throw ValidationError("detector: bin_width must be > 0");
    if (!std::isfinite(span) || span < 0.0) throw ValidationError("detector: span must be >= 0");
    if (effective_span(period) < 6.0 * period)
        throw ValidationError("detector: histogram span " + std::to_string(span) +
                              " ps does not cover +/-6 source periods");
}

double DetectorSim::effective_span(double period) const {
    return span > 0.0 ? span : 7.0 * period;
}

double CorrelationHistogram::half_range() const {
    return std::min(-origin, origin + bin_width * static_cast<double>(counts.size()));
}

std::int64_t CorrelationHistogram::total() const {
    std::int64_t s = 0;
    for (auto c : counts) s += c;
    return s;
}

CorrelationHistogram make_histogram(double bin_width, double half_range) {
    if (!(bin_width > 0.0) || !(half_range > 0.0))
        throw ValidationError("histogram: bin_width and range must be > 0");
    const auto half = static_cast<std::size_t>(std::ceil(half_range / bin_width - 0.5));
    CorrelationHistogram h;
    h.bin_width = bin_width;
    h.counts.assign(2 * half + 1, 0);
    h.origin = -(static_cast<double>(half) + 0.5) * bin_width;
    return h;
}

CorrelationHistogram merge(const CorrelationHistogram& a, const CorrelationHistogram& b) {
    if (a.bin_width != b.bin_width || a.origin != b.origin || a.counts.size() != b.counts.size())
        throw ValidationError("histogram merge: binning differs");
    CorrelationHistogram out = a;
    for (std::size_t i = 0; i < out.counts.size(); ++i) out.counts[i] += b.counts[i];
    out.cycles_simulated += b.cycles_simulated;
    return out;
}

std::vector<double> sample_phase_trajectory(double gamma_star, const UniformGrid& grid,
                                            RandomStream& rng) {
    if (!(gamma_star >= 0.0)) throw ValidationError("phase trajectory: gamma* must be >= 0");
    if (!(grid.step > 0.0)) throw ValidationError("phase trajectory: grid must be increasing");
    std::vector<double> theta(grid.size, 0.0);
    for (std::size_t i = 1; i < grid.size; ++i)
        theta[i] = theta[i - 1] + sample_phase_increment(gamma_star, grid.step, rng);
    return theta;
}

double sample_phase_increment(double gamma_star, double lag, RandomStream& rng) {
    return normal(rng, std::sqrt(2.0 * gamma_star * std::abs(lag)));
}

std::vector<Detection> simulate_detections(const SourceSim& source, const InterferometerSim* mz,
                                           const DetectorSim& det, std::uint64_t first,
                                           std::uint64_t last, std::uint64_t total_cycles,
                                           std::uint64_t seed, EventStats* stats) {
    const Context ctx = make_context(source, mz, det, total_cycles, seed);
    std::vector<Detection> out;
    EventStats local;
    ctx.run(first, std::min(last, total_cycles), out, local);
    if (stats) *stats = local;
    return out;
}

CorrelationHistogram correlate(std::span<const Detection> events, double bin_width,
                               double half_range, int workers) {
    CorrelationHistogram hist = make_histogram(bin_width, half_range);
    std::vector<double> d1, d2;
    for (const auto& e : events) (e.detector == 0 ? d1 : d2).push_back(e.time);
    std::sort(d1.begin(), d1.end());
    std::sort(d2.begin(), d2.end());
    const double lo_edge = hist.origin;
    const double hi_edge = hist.origin + bin_width * static_cast<double>(hist.counts.size());
    const auto w = static_cast<std::size_t>(std::max(1, workers));
    std::vector<std::vector<std::int64_t>> partial(w, std::vector<std::int64_t>(hist.counts.size()));
    parallel_for(workers, d1.size(), [&](int wi, std::uint64_t a, std::uint64_t b) {
        auto& counts = partial[static_cast<std::size_t>(wi)];
        auto first = d2.begin();
        for (std::uint64_t i = a; i < b; ++i) {
            const double t1 = d1[i];
            // D1 - D2 in [lo_edge, hi_edge)  <=>  D2 in (t1 - hi_edge, t1 - lo_edge]
            first = std::upper_bound(first, d2.end(), t1 - hi_edge);
            for (auto it = first; it != d2.end() && *it <= t1 - lo_edge; ++it) {
                const double diff = t1 - *it;
                const auto bin = static_cast<std::int64_t>(std::floor((diff - lo_edge) / bin_width));
                if (bin >= 0 && bin < static_cast<std::int64_t>(counts.size()))
                    ++counts[static_cast<std::size_t>(bin)];
            }
        }
    });
    for (const auto& p : partial)
        for (std::size_t i = 0; i < p.size(); ++i) hist.counts[i] += p[i];
    return hist;
}

CorrelationHistogram simulate_hom(const SourceSim& source, const InterferometerSim& mz,
                                  const DetectorSim& det, std::uint64_t cycles,
                                  std::uint64_t seed, int workers) {
    return simulate(source, &mz, det, cycles, seed, workers);
}

CorrelationHistogram simulate_hbt(const SourceSim& source, const DetectorSim& det,
                                  std::uint64_t cycles, std::uint64_t seed, int workers) {
    return simulate(source, nullptr, det, cycles, seed, workers);
}

double peak_capture_fraction(const SourceSim& source, const DetectorSim& det,
                             double window_half_width) {
    source.validate();
    det.validate(source.waveform.period());
    if (!(window_half_width > 0.0)) throw ValidationError("capture: window half-width must be > 0");
    const PhotonPacket packet = make_gated_packet(source.emitter, source.gate);
    const double sd = source.jitter.standard_deviation();
    const double spread = std::sqrt(2.0 * (sd * sd + det.timing_sigma * det.timing_sigma));
    const double w = window_half_width;
    const double lo = packet.support_begin(), hi = packet.support_end();
    const QuadratureSpec quad{1e-9, 1e-12, 2000};
    auto inside = [&](double d) {
        if (spread == 0.0) return std::abs(d) <= w ? 1.0 : 0.0;
        const double k = 1.0 / (std::numbers::sqrt2 * spread);
        return 0.5 * (std::erf((w - d) * k) + std::erf((w + d) * k));
    };
    auto outer = [&](double x) {
        const double breaks[] = {x - w, x + w};
        auto inner = [&](double y) { return packet.intensity(y) * inside(x - y); };
        return packet.intensity(x) * integrate(inner, lo, hi, quad, breaks).value;
    };
    return std::clamp(integrate(outer, lo, hi, quad).value, 0.0, 1.0);
}

double background_for_g2(double target_g2, double window_fraction, double emission_probability,
                         double capture) {
    if (!(target_g2 >= 0.0 && target_g2 < 1.0))
        throw ValidationError("background_for_g2: target must be in [0, 1)");
    if (!(window_fraction > 0.0)) throw ValidationError("background_for_g2: window fraction > 0");
    if (!(emission_probability > 0.0 && emission_probability <= 1.0))
        throw ValidationError("background_for_g2: emission probability in (0, 1]");
    if (!(capture > 0.0 && capture <= 1.0))
        throw ValidationError("background_for_g2: capture must be in (0, 1]");
    // g2 = w (2 p b + b^2) / (c p^2 + w (2 p b + b^2))
    const double p = emission_probability;
    const double y = target_g2 * capture * p * p / (window_fraction * (1.0 - target_g2));
    return -p + std::sqrt(p * p + y);
}

void write_csv(std::ostream& os, const CorrelationHistogram& hist) {
    os << "bin_start_ps,counts\n";
    std::ostringstream row;
    row.precision(12);
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        row.str({});
        row << hist.bin_start(i) << ',' << hist.counts[i] << '\n';
        os << row.str();
    }
}

CorrelationHistogram read_histogram_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("bin_start_ps", 0) != 0)
        throw ValidationError("histogram csv: expected header bin_start_ps,counts");
    std::vector<double> starts;
    CorrelationHistogram h;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        double s = 0.0;
        std::int64_t c = 0;
        if (!(fields >> s >> c)) throw ValidationError("histogram csv: malformed row");
        starts.push_back(s);
        h.counts.push_back(c);
    }
    if (starts.size() < 2) throw ValidationError("histogram csv: need at least two bins");
    h.origin = starts.front();
    h.bin_width = starts[1] - starts[0];
    return h;
}

std::string sidecar_json(const CorrelationHistogram& hist, const std::string& config_hash) {
    nlohmann::ordered_json j;
    j["kind"] = "correlation_histogram";
    j["seed"] = hist.seed;
    j["cycles"] = hist.cycles_simulated;
    j["bin_width_ps"] = hist.bin_width;
    j["origin_ps"] = hist.origin;
    j["bins"] = hist.counts.size();
    j["total_counts"] = hist.total();
    j["config_hash"] = config_hash;
    return j.dump(2) + "\n";
}

}  // namespace hom
