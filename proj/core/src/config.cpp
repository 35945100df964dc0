#include "hom/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hom/analysis.hpp"
#include "hom/errors.hpp"

namespace hom {

namespace {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

void check_keys(const json& obj, const std::string& section, std::set<std::string> allowed) {
    if (!obj.is_object()) throw ValidationError("config: '" + section + "' must be an object");
    for (const auto& [key, _] : obj.items()) {
        if (key == "comment") continue;
        if (!allowed.count(key))
            throw ValidationError("config: unknown key '" + key + "' in '" + section + "'");
    }
}

template <class T>
void read(const json& obj, const char* key, T& field) {
    if (auto it = obj.find(key); it != obj.end()) field = it->get<T>();
}

Polarization parse_polarization(const std::string& s) {
    if (s == "H") return Polarization::H;
    if (s == "V") return Polarization::V;
    throw ValidationError("config: polarization must be \"H\" or \"V\"");
}

JitterInterpretation parse_interpretation(const std::string& s) {
    if (s == "std_dev") return JitterInterpretation::StdDev;
    if (s == "fwhm") return JitterInterpretation::Fwhm;
    if (s == "one_over_e_half_width") return JitterInterpretation::OneOverEHalfWidth;
    throw ValidationError("config: jitter interpretation must be std_dev, fwhm or one_over_e_half_width");
}

const char* name(JitterInterpretation i) {
    switch (i) {
        case JitterInterpretation::StdDev: return "std_dev";
        case JitterInterpretation::Fwhm: return "fwhm";
        case JitterInterpretation::OneOverEHalfWidth: return "one_over_e_half_width";
    }
    return "";
}

PolarizationMode parse_mode(const std::string& s) {
    if (s == "parallel") return PolarizationMode::Parallel;
    if (s == "orthogonal") return PolarizationMode::Orthogonal;
    throw ValidationError("config: interferometer mode must be parallel or orthogonal");
}

void parse_emitter(const json& j, EmitterParams& e) {
    check_keys(j, "emitter", {"t1_radiative", "dephasing_rate", "coherence_time", "center_energy",
                              "stark_coefficient", "reference_voltage"});
    read(j, "t1_radiative", e.t1_radiative);
    read(j, "center_energy", e.center_energy);
    read(j, "stark_coefficient", e.stark_coefficient);
    read(j, "reference_voltage", e.reference_voltage);
    if (j.contains("dephasing_rate") && j.contains("coherence_time"))
        throw ValidationError("config: give either emitter.dephasing_rate or coherence_time");
    read(j, "dephasing_rate", e.dephasing_rate);
    if (j.contains("coherence_time"))
        e.dephasing_rate =
            dephasing_rate_for_coherence_time(e.t1_radiative, j["coherence_time"].get<double>());
}

DriveWaveform parse_waveform(const json& j) {
    check_keys(j, "waveform", {"period", "segments"});
    std::vector<Segment> segments;
    for (const auto& s : j.at("segments")) {
        check_keys(s, "waveform.segments[]", {"voltage", "duration"});
        segments.push_back({s.at("voltage").get<double>(), s.at("duration").get<double>()});
    }
    return build_waveform(std::move(segments), j.at("period").get<double>());
}

}  // namespace

DriveWaveform reference_waveform() {
    return build_waveform({{1.45, 1380.0}, {2.06, 300.0}, {0.84, 300.0}}, 1980.0);
}

void RunConfig::validate() const {
    emitter.validate();
    filter.validate();
    jitter.validate();
    source().validate();
    interferometer.validate();
    detector.validate(waveform.period());
    if (cycles < 1) throw ValidationError("config: simulation.cycles must be >= 1");
    if (workers < 1) throw ValidationError("config: simulation.workers must be >= 1");
    if (!(dip.delta_step > 0.0) || dip.delta_max < dip.delta_min)
        throw ValidationError("config: dip scan needs delta_min <= delta_max and delta_step > 0");
}

GateWindow RunConfig::gate() const { return collection_gate(waveform, emitter, filter); }

SourceSim RunConfig::source() const {
    return SourceSim{emitter, waveform, gate(), jitter, emission_probability, background_mean,
                     chirp_on};
}

DipSetup RunConfig::dip_setup() const {
    return DipSetup{emitter, gate(), jitter, chirp_on, waveform, interferometer.mode};
}

double RunConfig::analysis_window() const {
    return window_half_width > 0.0 ? window_half_width : default_window(waveform.period());
}

RunConfig parse_run_config(const std::string& text) {
    RunConfig c;
    try {
        const json j = json::parse(text);
        check_keys(j, "config", {"emitter", "waveform", "filter", "jitter", "source",
                                 "interferometer", "detector", "simulation", "analysis", "dip",
                                 "output"});
        if (j.contains("emitter")) parse_emitter(j["emitter"], c.emitter);
        if (j.contains("waveform")) c.waveform = parse_waveform(j["waveform"]);
        if (j.contains("filter")) {
            const auto& f = j["filter"];
            check_keys(f, "filter", {"center_energy", "full_width", "polarization"});
            read(f, "center_energy", c.filter.center_energy);
            read(f, "full_width", c.filter.full_width);
            if (f.contains("polarization"))
                c.filter.polarization = parse_polarization(f["polarization"].get<std::string>());
        }
        if (j.contains("jitter")) {
            const auto& f = j["jitter"];
            check_keys(f, "jitter", {"sigma", "interpretation"});
            read(f, "sigma", c.jitter.sigma);
            if (f.contains("interpretation"))
                c.jitter.interpretation = parse_interpretation(f["interpretation"].get<std::string>());
        }
        if (j.contains("source")) {
            const auto& f = j["source"];
            check_keys(f, "source", {"emission_probability", "background_mean", "chirp_on"});
            read(f, "emission_probability", c.emission_probability);
            read(f, "background_mean", c.background_mean);
            read(f, "chirp_on", c.chirp_on);
        }
        if (j.contains("interferometer")) {
            const auto& f = j["interferometer"];
            check_keys(f, "interferometer", {"delay", "split_a", "split_b", "mode"});
            read(f, "delay", c.interferometer.delay);
            read(f, "split_a", c.interferometer.split_a);
            read(f, "split_b", c.interferometer.split_b);
            if (f.contains("mode")) c.interferometer.mode = parse_mode(f["mode"].get<std::string>());
        }
        if (j.contains("detector")) {
            const auto& f = j["detector"];
            check_keys(f, "detector", {"efficiency", "dark_rate", "timing_sigma", "bin_width", "span"});
            read(f, "efficiency", c.detector.efficiency);
            read(f, "dark_rate", c.detector.dark_rate);
            read(f, "timing_sigma", c.detector.timing_sigma);
            read(f, "bin_width", c.detector.bin_width);
            read(f, "span", c.detector.span);
        }
        if (j.contains("simulation")) {
            const auto& f = j["simulation"];
            check_keys(f, "simulation", {"cycles", "seed", "workers"});
            read(f, "cycles", c.cycles);
            read(f, "seed", c.seed);
            read(f, "workers", c.workers);
        }
        if (j.contains("analysis")) {
            const auto& f = j["analysis"];
            check_keys(f, "analysis", {"window_half_width"});
            read(f, "window_half_width", c.window_half_width);
        }
        if (j.contains("dip")) {
            const auto& f = j["dip"];
            check_keys(f, "dip", {"delta_min", "delta_max", "delta_step"});
            read(f, "delta_min", c.dip.delta_min);
            read(f, "delta_max", c.dip.delta_max);
            read(f, "delta_step", c.dip.delta_step);
        }
        if (j.contains("output")) {
            const auto& f = j["output"];
            check_keys(f, "output", {"dir"});
            read(f, "dir", c.output_dir);
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_run_config(text.str());
}

std::string to_json(const RunConfig& c) {
    ordered j;
    j["emitter"] = {{"t1_radiative", c.emitter.t1_radiative},
                    {"dephasing_rate", c.emitter.dephasing_rate},
                    {"center_energy", c.emitter.center_energy},
                    {"stark_coefficient", c.emitter.stark_coefficient},
                    {"reference_voltage", c.emitter.reference_voltage}};
    ordered segments = ordered::array();
    for (const auto& s : c.waveform.segments())
        segments.push_back({{"voltage", s.voltage}, {"duration", s.duration}});
    j["waveform"] = {{"period", c.waveform.period()}, {"segments", segments}};
    j["filter"] = {{"center_energy", c.filter.center_energy},
                   {"full_width", c.filter.full_width},
                   {"polarization", c.filter.polarization == Polarization::H ? "H" : "V"}};
    j["jitter"] = {{"sigma", c.jitter.sigma}, {"interpretation", name(c.jitter.interpretation)}};
    j["source"] = {{"emission_probability", c.emission_probability},
                   {"background_mean", c.background_mean},
                   {"chirp_on", c.chirp_on}};
    j["interferometer"] = {
        {"delay", c.interferometer.delay},
        {"split_a", c.interferometer.split_a},
        {"split_b", c.interferometer.split_b},
        {"mode", c.interferometer.mode == PolarizationMode::Parallel ? "parallel" : "orthogonal"}};
    j["detector"] = {{"efficiency", c.detector.efficiency},
                     {"dark_rate", c.detector.dark_rate},
                     {"timing_sigma", c.detector.timing_sigma},
                     {"bin_width", c.detector.bin_width},
                     {"span", c.detector.span}};
    j["simulation"] = {{"cycles", c.cycles}, {"seed", c.seed}};
    j["analysis"] = {{"window_half_width", c.window_half_width}};
    j["dip"] = {{"delta_min", c.dip.delta_min},
                {"delta_max", c.dip.delta_max},
                {"delta_step", c.dip.delta_step}};
    return j.dump(2) + "\n";
}

std::string config_hash(const RunConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : to_json(config)) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace hom
