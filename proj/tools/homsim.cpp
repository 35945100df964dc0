// homsim: command-line front end for the HOM source simulator.
//
// Exit codes: 0 success, 1 invalid input or usage, 2 numerical failure.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <hom/analysis.hpp>
#include <hom/config.hpp>
#include <hom/errors.hpp>
#include <hom/fit.hpp>

#ifndef HOM_VERSION
#define HOM_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using hom::RunConfig;
using ordered = nlohmann::ordered_json;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> cycles;
    std::optional<int> workers;
    std::string out_dir;
    bool orthogonal = false;
    std::optional<double> delta_min, delta_max, delta_step;
};

RunConfig resolve(const Common& c) {
    RunConfig rc = c.config.empty() ? RunConfig{} : hom::load_run_config(c.config);
    if (c.seed) rc.seed = *c.seed;
    if (c.cycles) rc.cycles = *c.cycles;
    if (c.workers) rc.workers = *c.workers;
    if (c.orthogonal) rc.interferometer.mode = hom::PolarizationMode::Orthogonal;
    if (c.delta_min) rc.dip.delta_min = *c.delta_min;
    if (c.delta_max) rc.dip.delta_max = *c.delta_max;
    if (c.delta_step) rc.dip.delta_step = *c.delta_step;
    if (!c.out_dir.empty()) {
        rc.output_dir = c.out_dir;
    } else if (rc.output_dir.empty()) {
        const char* env = std::getenv("HOMSIM_OUT_DIR");
        rc.output_dir = env && *env ? env : ".";
    }
    rc.validate();
    return rc;
}

class Outputs {
public:
    Outputs(std::string command, const RunConfig& rc) : command_(std::move(command)), rc_(rc) {
        fs::create_directories(rc.output_dir);
    }

    void write(const std::string& name, const std::string& body) {
        const fs::path path = fs::path(rc_.output_dir) / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw hom::ValidationError("cannot write '" + path.string() + "'");
        out << body;
        files_.push_back(name);
    }

    void finish(bool uses_seed) {
        ordered m;
        m["tool"] = "homsim";
        m["version"] = HOM_VERSION;
        m["command"] = command_;
        m["config_hash"] = hom::config_hash(rc_);
        if (uses_seed) {
            m["seed"] = rc_.seed;
            m["cycles"] = rc_.cycles;
        }
        m["outputs"] = files_;
        m["config"] = ordered::parse(hom::to_json(rc_));
        const fs::path path = fs::path(rc_.output_dir) / "manifest.json";
        std::ofstream(path, std::ios::binary) << m.dump(2) << "\n";
    }

private:
    std::string command_;
    const RunConfig& rc_;
    std::vector<std::string> files_;
};

template <class T>
std::string render(const T& value) {
    std::ostringstream os;
    hom::write_csv(os, value);
    return os.str();
}

std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

void print_areas(const hom::PeakAreaReport& r) {
    std::cout << "peak   area     error    raw\n";
    for (int n = -hom::kMaxPeak; n <= hom::kMaxPeak; ++n) {
        char line[96];
        std::snprintf(line, sizeof line, "%+3d   %.4f   %.4f   %.0f\n", n, r.area(n), r.error(n), r.raw(n));
        std::cout << line;
    }
}

int cmd_waveform(const Common& c) {
    const RunConfig rc = resolve(c);
    Outputs out("waveform", rc);
    const auto& w = rc.waveform;
    std::ostringstream csv;
    csv << "time_ps,voltage_v,energy_ev,in_band\n";
    csv.precision(10);
    const double step = 1.0;
    const auto n = static_cast<long>(std::floor(w.period() / step));
    for (long i = 0; i <= n; ++i) {
        const double t = std::min(step * static_cast<double>(i), w.period());
        const double v = w.voltage_at(t == w.period() ? t - 1e-9 : t);
        const double e = hom::stark_energy(v, rc.emitter);
        csv << t << ',' << v << ',' << e << ',' << (rc.filter.passes(e) ? 1 : 0) << '\n';
    }
    out.write("waveform.csv", csv.str());
    const auto gate = rc.gate();
    const auto phi = hom::chirp_phase(gate, w, rc.emitter);
    ordered g;
    g["kind"] = "collection_gate";
    g["t_on_ps"] = gate.t_on;
    g["t_off_ps"] = gate.t_off;
    g["duration_ps"] = gate.duration();
    g["energy_in_gate_ev"] = hom::stark_energy(w.voltage_at(gate.t_on), rc.emitter);
    g["chirp_phase_at_gate_end_rad"] = phi(gate.t_off);
    out.write("gate.json", g.dump(2) + "\n");
    out.finish(false);
    std::cout << "gate: [" << gate.t_on << ", " << gate.t_off << "] ps (" << gate.duration() << " ps)\n"
              << "chirp phase at gate end: " << fixed(phi(gate.t_off), 3) << " rad\n";
    return 0;
}

int cmd_hbt(const Common& c) {
    const RunConfig rc = resolve(c);
    Outputs out("hbt", rc);
    const auto h = hom::simulate_hbt(rc.source(), rc.detector, rc.cycles, rc.seed, rc.workers);
    const auto r = hom::peak_areas(h, rc.waveform.period(), rc.analysis_window());
    out.write("hbt_histogram.csv", render(h));
    out.write("hbt_histogram.json", hom::sidecar_json(h, hom::config_hash(rc)));
    out.write("hbt_peaks.json", hom::to_json(r));
    out.write("hbt_peaks.csv", render(r));
    out.finish(true);
    print_areas(r);
    std::cout << "g2(0) = " << fixed(hom::g2_zero(r)) << " +- " << fixed(r.error(0)) << "\n";
    return 0;
}

int cmd_hom(const Common& c) {
    const RunConfig rc = resolve(c);
    Outputs out("hom", rc);
    const auto h = hom::simulate_hom(rc.source(), rc.interferometer, rc.detector, rc.cycles, rc.seed,
                                     rc.workers);
    const auto r = hom::peak_areas(h, rc.waveform.period(), rc.analysis_window());
    out.write("hom_histogram.csv", render(h));
    out.write("hom_histogram.json", hom::sidecar_json(h, hom::config_hash(rc)));
    out.write("hom_peaks.json", hom::to_json(r));
    out.write("hom_peaks.csv", render(r));
    print_areas(r);
    const auto raw = hom::visibility_from_areas(r);
    std::cout << "raw visibility = " << fixed(raw.value) << " +- " << fixed(raw.error)
              << (raw.clamped ? " (clamped)" : "") << "\n";
    if (r.baseline_rate > 0.0) {
        const auto corrected = hom::correct_dark_counts(r);
        out.write("hom_peaks_corrected.json", hom::to_json(corrected));
        const auto v = hom::visibility_from_areas(corrected);
        std::cout << "baseline " << fixed(r.baseline_rate, 2) << " counts/bin; corrected visibility = "
                  << fixed(v.value) << " +- " << fixed(v.error) << (v.clamped ? " (clamped)" : "") << "\n";
    }
    out.finish(true);
    return 0;
}

int cmd_dip(const Common& c) {
    const RunConfig rc = resolve(c);
    Outputs out("dip", rc);
    const auto grid = hom::delta_grid(rc.dip.delta_min, rc.dip.delta_max, rc.dip.delta_step);
    const auto curve = hom::dip_curve(grid, rc.dip_setup());
    out.write("dip.csv", render(curve));
    out.finish(false);
    double lowest = 1.0, at = 0.0;
    for (const auto& p : curve.points)
        if (p.central_area < lowest) lowest = p.central_area, at = p.delta;
    std::cout << curve.points.size() << " points; minimum central area " << fixed(lowest)
              << " at delta = " << at << " ps (visibility " << fixed(1.0 - 2.0 * lowest) << ")\n";
    return 0;
}

int cmd_dip_mc(const Common& c) {
    const RunConfig rc = resolve(c);
    Outputs out("dip-mc", rc);
    const auto grid = hom::delta_grid(rc.dip.delta_min, rc.dip.delta_max, rc.dip.delta_step);
    std::ostringstream csv;
    csv << "delta_ps,central_area,error\n";
    csv.precision(12);
    for (double delta : grid) {
        auto mz = rc.interferometer;
        mz.delay = rc.waveform.period() - delta;
        const auto h = hom::simulate_hom(rc.source(), mz, rc.detector, rc.cycles, rc.seed, rc.workers);
        const auto r = hom::peak_areas(h, rc.waveform.period(), rc.analysis_window());
        csv << delta << ',' << r.area(0) << ',' << r.error(0) << '\n';
        std::cout << "delta " << delta << " ps: " << fixed(r.area(0)) << " +- " << fixed(r.error(0)) << "\n";
    }
    out.write("dip_mc.csv", csv.str());
    out.finish(true);
    return 0;
}

std::vector<hom::DipDatum> read_fit_data(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw hom::ValidationError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line.rfind("delta_ps", 0) != 0)
        throw hom::ValidationError("fit data: expected header delta_ps,central_area[,...]");
    std::vector<std::string> header;
    {
        std::istringstream h(line);
        std::string col;
        while (std::getline(h, col, ',')) header.push_back(col);
    }
    std::vector<hom::DipDatum> data;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<double> v;
        while (std::getline(row, cell, ',')) v.push_back(std::stod(cell));
        if (v.size() < 2) throw hom::ValidationError("fit data: malformed row '" + line + "'");
        hom::DipDatum d{v[0], v[1], std::nullopt};
        if (header.size() >= 3 && header[2] == "weight" && v.size() >= 3) d.weight = v[2];
        if (header.size() >= 3 && header[2] == "error" && v.size() >= 3 && v[2] > 0.0)
            d.weight = 1.0 / (v[2] * v[2]);
        data.push_back(d);
    }
    return data;
}

int cmd_fit(const Common& c, const std::string& data_path, double tau0, double sigma0, bool poisson) {
    const RunConfig rc = resolve(c);
    Outputs out("fit", rc);
    const auto data = read_fit_data(data_path);
    hom::FitOptions opt;
    opt.workers = rc.workers;
    if (poisson) opt.weighting = hom::FitWeighting::Poisson;
    const auto r = hom::fit_dip(data, {tau0, sigma0}, rc.dip_setup(), opt);
    out.write("fit.json", hom::to_json(r));
    out.finish(false);
    std::cout << "parameter        value      95% half-width\n"
              << "tau_c (ps)       " << fixed(r.tau_c, 3) << "    " << fixed(r.tau_c_half_width, 3) << "\n"
              << "sigma (ps)       " << fixed(r.sigma_jitter, 3) << "    " << fixed(r.sigma_half_width, 3) << "\n"
              << "visibility(0)    " << fixed(r.visibility_at_zero) << "\n"
              << "residual norm    " << r.residual_norm << "\n"
              << "iterations       " << r.iterations << "\n"
              << "status           " << r.message << "\n";
    return 0;
}

int cmd_relations(double t1, double t2, double g2, double visibility) {
    const double t2s = hom::dephasing_time(t1, t2);
    const double fixed_v = hom::fixed_bias_visibility(t1, t2);
    const bool ok = hom::entanglement_criterion(visibility, g2);
    std::cout << "T2* = " << (std::isinf(t2s) ? std::string("infinite") : fixed(t2s, 1) + " ps") << "\n"
              << "fixed-bias visibility T2/2T1 = " << fixed(fixed_v) << "\n"
              << "entanglement criterion V = " << visibility << " > 2 g2(0) = " << 2 * g2 << ": "
              << (ok ? "fulfilled" : "not fulfilled") << "\n";
    return 0;
}

int cmd_plot(const std::string& input, const std::string& output) {
    std::ifstream in(input);
    if (!in) throw hom::ValidationError("cannot open '" + input + "'");
    std::string first;
    std::getline(in, first);
    in.clear();
    in.seekg(0);
    std::ostringstream csv;
    csv.precision(12);
    if (first.rfind("bin_start_ps", 0) == 0) {
        const auto h = hom::read_histogram_csv(in);
        csv << "time_ns,counts\n";
        for (std::size_t i = 0; i < h.counts.size(); ++i)
            csv << h.bin_center(i) * 1e-3 << ',' << h.counts[i] << '\n';
    } else if (first.rfind("delta_ps", 0) == 0) {
        csv << "delta_ps,central_area" << (first.find(",error") != std::string::npos ? ",error" : "")
            << '\n';
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line))
            if (!line.empty()) csv << line << '\n';
    } else {
        std::ostringstream text;
        text << in.rdbuf();
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text.str());
        } catch (const nlohmann::json::exception&) {
            throw hom::ValidationError("plot: unrecognized input format");
        }
        if (j.value("kind", "") == "peak_area_report") {
            const auto r = hom::report_from_json(text.str());
            csv << "peak_index,area,error\n";
            for (int n = -hom::kMaxPeak; n <= hom::kMaxPeak; ++n)
                csv << n << ',' << r.area(n) << ',' << r.error(n) << '\n';
        } else if (j.value("kind", "") == "correlation_histogram") {
            const fs::path data = fs::path(input).replace_extension(".csv");
            return cmd_plot(data.string(), output);
        } else {
            throw hom::ValidationError("plot: unrecognized result schema");
        }
    }
    if (output.empty() || output == "-") {
        std::cout << csv.str();
    } else {
        std::ofstream(output, std::ios::binary) << csv.str();
    }
    return 0;
}

void add_common(CLI::App* sub, Common& c, bool seeded, bool scan) {
    sub->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--out-dir", c.out_dir, "output directory (default: config, $HOMSIM_OUT_DIR, .)");
    sub->add_option("--workers", c.workers, "worker threads");
    if (seeded) {
        sub->add_option("--seed", c.seed, "random seed");
        sub->add_option("--cycles", c.cycles, "drive cycles to simulate");
        sub->add_flag("--orthogonal", c.orthogonal, "cross-polarized control run");
    }
    if (scan) {
        sub->add_option("--delta-min", c.delta_min, "scan start (ps)");
        sub->add_option("--delta-max", c.delta_max, "scan end (ps)");
        sub->add_option("--delta-step", c.delta_step, "scan step (ps)");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"homsim: pulsed single-photon source HOM/HBT simulator"};
    app.set_version_flag("--version", HOM_VERSION);
    app.require_subcommand(1);

    Common common;
    auto* waveform = app.add_subcommand("waveform", "drive waveform, Stark energy and collection gate");
    add_common(waveform, common, false, false);
    auto* hbt = app.add_subcommand("hbt", "simulate and analyze an HBT correlation");
    add_common(hbt, common, true, false);
    auto* hom_cmd = app.add_subcommand("hom", "simulate and analyze a two-photon interference run");
    add_common(hom_cmd, common, true, false);
    auto* dip = app.add_subcommand("dip", "quadrature dip scan over the period mismatch");
    add_common(dip, common, false, true);
    dip->add_flag("--orthogonal", common.orthogonal, "cross-polarized control");
    auto* dip_mc = app.add_subcommand("dip-mc", "Monte Carlo dip scan over the period mismatch");
    add_common(dip_mc, common, true, true);

    auto* fit = app.add_subcommand("fit", "fit coherence time and jitter to a dip CSV");
    add_common(fit, common, false, false);
    std::string data_path;
    double tau0 = 60.0, sigma0 = 31.0;
    bool poisson = false;
    fit->add_option("data", data_path, "CSV delta_ps,central_area[,weight|error]")->required();
    fit->add_option("--tau-c0", tau0, "initial coherence time (ps)");
    fit->add_option("--sigma0", sigma0, "initial jitter width (ps)");
    fit->add_flag("--poisson", poisson, "Poisson weights");

    auto* rel = app.add_subcommand("relations", "T2*, fixed-bias visibility and entanglement criterion");
    double t1 = 800.0, t2 = 60.0, g2 = 0.03, vis = 0.64;
    rel->add_option("--t1", t1, "radiative lifetime (ps)");
    rel->add_option("--t2", t2, "coherence time (ps)");
    rel->add_option("--g2", g2, "g2(0)");
    rel->add_option("--visibility", vis, "two-photon visibility");

    auto* plot = app.add_subcommand("plot", "plot-ready CSV from a result file");
    std::string plot_in, plot_out;
    plot->add_option("input", plot_in, "histogram CSV/JSON, dip CSV or peak report JSON")->required();
    plot->add_option("-o,--output", plot_out, "output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*waveform) return cmd_waveform(common);
        if (*hbt) return cmd_hbt(common);
        if (*hom_cmd) return cmd_hom(common);
        if (*dip) return cmd_dip(common);
        if (*dip_mc) return cmd_dip_mc(common);
        if (*fit) return cmd_fit(common, data_path, tau0, sigma0, poisson);
        if (*rel) return cmd_relations(t1, t2, g2, vis);
        if (*plot) return cmd_plot(plot_in, plot_out);
    } catch (const hom::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const hom::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << app.help();
    return 1;
}
