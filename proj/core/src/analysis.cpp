#include "hom/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "hom/errors.hpp"

namespace hom {

namespace {

std::size_t slot(int n) { return static_cast<std::size_t>(n + kMaxPeak); }

bool is_outer(int n) { return std::abs(n) >= 2; }

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

// Fills areas and errors from raw_counts. `variance` holds the Poisson
// variance of each raw count.
void normalize(PeakAreaReport& r, const std::array<double, kPeakCount>& variance) {
    double sum = 0.0, var_sum = 0.0;
    for (int n = -kMaxPeak; n <= kMaxPeak; ++n) {
        if (!is_outer(n)) continue;
        sum += r.raw_counts[slot(n)];
        var_sum += variance[slot(n)];
    }
    const double mean = sum / 10.0;
    if (!(mean > 0.0))
        throw ValidationError("peak areas: outer-peak mean is not positive (degenerate histogram)");
    const double rel_mean_var = var_sum / (sum * sum);
    for (int n = -kMaxPeak; n <= kMaxPeak; ++n) {
        const double a = std::max(0.0, r.raw_counts[slot(n)]) / mean;
        r.areas[slot(n)] = a;
        const double var_c = std::max(variance[slot(n)], 1.0) / (mean * mean);
        r.area_errors[slot(n)] = std::sqrt(var_c + a * a * rel_mean_var);
    }
}

}  // namespace

double PeakAreaReport::outer_mean() const {
    double s = 0.0;
    for (int n = -kMaxPeak; n <= kMaxPeak; ++n)
        if (is_outer(n)) s += area(n);
    return s / 10.0;
}

double default_window(double period) { return 0.25 * period; }

PeakAreaReport peak_areas(const CorrelationHistogram& hist, double period,
                          double window_half_width) {
    if (!(period > 0.0)) throw ValidationError("peak areas: period must be > 0");
    if (!(window_half_width > 0.0 && window_half_width < 0.5 * period))
        throw ValidationError("peak areas: window half-width must be in (0, period/2)");
    if (hist.counts.empty() || !(hist.bin_width > 0.0))
        throw ValidationError("peak areas: empty histogram");
    if (hist.half_range() < 6.5 * period * (1.0 - 1e-12))
        throw ValidationError("peak areas: histogram spans +/-" + std::to_string(hist.half_range()) +
                              " ps, need +/-6.5 periods");

    PeakAreaReport r;
    r.period = period;
    r.window_half_width = window_half_width;
    r.bin_width = hist.bin_width;
    r.window_bins = 2.0 * window_half_width / hist.bin_width;

    const double w = hist.bin_width;
    std::vector<double> between;
    std::array<double, kPeakCount> raw{};
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        const double b0 = hist.bin_start(i);
        const double b1 = b0 + w;
        const double c = 0.5 * (b0 + b1);
        const double nearest = std::round(c / period);
        const double dist = std::abs(c - nearest * period);
        if (dist > window_half_width + 0.5 * w) {
            between.push_back(static_cast<double>(hist.counts[i]));
            continue;
        }
        const int n = static_cast<int>(nearest);
        if (std::abs(n) > kMaxPeak) continue;
        const double center = nearest * period;
        const double lo = std::max(b0, center - window_half_width);
        const double hi = std::min(b1, center + window_half_width);
        if (hi > lo) raw[slot(n)] += static_cast<double>(hist.counts[i]) * (hi - lo) / w;
    }
    r.raw_counts = raw;
    r.baseline_rate = median(std::move(between));
    normalize(r, raw);
    return r;
}

double g2_zero(const PeakAreaReport& report) { return report.area(0); }

VisibilityEstimate visibility_from_areas(const PeakAreaReport& report) {
    const double v = 1.0 - report.area(0) / 0.5;
    VisibilityEstimate out;
    out.error = 2.0 * report.error(0);
    out.clamped = v < 0.0 || v > 1.0;
    out.value = std::clamp(v, 0.0, 1.0);
    return out;
}

PeakAreaReport correct_dark_counts(const PeakAreaReport& report) {
    PeakAreaReport out = report;
    if (report.baseline_rate == 0.0) return out;
    const double floor = report.baseline_rate * report.window_bins;
    std::array<double, kPeakCount> variance{};
    for (std::size_t i = 0; i < kPeakCount; ++i) {
        variance[i] = std::max(report.raw_counts[i], 0.0);
        out.raw_counts[i] = report.raw_counts[i] - floor;
    }
    double outer = 0.0;
    for (int n = -kMaxPeak; n <= kMaxPeak; ++n)
        if (is_outer(n)) outer += out.raw_counts[slot(n)];
    if (!(outer > 0.0))
        throw ValidationError("dark-count correction: baseline exceeds the outer-peak signal");
    out.baseline_rate = 0.0;
    normalize(out, variance);
    return out;
}

std::string to_json(const PeakAreaReport& r) {
    nlohmann::ordered_json j;
    j["kind"] = "peak_area_report";
    j["period_ps"] = r.period;
    j["window_half_width_ps"] = r.window_half_width;
    j["window_bins"] = r.window_bins;
    j["bin_width_ps"] = r.bin_width;
    j["baseline_rate"] = r.baseline_rate;
    nlohmann::ordered_json areas, errors, raw;
    for (int n = -kMaxPeak; n <= kMaxPeak; ++n) {
        const auto key = std::to_string(n);
        areas[key] = r.area(n);
        errors[key] = r.error(n);
        raw[key] = r.raw(n);
    }
    j["areas"] = std::move(areas);
    j["errors"] = std::move(errors);
    j["raw_counts"] = std::move(raw);
    return j.dump(2) + "\n";
}

PeakAreaReport report_from_json(const std::string& text) {
    PeakAreaReport r;
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.value("kind", "") != "peak_area_report")
            throw ValidationError("peak report json: kind is not peak_area_report");
        r.period = j.at("period_ps").get<double>();
        r.window_half_width = j.at("window_half_width_ps").get<double>();
        r.window_bins = j.at("window_bins").get<double>();
        r.bin_width = j.at("bin_width_ps").get<double>();
        r.baseline_rate = j.at("baseline_rate").get<double>();
        for (int n = -kMaxPeak; n <= kMaxPeak; ++n) {
            const auto key = std::to_string(n);
            r.areas[slot(n)] = j.at("areas").at(key).get<double>();
            r.area_errors[slot(n)] = j.at("errors").at(key).get<double>();
            r.raw_counts[slot(n)] = j.at("raw_counts").at(key).get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("peak report json: ") + e.what());
    }
    return r;
}

void write_csv(std::ostream& os, const PeakAreaReport& r) {
    os << "peak_index,area,raw_counts\n";
    std::ostringstream row;
    row.precision(12);
    for (int n = -kMaxPeak; n <= kMaxPeak; ++n) {
        row.str({});
        row << n << ',' << r.area(n) << ',' << r.raw(n) << '\n';
        os << row.str();
    }
}

}  // namespace hom
