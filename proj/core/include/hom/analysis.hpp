#pragma once

// Peak integration and normalization of pulsed correlation histograms.
// Peaks n = -6..6 sit at n * period; areas are normalized so that the mean
// of the ten peaks at |n| = 2..6 is one.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "hom/montecarlo.hpp"

namespace hom {

inline constexpr int kMaxPeak = 6;
inline constexpr std::size_t kPeakCount = 2 * kMaxPeak + 1;

struct PeakAreaReport {
    double period = 0.0;
    double window_half_width = 0.0;
    double window_bins = 0.0;     ///< bins integrated per peak (fractional edges)
    double bin_width = 0.0;
    double baseline_rate = 0.0;   ///< counts per bin between peaks
    std::array<double, kPeakCount> areas{};       ///< normalized, index n + 6
    std::array<double, kPeakCount> area_errors{}; ///< Poisson standard errors
    std::array<double, kPeakCount> raw_counts{};

    double area(int n) const { return areas.at(static_cast<std::size_t>(n + kMaxPeak)); }
    double error(int n) const { return area_errors.at(static_cast<std::size_t>(n + kMaxPeak)); }
    double raw(int n) const { return raw_counts.at(static_cast<std::size_t>(n + kMaxPeak)); }

    /// Mean of the normalized areas at |n| = 2..6.
    double outer_mean() const;
};

/// Window half-width used when none is given: a quarter period.
double default_window(double period);

PeakAreaReport peak_areas(const CorrelationHistogram& hist, double period,
                          double window_half_width);

double g2_zero(const PeakAreaReport& report);

struct VisibilityEstimate {
    double value = 0.0;
    double error = 0.0;
    bool clamped = false;  ///< raw estimate fell outside [0, 1]
};

/// 1 - areas[0] / 0.5.
VisibilityEstimate visibility_from_areas(const PeakAreaReport& report);

/// Removes the flat accidental floor from every peak and renormalizes.
PeakAreaReport correct_dark_counts(const PeakAreaReport& report);

/// JSON with indices keyed "-6".."6".
std::string to_json(const PeakAreaReport& report);
PeakAreaReport report_from_json(const std::string& text);

/// CSV `peak_index,area,raw_counts`.
void write_csv(std::ostream& os, const PeakAreaReport& report);

}  // namespace hom
