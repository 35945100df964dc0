#pragma once

// Brute-force reference computations written independently of the engine.

#include <cmath>
#include <vector>

namespace oracle {

/// Normalized gated exponential intensity on [0, L] (local time).
inline double gated_intensity(double t, double decay, double length) {
    if (t < 0.0 || t > length) return 0.0;
    return std::exp(-t / decay) / (decay * (1.0 - std::exp(-length / decay)));
}

/// Pair visibility for two unchirped gated packets offset by dt with shared
/// pure dephasing rate g: double midpoint sum of the interference term.
inline double gated_visibility(double decay, double length, double g, double dt, int n = 3000) {
    const double lo = std::max(0.0, dt);
    const double hi = std::min(length, length + dt);
    if (hi <= lo) return 0.0;
    const double h = (hi - lo) / n;
    std::vector<double> s(n);
    for (int i = 0; i < n; ++i) {
        const double t = lo + (i + 0.5) * h;
        s[i] = std::sqrt(gated_intensity(t, decay, length) * gated_intensity(t - dt, decay, length));
    }
    const double q = std::exp(-2.0 * g * h);
    // sum_ij s_i s_j q^|i-j| via a forward/backward recursion
    double total = 0.0, run = 0.0;
    std::vector<double> fwd(n);
    for (int i = 0; i < n; ++i) {
        run = run * q + s[i];
        fwd[i] = run;
    }
    for (int i = 0; i < n; ++i) total += s[i] * (2.0 * fwd[i] - s[i]);
    return total * h * h;
}

/// Mean of f over N(mu, sd^2) by a composite Simpson rule on mu +- 8 sd.
template <class F>
double gaussian_mean(F&& f, double mu, double sd, int n = 800) {
    if (sd == 0.0) return f(mu);
    const double a = mu - 8.0 * sd, b = mu + 8.0 * sd, h = (b - a) / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double x = a + i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        acc += w * f(x) * std::exp(-0.5 * (x - mu) * (x - mu) / (sd * sd));
    }
    return acc * h / 3.0 / (sd * std::sqrt(2.0 * M_PI));
}

}  // namespace oracle
