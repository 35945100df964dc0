#pragma once

// Globally adaptive Gauss-Kronrod quadrature (QUADPACK QAG strategy) using
// the 21-point Kronrod / 10-point Gauss rule pair tabulated by Boost.Math.

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hom/errors.hpp"

namespace hom {

struct QuadratureSpec {
    double relative_tolerance = 1e-10;
    double absolute_tolerance = 1e-13;
    int max_subdivisions = 2000;

    void validate() const {
        if (!(relative_tolerance > 0.0) || !(absolute_tolerance > 0.0))
            throw ValidationError("quadrature: tolerances must be > 0");
        if (max_subdivisions < 1)
            throw ValidationError("quadrature: max_subdivisions must be >= 1");
    }
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;

    QuadResult& operator+=(const QuadResult& o) {
        value += o.value;
        error += o.error;
        return *this;
    }
};

namespace detail {

struct Panel {
    double a, b;
    QuadResult r;
    bool operator<(const Panel& o) const { return r.error < o.r.error; }
};

template <class F>
QuadResult gauss_kronrod_21(F& f, double a, double b) {
    using Kronrod = boost::math::quadrature::gauss_kronrod<double, 21>;
    using Gauss = boost::math::quadrature::gauss<double, 10>;
    const auto& x = Kronrod::abscissa();
    const auto& wk = Kronrod::weights();
    const auto& wg = Gauss::weights();
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double f0 = f(mid);
    double kronrod = f0 * wk[0];
    double gauss = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        const double pair = f(mid + half * x[i]) + f(mid - half * x[i]);
        kronrod += pair * wk[i];
        if (i % 2 == 1) gauss += pair * wg[i / 2];
    }
    const double err = std::max(std::abs(kronrod - gauss) * half,
                                std::abs(kronrod * half) * 4.0 * std::numeric_limits<double>::epsilon());
    return {kronrod * half, err};
}

}  // namespace detail

/// Integrates f over [a, b], splitting first at the given interior
/// breakpoints, then bisecting the panel with the largest error estimate
/// until error <= max(abs_tol, rel_tol * |I|). Throws NumericalError when the
/// panel budget is exhausted.
template <class F>
QuadResult integrate(F&& f, double a, double b, const QuadratureSpec& spec,
                     std::span<const double> breakpoints = {}) {
    QuadResult total;
    if (b < a) {
        total = integrate(f, b, a, spec, breakpoints);
        total.value = -total.value;
        return total;
    }
    if (!(b > a)) return total;
    std::vector<double> edges{a};
    for (double x : breakpoints)
        if (x > a && x < b) edges.push_back(x);
    std::sort(edges.begin() + 1, edges.end());
    edges.push_back(b);

    std::priority_queue<detail::Panel> heap;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        if (!(edges[i + 1] > edges[i])) continue;
        auto r = detail::gauss_kronrod_21(f, edges[i], edges[i + 1]);
        total += r;
        heap.push({edges[i], edges[i + 1], r});
    }
    auto allowed = [&] {
        return std::max(spec.absolute_tolerance, spec.relative_tolerance * std::abs(total.value));
    };
    int panels = static_cast<int>(heap.size());
    while (total.error > allowed() && panels < spec.max_subdivisions) {
        auto worst = heap.top();
        heap.pop();
        const double m = 0.5 * (worst.a + worst.b);
        if (!(m > worst.a && m < worst.b)) break;
        auto left = detail::gauss_kronrod_21(f, worst.a, m);
        auto right = detail::gauss_kronrod_21(f, m, worst.b);
        total.value += left.value + right.value - worst.r.value;
        total.error += left.error + right.error - worst.r.error;
        heap.push({worst.a, m, left});
        heap.push({m, worst.b, right});
        ++panels;
    }
    if (!std::isfinite(total.value) || total.error > allowed()) {
        // Re-sum the error so round-off in the running total does not mask convergence.
        double err = 0.0;
        for (auto h = heap; !h.empty(); h.pop()) err += h.top().r.error;
        total.error = err;
        if (!std::isfinite(total.value) || err > allowed())
            throw NumericalError("quadrature did not converge on [" + std::to_string(a) + ", " +
                                     std::to_string(b) + "] within " +
                                     std::to_string(spec.max_subdivisions) +
                                     " panels, error estimate " + std::to_string(err),
                                 err);
    }
    return total;
}

}  // namespace hom
