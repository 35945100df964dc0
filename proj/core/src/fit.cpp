#include "hom/fit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <thread>

#include <json.hpp>

#include "hom/errors.hpp"

namespace hom {

namespace {

constexpr double kMinTauC = 0.1;      // ps
constexpr double kMinSigma = 1e-3;    // ps
constexpr double kMaxSigma = 1e4;     // ps

struct Bounds {
    std::array<double, 2> lo;
    std::array<double, 2> hi;

    std::array<double, 2> clamp(std::array<double, 2> p) const {
        for (int i = 0; i < 2; ++i) p[i] = std::clamp(p[i], lo[i], hi[i]);
        return p;
    }
};

Bounds log_bounds(const DipSetup& geometry) {
    return {{std::log(kMinTauC), std::log(kMinSigma)},
            {std::log(2.0 * geometry.emitter.t1_radiative), std::log(kMaxSigma)}};
}

DipSetup with_params(const DipSetup& geometry, double tau_c, double sigma) {
    DipSetup s = geometry;
    s.emitter.dephasing_rate = dephasing_rate_for_coherence_time(s.emitter.t1_radiative, tau_c);
    s.jitter.sigma = sigma;
    return s;
}

std::vector<double> weights_for(std::span<const DipDatum> data, FitWeighting scheme) {
    std::vector<double> w;
    w.reserve(data.size());
    for (const auto& d : data) {
        if (d.weight) {
            if (!(*d.weight >= 0.0)) throw ValidationError("fit: weights must be >= 0");
            w.push_back(*d.weight);
        } else if (scheme == FitWeighting::Poisson) {
            w.push_back(1.0 / std::max(d.central_area, 1e-6));
        } else {
            w.push_back(1.0);
        }
    }
    return w;
}

class Problem {
public:
    Problem(std::span<const DipDatum> data, const DipSetup& geometry, const FitOptions& options)
        : data_(data.begin(), data.end()), geometry_(geometry), options_(options) {
        // Canonical order makes the fit independent of the caller's ordering.
        std::sort(data_.begin(), data_.end(), [](const DipDatum& a, const DipDatum& b) {
            return a.delta != b.delta ? a.delta < b.delta : a.central_area < b.central_area;
        });
        sqrt_w_ = weights_for(data_, options.weighting);
        for (double& w : sqrt_w_) w = std::sqrt(w);
    }

    std::size_t size() const { return data_.size(); }

    std::vector<double> residuals(const std::array<double, 2>& logp) const {
        const double tau_c = std::exp(logp[0]);
        const double sigma = std::exp(logp[1]);
        const DipSetup setup = with_params(geometry_, tau_c, sigma);
        std::vector<double> r(data_.size());
        auto work = [&](std::size_t a, std::size_t b) {
            for (std::size_t i = a; i < b; ++i)
                r[i] = sqrt_w_[i] *
                       (dip_central_area(data_[i].delta, setup, options_.quad) - data_[i].central_area);
        };
        const auto workers = static_cast<std::size_t>(std::max(1, options_.workers));
        if (workers == 1) {
            work(0, r.size());
        } else {
            std::vector<std::thread> pool;
            for (std::size_t k = 0; k < workers; ++k)
                pool.emplace_back(work, r.size() * k / workers, r.size() * (k + 1) / workers);
            for (auto& t : pool) t.join();
        }
        return r;
    }

    std::vector<double> jacobian(const std::array<double, 2>& logp, const std::vector<double>& r0,
                                 const Bounds& bounds, bool central) const {
        const std::size_t n = data_.size();
        std::vector<double> jac(n * 2);
        const double h = options_.fd_step;
        for (int j = 0; j < 2; ++j) {
            auto plus = logp;
            auto minus = logp;
            plus[j] += h;
            minus[j] -= h;
            if (central) {
                const auto rp = residuals(plus);
                const auto rm = residuals(minus);
                for (std::size_t i = 0; i < n; ++i) jac[i * 2 + j] = (rp[i] - rm[i]) / (2.0 * h);
                continue;
            }
            // Step away from an active upper bound.
            const bool backward = plus[j] > bounds.hi[j];
            const auto rs = residuals(backward ? minus : plus);
            for (std::size_t i = 0; i < n; ++i)
                jac[i * 2 + j] = backward ? (r0[i] - rs[i]) / h : (rs[i] - r0[i]) / h;
        }
        return jac;
    }

private:
    std::vector<DipDatum> data_;
    DipSetup geometry_;
    FitOptions options_;
    std::vector<double> sqrt_w_;
};

double sum_squares(const std::vector<double>& r) {
    double s = 0.0;
    for (double x : r) s += x * x;
    return s;
}

struct Normal {
    double a00 = 0, a01 = 0, a11 = 0;
    double g0 = 0, g1 = 0;
};

Normal normal_equations(const std::vector<double>& jac, const std::vector<double>& r) {
    Normal ne;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double j0 = jac[i * 2], j1 = jac[i * 2 + 1];
        ne.a00 += j0 * j0;
        ne.a01 += j0 * j1;
        ne.a11 += j1 * j1;
        ne.g0 += j0 * r[i];
        ne.g1 += j1 * r[i];
    }
    return ne;
}

}  // namespace

double dip_model(double delta, double tau_c, double sigma, const DipSetup& geometry,
                 const QuadratureSpec& quad) {
    return dip_central_area(delta, with_params(geometry, tau_c, sigma), quad);
}

std::vector<double> dip_jacobian(std::span<const DipDatum> data, double tau_c, double sigma,
                                 const DipSetup& geometry, const FitOptions& options,
                                 bool central) {
    Problem problem(data, geometry, options);
    const std::array<double, 2> logp{std::log(tau_c), std::log(sigma)};
    const auto r0 = problem.residuals(logp);
    return problem.jacobian(logp, r0, log_bounds(geometry), central);
}

FitResult fit_dip(std::span<const DipDatum> data, FitStart initial, const DipSetup& geometry,
                  const FitOptions& options) {
    if (data.size() < 4) throw ValidationError("fit: need at least 4 data points");
    if (!(initial.tau_c > 0.0) || !(initial.sigma > 0.0))
        throw ValidationError("fit: initial parameters must be positive");
    geometry.validate();
    options.quad.validate();

    const Problem problem(data, geometry, options);
    const Bounds bounds = log_bounds(geometry);
    auto p = bounds.clamp({std::log(initial.tau_c), std::log(initial.sigma)});
    auto r = problem.residuals(p);
    double cost = sum_squares(r);
    double lambda = 1e-3;

    FitResult out;
    Normal ne;
    std::vector<double> jac;
    bool stalled = false;
    for (int it = 1; it <= options.max_iterations; ++it) {
        out.iterations = it;
        jac = problem.jacobian(p, r, bounds, false);
        ne = normal_equations(jac, r);

        // Parameters resting on a bound with the descent direction pointing
        // outward are held fixed for this step.
        std::array<bool, 2> frozen{};
        const std::array<double, 2> grad{ne.g0, ne.g1};
        for (int j = 0; j < 2; ++j) {
            const double edge = 1e-9;
            frozen[j] = (p[j] <= bounds.lo[j] + edge && grad[j] > 0.0) ||
                        (p[j] >= bounds.hi[j] - edge && grad[j] < 0.0);
        }
        if (frozen[0] && frozen[1]) {
            stalled = true;
            out.converged = true;
            out.message = "converged at the parameter bounds";
            break;
        }

        bool accepted = false;
        std::array<double, 2> trial = p;
        std::vector<double> r_trial;
        double cost_trial = cost;
        while (lambda < 1e12) {
            double s0 = 0.0, s1 = 0.0;
            const double d00 = ne.a00 * (1.0 + lambda) + 1e-30;
            const double d11 = ne.a11 * (1.0 + lambda) + 1e-30;
            if (frozen[0]) {
                s1 = -ne.g1 / d11;
            } else if (frozen[1]) {
                s0 = -ne.g0 / d00;
            } else {
                const double det = d00 * d11 - ne.a01 * ne.a01;
                if (det <= 0.0) {
                    lambda *= 10.0;
                    continue;
                }
                s0 = -(d11 * ne.g0 - ne.a01 * ne.g1) / det;
                s1 = -(d00 * ne.g1 - ne.a01 * ne.g0) / det;
            }
            trial = bounds.clamp({p[0] + s0, p[1] + s1});
            if (trial == p) break;
            r_trial = problem.residuals(trial);
            cost_trial = sum_squares(r_trial);
            if (cost_trial < cost) {
                accepted = true;
                lambda = std::max(lambda / 10.0, 1e-12);
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            // No descent direction resolvable above quadrature noise.
            stalled = true;
            out.converged = true;
            out.message = "stalled at a numerical minimum";
            break;
        }
        const double step = std::max(std::abs(trial[0] - p[0]), std::abs(trial[1] - p[1]));
        const double change = (cost - cost_trial) / std::max(cost, 1e-300);
        p = trial;
        r = std::move(r_trial);
        cost = cost_trial;
        if (step < options.tolerance && (change < options.tolerance || cost < 1e-24)) {
            out.converged = true;
            out.message = "converged";
            break;
        }
    }
    if (!out.converged) out.message = "iteration limit reached";
    if (!stalled) {
        jac = problem.jacobian(p, r, bounds, false);
        ne = normal_equations(jac, r);
    }

    out.tau_c = std::exp(p[0]);
    out.sigma_jitter = std::exp(p[1]);
    out.residual_norm = std::sqrt(cost);
    const double tol = 1e-6;
    for (int j = 0; j < 2; ++j)
        if (p[j] <= bounds.lo[j] + tol || p[j] >= bounds.hi[j] - tol) out.pinned = true;

    const double det = ne.a00 * ne.a11 - ne.a01 * ne.a01;
    const double scale = ne.a00 * ne.a11;
    out.degenerate = out.pinned || !(scale > 0.0) || det <= 1e-10 * scale;
    if (!out.degenerate) {
        const auto dof = static_cast<double>(problem.size() > 2 ? problem.size() - 2 : 1);
        const double s2 = cost / dof;
        const double var0 = s2 * ne.a11 / det;
        const double var1 = s2 * ne.a00 / det;
        out.tau_c_half_width = 1.96 * out.tau_c * std::sqrt(var0);
        out.sigma_half_width = 1.96 * out.sigma_jitter * std::sqrt(var1);
    }
    if (out.pinned) out.message += "; parameter pinned at bound";
    if (out.degenerate) out.message += "; degenerate";

    out.visibility_at_zero =
        1.0 - 2.0 * dip_model(0.0, out.tau_c, out.sigma_jitter, geometry, options.quad);
    out.visibility_at_zero = std::clamp(out.visibility_at_zero, 0.0, 1.0);
    return out;
}

std::string to_json(const FitResult& r) {
    nlohmann::ordered_json j;
    j["kind"] = "fit_result";
    j["tau_c_ps"] = r.tau_c;
    j["sigma_jitter_ps"] = r.sigma_jitter;
    j["visibility_at_zero"] = r.visibility_at_zero;
    j["residual_norm"] = r.residual_norm;
    j["tau_c_half_width_ps"] = r.tau_c_half_width;
    j["sigma_half_width_ps"] = r.sigma_half_width;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["pinned"] = r.pinned;
    j["degenerate"] = r.degenerate;
    j["message"] = r.message;
    return j.dump(2) + "\n";
}

}  // namespace hom
