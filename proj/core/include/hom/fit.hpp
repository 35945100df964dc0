#pragma once

// Damped least-squares fit of the jitter-averaged dip model to measured or
// simulated central-peak areas. Free parameters are the coherence time T2
// and the jitter width; T1 and the gate geometry stay fixed.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hom/analytic.hpp"

namespace hom {

struct DipDatum {
    double delta;
    double central_area;
    std::optional<double> weight;  ///< overrides the weighting scheme when set
};

enum class FitWeighting { Uniform, Poisson };

struct FitOptions {
    FitWeighting weighting = FitWeighting::Uniform;
    int max_iterations = 200;
    double tolerance = 1e-6;     ///< relative step and relative residual change
    double fd_step = 1e-5;       ///< forward-difference step in log-parameter space
    QuadratureSpec quad{1e-11, 1e-14, 4000};
    int workers = 1;
};

struct FitResult {
    double tau_c = 0.0;          ///< ps
    double sigma_jitter = 0.0;   ///< ps, in the geometry's jitter interpretation
    double visibility_at_zero = 0.0;
    double residual_norm = 0.0;  ///< sqrt of the weighted sum of squared residuals
    double tau_c_half_width = 0.0;  ///< 95% half-widths from the local quadratic model
    double sigma_half_width = 0.0;
    int iterations = 0;
    bool converged = false;
    bool pinned = false;      ///< a parameter ended on its bound
    bool degenerate = false;  ///< the data do not constrain both parameters
    std::string message;
};

struct FitStart {
    double tau_c;
    double sigma;
};

/// Model central area for given (tau_c, sigma) on top of `geometry`.
double dip_model(double delta, double tau_c, double sigma, const DipSetup& geometry,
                 const QuadratureSpec& quad);

/// Forward-difference Jacobian of the weighted residuals with respect to
/// (ln tau_c, ln sigma); row-major, data.size() x 2. Central differences when
/// `central` is set.
std::vector<double> dip_jacobian(std::span<const DipDatum> data, double tau_c, double sigma,
                                 const DipSetup& geometry, const FitOptions& options,
                                 bool central = false);

FitResult fit_dip(std::span<const DipDatum> data, FitStart initial, const DipSetup& geometry,
                  const FitOptions& options = {});

std::string to_json(const FitResult& result);

}  // namespace hom
