#pragma once

// Transfer functions linking nitrogen application to agronomic outcomes:
// a Gompertz yield curve and a quadratic leaching curve, plus the least-squares
// fitters that recover their parameters from simulated response points.

#include <optional>
#include <vector>

namespace cornsoy {

/// Parameters of the per-technology transfer functions.
///   yield(n)    = y_max * exp(-b * exp(-c*n))          [tons/acre]
///   leaching(n) = alpha0 + alpha1*n + alpha2*n^2       [kg-N/acre]
struct TransferParams {
    double y_max = 0.0;   // tons/acre, asymptotic yield
    double b = 0.0;       // displacement, dimensionless
    double c = 0.0;       // rate, acre/kg-N
    double alpha0 = 0.0;  // kg-N/acre
    double alpha1 = 0.0;  // dimensionless
    double alpha2 = 0.0;  // acre/kg-N

    bool yield_valid() const { return y_max > 0.0 && b > 0.0 && c > 0.0; }
    bool leach_valid() const { return alpha0 >= 0.0 && alpha1 >= 0.0 && alpha2 > 0.0; }
    /// N rate at which yield switches from convex to concave: ln(b)/c.
    double inflection_n() const;
};

/// One fitted point: an N application rate and the simulated response
/// (yield in tons/acre or leaching in kg-N/acre).
struct ResponsePoint {
    double n_rate = 0.0;
    double value = 0.0;
};

double gompertz_yield(double n, const TransferParams& p);

struct GompertzDerivatives {
    double dy_dn = 0.0;    // tons per kg-N
    double d2y_dn2 = 0.0;  // tons*acre per kg-N^2
};
GompertzDerivatives gompertz_derivatives(double n, const TransferParams& p);

double leach_rate(double n, const TransferParams& p);

enum class FitStatus { Converged, NoConvergence, SingularFit };

struct GompertzFit {
    TransferParams params;  // yield part only (y_max, b, c)
    FitStatus status = FitStatus::Converged;
    double rmse = 0.0;
    int iterations = 0;
};

/// Damped Gauss-Newton (Levenberg-Marquardt style) fit of the Gompertz curve
/// in log-parameter space. Requires >= 4 points with >= 3 distinct n rates and
/// strictly positive values. Stops when the relative step drops below 1e-10 or
/// the gradient norm below 1e-12; gives up after 500 iterations and returns
/// the best parameters seen with status NoConvergence. A Jacobian that stays
/// rank-deficient at every damping level yields SingularFit.
GompertzFit fit_gompertz(const std::vector<ResponsePoint>& points,
                         const std::optional<TransferParams>& init = std::nullopt);

/// Nonnegative least squares for the quadratic leaching curve. Fits
/// unconstrained first, then clamps negative coefficients and refits the rest;
/// alpha2 is kept strictly positive (machine minimum if it would clamp).
/// Throws CalibrationError("degenerate design ...") if fewer than 3 distinct
/// n rates are present.
TransferParams fit_quadratic(const std::vector<ResponsePoint>& points);

}  // namespace cornsoy
