#pragma once

#include <span>
#include <vector>

namespace mallows {

/// ln((1 - e^{-u})/u), defined by continuity as 0 at u = 0.
/// This is the pressure integrand at u = beta*x and the derivative
/// d/dt [t p(beta t)] at u = beta*t.
double log_g(double u);

/// Fixed Gauss-Legendre rule on [0,1] evaluating the pressure integral
///   p(beta) = int_0^1 ln((1 - e^{-beta x})/(beta x)) dx.
/// For |beta| > 5 the integration is split at x = 5/|beta| where the
/// integrand turns from a boundary layer into a slow logarithmic tail.
/// Immutable after construction; evaluations are pure and thread-safe.
class PressureEvaluator {
public:
    explicit PressureEvaluator(int order = 64);

    double pressure(double beta) const;

    /// t * p(beta*t), with the continuous extension 0 at t = 0.
    double t_pressure(double t, double beta) const;

    int order() const { return order_; }
    std::span<const double> nodes() const { return nodes_; }
    std::span<const double> weights() const { return weights_; }

private:
    int order_;
    std::vector<double> nodes_;    // abscissae on [0,1]
    std::vector<double> weights_;  // sum to 1
};

/// Shared immutable default rule (64 nodes).
const PressureEvaluator& default_pressure();

double pressure(double beta);
double t_pressure(double t, double beta);

/// p_n(beta) = (1/n) ln([n]_q!/n!) at q = exp(-beta/(n-1)), the exact
/// finite-volume pressure.  Rejects n < 2.
double finite_volume_pressure(int n, double beta);

/// R_n(beta) = ln([n]_q!/n!) - n p(beta) - beta/2 - (1/2) ln((1-e^{-beta})/beta),
/// evaluated at ln q = -beta/n.  With that scaling R_n -> 0; with
/// ln q = -beta/(n-1) the same expression tends to the nonzero constant
/// ln((1-e^{-beta})/beta) - p(beta).
double q_stirling_remainder(int n, double beta);
double q_stirling_remainder(int n, double beta, const PressureEvaluator& rule);

}  // namespace mallows
