#include "mallows/pressure.hpp"

#include <cmath>
#include <stdexcept>

#include "mallows/qcomb.hpp"

namespace mallows {

double log_g(double u) {
    const double au = std::abs(u);
    if (au < 1e-5) {
        const double u2 = u * u;
        return -0.5 * u + u2 / 24.0 - u2 * u2 / 2880.0;
    }
    if (u > 0.0) return std::log(-std::expm1(-u)) - std::log(u);
    if (u < -708.0) return -u - std::log(-u);  // e^{-u} dominates; avoids overflow
    return std::log(std::expm1(-u)) - std::log(-u);
}

namespace {

// Newton iteration on the Legendre recurrence; nodes/weights mapped to [0,1].
void gauss_legendre_unit(int order, std::vector<double>& x, std::vector<double>& w) {
    x.resize(static_cast<std::size_t>(order));
    w.resize(static_cast<std::size_t>(order));
    const int half = (order + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (order + 0.5));
        double z1, pp;
        do {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < order; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
            }
            pp = order * (z * p1 - p2) / (z * z - 1.0);
            z1 = z;
            z = z1 - p1 / pp;
        } while (std::abs(z - z1) > 1e-15);
        const std::size_t a = static_cast<std::size_t>(i);
        const std::size_t b = static_cast<std::size_t>(order - 1 - i);
        x[a] = 0.5 * (1.0 - z);
        x[b] = 0.5 * (1.0 + z);
        w[a] = w[b] = 1.0 / ((1.0 - z * z) * pp * pp);
    }
}

}  // namespace

PressureEvaluator::PressureEvaluator(int order) : order_(order) {
    if (order < 2) throw std::invalid_argument("PressureEvaluator: order must be >= 2");
    gauss_legendre_unit(order, nodes_, weights_);
}

double PressureEvaluator::pressure(double beta) const {
    if (beta == 0.0) return 0.0;
    const double ab = std::abs(beta);
    if (ab <= 5.0) {
        double s = 0.0;
        for (int i = 0; i < order_; ++i) {
            const std::size_t k = static_cast<std::size_t>(i);
            s += weights_[k] * log_g(beta * nodes_[k]);
        }
        return s;
    }
    const double split = 5.0 / ab;
    double s = 0.0;
    for (int i = 0; i < order_; ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        const double xl = split * nodes_[k];
        const double xr = split + (1.0 - split) * nodes_[k];
        s += split * weights_[k] * log_g(beta * xl);
        s += (1.0 - split) * weights_[k] * log_g(beta * xr);
    }
    return s;
}

double PressureEvaluator::t_pressure(double t, double beta) const {
    if (t < 0.0) throw std::invalid_argument("t_pressure: t must be >= 0");
    if (t == 0.0) return 0.0;
    return t * pressure(beta * t);
}

const PressureEvaluator& default_pressure() {
    static const PressureEvaluator rule(64);
    return rule;
}

double pressure(double beta) { return default_pressure().pressure(beta); }

double t_pressure(double t, double beta) { return default_pressure().t_pressure(t, beta); }

double finite_volume_pressure(int n, double beta) {
    if (n < 2) throw std::invalid_argument("finite_volume_pressure: n must be >= 2");
    const double q = std::exp(-beta / (n - 1));
    return log_reduced_q_factorial(n, q).logmag / n;
}

double q_stirling_remainder(int n, double beta, const PressureEvaluator& rule) {
    if (n < 2) throw std::invalid_argument("q_stirling_remainder: n must be >= 2");
    if (beta == 0.0) return 0.0;  // every term vanishes in the limit
    const double q = std::exp(-beta / n);
    return log_reduced_q_factorial(n, q).logmag - n * rule.pressure(beta) - 0.5 * beta -
           0.5 * log_g(beta);
}

double q_stirling_remainder(int n, double beta) {
    return q_stirling_remainder(n, beta, default_pressure());
}

}  // namespace mallows
