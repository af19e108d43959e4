#pragma once

#include <vector>

#include "mallows/pressure.hpp"
#include "mallows/sampler.hpp"

namespace mallows {

/// Quadrant split at (theta1, theta2) in (0,1)^2 with prescribed mass
/// fractions t11 + t12 + t21 + t22 = 1 (within 1e-12), all nonnegative.
/// First index: x against theta1; second: y against theta2.
struct FourSplit {
    FourSplit(double theta1, double theta2, double t11, double t12, double t21, double t22);

    double theta1, theta2;
    double t11, t12, t21, t22;
};

/// One-parameter family of splits with uniform marginals fixed:
/// (t, theta1-t, theta2-t, 1-theta1-theta2+t) for t in
/// [max(0, theta1+theta2-1), min(theta1, theta2)].
struct DiagonalParam {
    DiagonalParam(double theta1, double theta2, double t);

    static double t_lower(double theta1, double theta2);
    static double t_upper(double theta1, double theta2);

    /// (theta1 + theta2) - 1, the t at which the far corner block empties.
    /// Shared by t_lower and t22 so the difference below is computed exactly
    /// (Sterbenz) near the endpoint instead of cancelling catastrophically.
    static double corner_offset(double theta1, double theta2) {
        return (theta1 + theta2) - 1.0;
    }

    double t11() const { return t; }
    double t12() const { return theta1 - t; }
    double t21() const { return theta2 - t; }
    double t22() const { return t - corner_offset(theta1, theta2); }

    double theta1, theta2, t;
};

/// Large-deviation cost of prescribing the four quadrant masses: the
/// entropic term sum t_ij ln(t_ij / |block_ij|) plus diluted pressures of
/// the blocks minus those of the row and column bands, plus the crossing
/// term beta * t12 * t21.  Vanishing t_ij enter with 0 ln 0 = 0.
double four_square_cost(const FourSplit& split, double beta);
double four_square_cost(const FourSplit& split, double beta, const PressureEvaluator& rule);

/// four_square_cost on the diagonal family.  Evaluates both the full
/// four-square form and the algebraically reduced form and insists they
/// agree to 1e-10.
double diagonal_cost(const DiagonalParam& param, double beta);
double diagonal_cost(const DiagonalParam& param, double beta, const PressureEvaluator& rule);

/// d/dt of diagonal_cost: ln[(1-e^{-beta t11})(1-e^{-beta t22})
/// / ((e^{beta t12}-1)(e^{beta t21}-1))], continuous through beta = 0
/// where it becomes ln(t11 t22 / (t12 t21)).  Returns -inf/+inf at the
/// interval endpoints.
double diagonal_cost_dt(const DiagonalParam& param, double beta);

/// d^2/dt^2 of diagonal_cost: sum over blocks of beta/(2 tanh(beta t_ij/2)),
/// i.e. sum 1/t_ij at beta = 0.  Strictly positive on the open interval.
double diagonal_cost_dtt(const DiagonalParam& param, double beta);

/// Root of diagonal_cost_dt by safeguarded Newton (bisection fallback) on
/// the open interval; converges to |derivative| < 1e-13 and throws
/// std::runtime_error after 200 iterations.
double solve_critical_mass(double theta1, double theta2, double beta);

/// Closed-form joint CDF of the zero-rate measure,
///   -(1/beta) ln(1 - (1-e^{-beta theta1})(1-e^{-beta theta2})/(1-e^{-beta})),
/// extended continuously to beta = 0 (theta1*theta2) and to the boundary
/// of [0,1]^2.  Stable for arbitrarily large |beta| (log-domain branches).
double equilibrium_cdf(double theta1, double theta2, double beta);

/// Mixed second partial of equilibrium_cdf: the density
///   beta (1-e^{-beta}) e^{-beta(x+y)} /
///   [(1-e^{-beta}) - (1-e^{-beta x})(1-e^{-beta y})]^2,
/// equal to 1 everywhere at beta = 0.
double equilibrium_density(double x, double y, double beta);

/// d/dtheta2 of equilibrium_cdf:
///   e^{-beta theta2} (1-e^{-beta theta1}) /
///   [(1-e^{-beta}) - (1-e^{-beta theta1})(1-e^{-beta theta2})].
double equilibrium_cdf_dtheta2(double theta1, double theta2, double beta);

/// Lower bound for the weighted two-block entropy/crossing expression of
/// measures supported in an interval of width theta:
///   -(t1+t2) ln(theta) + t1 p(beta t1) + t2 p(beta t2)
///   - (t1+t2) p(beta (t1+t2)).
double two_square_lower_bound(double t1, double t2, double theta, double beta);
double two_square_lower_bound(double t1, double t2, double theta, double beta,
                              const PressureEvaluator& rule);

/// ln of the exact n-point probability that the empirical measure puts
/// counts (n11,n12,n21,n22) in the four quadrants at (theta1,theta2):
/// the multinomial beta=0 term times q^{n12 n21} times a ratio of reduced
/// q-factorials of the band sums, at q = exp(-beta/(n-1)).
double log_four_square_probability(const SplitCounts& counts, double theta1, double theta2,
                                   int n, double beta);
double four_square_probability(const SplitCounts& counts, double theta1, double theta2, int n,
                               double beta);

/// Brute-force oracle: enumerates S_n once (n <= 9) and tabulates the
/// q^inv weight of every (x-rank cut, y-rank cut, joint count) triple;
/// quadrant probabilities follow by attaching binomial factors for the
/// numbers of coordinates below each cut.
class FourSquareEnumerator {
public:
    FourSquareEnumerator(int n, double beta);

    int size() const { return n_; }
    double probability(const SplitCounts& counts, double theta1, double theta2) const;

private:
    int n_;
    double beta_;
    std::vector<long double> weight_;  // (n+1)^3 cube over (a, b, joint)
    long double total_weight_ = 0.0L;
};

/// Single-shot convenience wrapper around FourSquareEnumerator.
double four_square_probability_enumerated(const SplitCounts& counts, double theta1,
                                          double theta2, int n, double beta);

}  // namespace mallows
