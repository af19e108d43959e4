#include "mallows/foursquare.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mallows/qcomb.hpp"

namespace mallows {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_open_unit(double theta, const char* name) {
    if (!(theta > 0.0 && theta < 1.0))
        throw std::invalid_argument(std::string(name) + " must lie in (0,1), got " +
                                    std::to_string(theta));
}

// ln(1 - e^{-u}) for u > 0; -inf at u = 0.
double log1mexp(double u) {
    if (u <= 0.0) return -kInf;
    return u > 0.693 ? std::log1p(-std::exp(-u)) : std::log(-std::expm1(-u));
}

// ln(e^u - 1) for u >= 0; -inf at u = 0.
double log_expm1(double u) {
    if (u <= 0.0) return -kInf;
    if (u > 700.0) return u;
    return std::log(std::expm1(u));
}

double logsumexp2(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

double softplus(double z) {
    if (z > 36.0) return z + std::exp(-z);
    if (z < -36.0) return std::exp(z);
    return std::log1p(std::exp(z));
}

// ln(1 - u(theta1,theta2,beta)) with
//   u = (1-e^{-beta th1})(1-e^{-beta th2})/(1-e^{-beta}),
// computed without cancellation for either sign and any magnitude of beta.
// Arguments are ordered first, so the value is bitwise symmetric.
double log_one_minus_u(double th1, double th2, double beta) {
    if (beta == 0.0 || th1 <= 0.0 || th2 <= 0.0) return 0.0;
    if (th1 < th2) std::swap(th1, th2);
    if (beta > 0.0) {
        // 1 - u = [a(1-b) + b(1-e^{-beta(1-th2)})] / (1-e^{-beta})
        // with a = e^{-beta th1}, b = e^{-beta th2}; both summands positive.
        const double lt1 = -beta * th1 + log1mexp(beta * th2);
        const double lt2 = -beta * th2 + log1mexp(beta * (1.0 - th2));
        return logsumexp2(lt1, lt2) - log1mexp(beta);
    }
    // beta < 0: 1 - u = 1 + (e^{g th1}-1)(e^{g th2}-1)/(e^g - 1), g = -beta.
    const double g = -beta;
    const double ln_e = log_expm1(g * th1) + log_expm1(g * th2) - log_expm1(g);
    return softplus(ln_e);
}

// (u/2)/tanh(u/2), the even function appearing in the second derivative;
// equals 1 at u = 0.
double half_u_coth(double u) {
    const double au = std::abs(u);
    if (au < 1e-4) return 1.0 + u * u / 12.0;
    if (au > 700.0) return 0.5 * au;
    return 0.5 * au * (1.0 + 2.0 / std::expm1(au));
}

double xlogx_over(double t, double area) { return t > 0.0 ? t * std::log(t / area) : 0.0; }

}  // namespace

FourSplit::FourSplit(double theta1_, double theta2_, double t11_, double t12_, double t21_,
                     double t22_)
    : theta1(theta1_), theta2(theta2_), t11(t11_), t12(t12_), t21(t21_), t22(t22_) {
    require_open_unit(theta1, "theta1");
    require_open_unit(theta2, "theta2");
    for (double t : {t11, t12, t21, t22})
        if (!(t >= 0.0)) throw std::invalid_argument("FourSplit: fractions must be >= 0");
    if (std::abs(t11 + t12 + t21 + t22 - 1.0) > 1e-12)
        throw std::invalid_argument("FourSplit: fractions must sum to 1 within 1e-12");
}

DiagonalParam::DiagonalParam(double theta1_, double theta2_, double t_)
    : theta1(theta1_), theta2(theta2_), t(t_) {
    require_open_unit(theta1, "theta1");
    require_open_unit(theta2, "theta2");
    const double lo = t_lower(theta1, theta2);
    const double hi = t_upper(theta1, theta2);
    if (!(t >= lo && t <= hi))
        throw std::invalid_argument("DiagonalParam: t=" + std::to_string(t) +
                                    " outside [" + std::to_string(lo) + "," +
                                    std::to_string(hi) + "]");
}

double DiagonalParam::t_lower(double theta1, double theta2) {
    return std::max(0.0, corner_offset(theta1, theta2));
}

double DiagonalParam::t_upper(double theta1, double theta2) {
    return std::min(theta1, theta2);
}

double four_square_cost(const FourSplit& s, double beta, const PressureEvaluator& rule) {
    const double a11 = s.theta1 * s.theta2;
    const double a12 = s.theta1 * (1.0 - s.theta2);
    const double a21 = (1.0 - s.theta1) * s.theta2;
    const double a22 = (1.0 - s.theta1) * (1.0 - s.theta2);
    const auto tp = [&](double t) { return rule.t_pressure(t, beta); };

    double v = rule.pressure(beta);
    v += xlogx_over(s.t11, a11) + xlogx_over(s.t12, a12) + xlogx_over(s.t21, a21) +
         xlogx_over(s.t22, a22);
    v += tp(s.t11) + tp(s.t12) + tp(s.t21) + tp(s.t22);
    v -= tp(s.t11 + s.t12) + tp(s.t11 + s.t21) + tp(s.t12 + s.t22) + tp(s.t21 + s.t22);
    v += beta * s.t12 * s.t21;
    return v;
}

double four_square_cost(const FourSplit& s, double beta) {
    return four_square_cost(s, beta, default_pressure());
}

double diagonal_cost(const DiagonalParam& d, double beta, const PressureEvaluator& rule) {
    const double full = four_square_cost(
        FourSplit(d.theta1, d.theta2, d.t11(), d.t12(), d.t21(), d.t22()), beta, rule);

    // Reduced form: the band sums collapse to theta1, theta2, 1-theta2, 1-theta1.
    const double a11 = d.theta1 * d.theta2;
    const double a12 = d.theta1 * (1.0 - d.theta2);
    const double a21 = (1.0 - d.theta1) * d.theta2;
    const double a22 = (1.0 - d.theta1) * (1.0 - d.theta2);
    const auto tp = [&](double t) { return rule.t_pressure(t, beta); };
    double reduced = rule.pressure(beta) - tp(d.theta1) - tp(d.theta2) - tp(1.0 - d.theta1) -
                     tp(1.0 - d.theta2);
    reduced += xlogx_over(d.t11(), a11) + xlogx_over(d.t12(), a12) + xlogx_over(d.t21(), a21) +
               xlogx_over(d.t22(), a22);
    reduced += tp(d.t11()) + tp(d.t12()) + tp(d.t21()) + tp(d.t22());
    reduced += beta * d.t12() * d.t21();

    if (std::abs(full - reduced) > 1e-10)
        throw std::logic_error("diagonal_cost: full and reduced forms disagree by " +
                               std::to_string(full - reduced));
    return full;
}

double diagonal_cost(const DiagonalParam& d, double beta) {
    return diagonal_cost(d, beta, default_pressure());
}

double diagonal_cost_dt(const DiagonalParam& d, double beta) {
    const double t11 = d.t11(), t12 = d.t12(), t21 = d.t21(), t22 = d.t22();
    if (t11 <= 0.0 || t22 <= 0.0) return -kInf;
    if (t12 <= 0.0 || t21 <= 0.0) return kInf;
    // (1-e^{-beta t}) = beta t g(beta t) and (e^{beta t}-1) = beta t g(-beta t),
    // so the beta factors cancel and the expression is smooth through beta = 0.
    return std::log(t11) + std::log(t22) - std::log(t12) - std::log(t21) + log_g(beta * t11) +
           log_g(beta * t22) - log_g(-beta * t12) - log_g(-beta * t21);
}

double diagonal_cost_dtt(const DiagonalParam& d, double beta) {
    const double ts[4] = {d.t11(), d.t12(), d.t21(), d.t22()};
    double s = 0.0;
    for (double t : ts) {
        if (t <= 0.0) return kInf;
        s += half_u_coth(beta * t) / t;
    }
    return s;
}

namespace {

// Residual of the critical-point equation in extended precision.  Close to
// the interval endpoints one ulp of t moves the double residual by more
// than 1e-13 (slope ~ 1/t_small), so the last Newton steps run here.
long double diagonal_cost_dt_ld(double theta1, double theta2, long double t, double beta) {
    const long double c22 = (static_cast<long double>(theta1) + theta2) - 1.0L;
    const long double ts[4] = {t, theta1 - t, theta2 - t, t - c22};
    const auto lg = [](long double u) -> long double {
        if (u > -1e-6L && u < 1e-6L) return -u / 2.0L + u * u / 24.0L;
        if (u > 0.0L) return std::log(-std::expm1(-u)) - std::log(u);
        return std::log(std::expm1(-u)) - std::log(-u);
    };
    const long double b = beta;
    return std::log(ts[0]) + std::log(ts[3]) - std::log(ts[1]) - std::log(ts[2]) +
           lg(b * ts[0]) + lg(b * ts[3]) - lg(-b * ts[1]) - lg(-b * ts[2]);
}

}  // namespace

double solve_critical_mass(double theta1, double theta2, double beta) {
    require_open_unit(theta1, "theta1");
    require_open_unit(theta2, "theta2");
    const double lo0 = DiagonalParam::t_lower(theta1, theta2);
    const double hi0 = DiagonalParam::t_upper(theta1, theta2);
    double lo = lo0, hi = hi0;
    const auto deriv = [&](double t) { return diagonal_cost_dt(DiagonalParam(theta1, theta2, t), beta); };

    // Phase 1: safeguarded Newton in double; the derivative rises from
    // -inf to +inf, so [lo,hi] always brackets.
    double t = 0.5 * (lo + hi);
    for (int iter = 0; iter < 140; ++iter) {
        const double f = deriv(t);
        if (std::abs(f) < 1e-13) return t;
        if (f < 0.0)
            lo = t;
        else
            hi = t;
        const double fp = diagonal_cost_dtt(DiagonalParam(theta1, theta2, t), beta);
        double next = std::isfinite(f) && fp > 0.0 ? t - f / fp : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == t) break;  // bracket exhausted double precision
        t = next;
    }

    // Phase 2: polish in extended precision until the residual target holds.
    long double tl = t;
    for (int iter = 0; iter < 60; ++iter) {
        const long double f = diagonal_cost_dt_ld(theta1, theta2, tl, beta);
        if (f > -1e-13L && f < 1e-13L) {
            const double out = std::clamp(static_cast<double>(tl), lo0, hi0);
            return out;
        }
        const double td = std::clamp(static_cast<double>(tl), lo, hi);
        const double fp = diagonal_cost_dtt(DiagonalParam(theta1, theta2, td), beta);
        if (!(fp > 0.0) || !std::isfinite(static_cast<double>(f))) break;
        long double next = tl - f / fp;
        if (!(next > lo && next < hi)) next = 0.5L * (static_cast<long double>(lo) + hi);
        if (next == tl) break;
        tl = next;
    }
    throw std::runtime_error("solve_critical_mass: no convergence after 200 iterations");
}

double equilibrium_cdf(double theta1, double theta2, double beta) {
    const double th1 = std::clamp(theta1, 0.0, 1.0);
    const double th2 = std::clamp(theta2, 0.0, 1.0);
    if (std::abs(beta) < 1e-6) {
        // second-order accurate; the linear coefficient is th1 th2 (1-th1)(1-th2)/2
        return th1 * th2 * (1.0 + 0.5 * beta * (1.0 - th1) * (1.0 - th2));
    }
    return -log_one_minus_u(th1, th2, beta) / beta;
}

double equilibrium_density(double x, double y, double beta) {
    const double xc = std::clamp(x, 0.0, 1.0);
    const double yc = std::clamp(y, 0.0, 1.0);
    if (beta == 0.0) return 1.0;
    return std::exp(-beta * (xc + yc) - log_g(beta) - 2.0 * log_one_minus_u(xc, yc, beta));
}

double equilibrium_cdf_dtheta2(double theta1, double theta2, double beta) {
    const double th1 = std::clamp(theta1, 0.0, 1.0);
    const double th2 = std::clamp(theta2, 0.0, 1.0);
    if (th1 == 0.0) return 0.0;
    if (beta == 0.0) return th1;
    return std::exp(-beta * th2 + std::log(th1) + log_g(beta * th1) - log_g(beta) -
                    log_one_minus_u(th1, th2, beta));
}

double two_square_lower_bound(double t1, double t2, double theta, double beta,
                              const PressureEvaluator& rule) {
    if (!(t1 > 0.0 && t2 > 0.0))
        throw std::invalid_argument("two_square_lower_bound: t1, t2 must be positive");
    if (!(theta > 0.0 && theta <= 1.0))
        throw std::invalid_argument("two_square_lower_bound: theta must lie in (0,1]");
    return -(t1 + t2) * std::log(theta) + rule.t_pressure(t1, beta) + rule.t_pressure(t2, beta) -
           rule.t_pressure(t1 + t2, beta);
}

double two_square_lower_bound(double t1, double t2, double theta, double beta) {
    return two_square_lower_bound(t1, t2, theta, beta, default_pressure());
}

namespace {

void require_counts(const SplitCounts& c, int n) {
    if (n < 2) throw std::invalid_argument("four-square probability: n must be >= 2");
    if (c.n11 < 0 || c.n12 < 0 || c.n21 < 0 || c.n22 < 0 || c.total() != n)
        throw std::invalid_argument("four-square probability: counts must be >= 0 and sum to n");
}

}  // namespace

double log_four_square_probability(const SplitCounts& c, double theta1, double theta2, int n,
                                   double beta) {
    require_counts(c, n);
    require_open_unit(theta1, "theta1");
    require_open_unit(theta2, "theta2");
    const double q = std::exp(-beta / (n - 1));
    const auto lrf = [&](std::int64_t a) {
        return log_reduced_q_factorial(static_cast<int>(a), q).logmag;
    };
    const double a11 = theta1 * theta2;
    const double a12 = theta1 * (1.0 - theta2);
    const double a21 = (1.0 - theta1) * theta2;
    const double a22 = (1.0 - theta1) * (1.0 - theta2);

    double lp = std::lgamma(n + 1.0) - std::lgamma(c.n11 + 1.0) - std::lgamma(c.n12 + 1.0) -
                std::lgamma(c.n21 + 1.0) - std::lgamma(c.n22 + 1.0);
    lp += c.n11 * std::log(a11) + c.n12 * std::log(a12) + c.n21 * std::log(a21) +
          c.n22 * std::log(a22);
    lp += static_cast<double>(c.n12) * static_cast<double>(c.n21) * std::log(q);
    lp += lrf(c.n11 + c.n12) + lrf(c.n11 + c.n21) + lrf(c.n12 + c.n22) + lrf(c.n21 + c.n22);
    lp -= lrf(c.n11) + lrf(c.n12) + lrf(c.n21) + lrf(c.n22) + lrf(n);
    return lp;
}

double four_square_probability(const SplitCounts& c, double theta1, double theta2, int n,
                               double beta) {
    return std::exp(log_four_square_probability(c, theta1, theta2, n, beta));
}

FourSquareEnumerator::FourSquareEnumerator(int n, double beta) : n_(n), beta_(beta) {
    if (n < 2 || n > 9)
        throw std::invalid_argument("FourSquareEnumerator: n must be in [2,9], got " +
                                    std::to_string(n));
    const std::size_t side = static_cast<std::size_t>(n) + 1;
    weight_.assign(side * side * side, 0.0L);
    const long double neg_c = -static_cast<long double>(beta) / (n - 1);  // ln q

    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 1);
    // joint[a][b] = #{k <= a : pi_k <= b}, built incrementally per permutation
    std::vector<int> joint(side * side, 0);
    do {
        int inv = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (perm[static_cast<std::size_t>(i)] > perm[static_cast<std::size_t>(j)]) ++inv;
        const long double w = std::exp(neg_c * inv);
        total_weight_ += w;
        for (int a = 1; a <= n; ++a) {
            const int v = perm[static_cast<std::size_t>(a - 1)];
            for (int b = 0; b <= n; ++b)
                joint[static_cast<std::size_t>(a) * side + static_cast<std::size_t>(b)] =
                    joint[static_cast<std::size_t>(a - 1) * side + static_cast<std::size_t>(b)] +
                    (v <= b ? 1 : 0);
        }
        for (int a = 0; a <= n; ++a)
            for (int b = 0; b <= n; ++b) {
                const int c = joint[static_cast<std::size_t>(a) * side + static_cast<std::size_t>(b)];
                weight_[(static_cast<std::size_t>(a) * side + static_cast<std::size_t>(b)) * side +
                        static_cast<std::size_t>(c)] += w;
            }
    } while (std::next_permutation(perm.begin(), perm.end()));
}

double FourSquareEnumerator::probability(const SplitCounts& c, double theta1,
                                         double theta2) const {
    require_counts(c, n_);
    require_open_unit(theta1, "theta1");
    require_open_unit(theta2, "theta2");
    const int a = static_cast<int>(c.n11 + c.n12);  // x-coordinates at or below theta1
    const int b = static_cast<int>(c.n11 + c.n21);  // y-coordinates at or below theta2
    const std::size_t side = static_cast<std::size_t>(n_) + 1;
    const long double cond =
        weight_[(static_cast<std::size_t>(a) * side + static_cast<std::size_t>(b)) * side +
                static_cast<std::size_t>(c.n11)] /
        total_weight_;
    const double log_binom_a = std::lgamma(n_ + 1.0) - std::lgamma(a + 1.0) -
                               std::lgamma(n_ - a + 1.0) + a * std::log(theta1) +
                               (n_ - a) * std::log1p(-theta1);
    const double log_binom_b = std::lgamma(n_ + 1.0) - std::lgamma(b + 1.0) -
                               std::lgamma(n_ - b + 1.0) + b * std::log(theta2) +
                               (n_ - b) * std::log1p(-theta2);
    return static_cast<double>(cond) * std::exp(log_binom_a + log_binom_b);
}

double four_square_probability_enumerated(const SplitCounts& counts, double theta1,
                                          double theta2, int n, double beta) {
    return FourSquareEnumerator(n, beta).probability(counts, theta1, theta2);
}

}  // namespace mallows
