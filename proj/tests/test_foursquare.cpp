#include "mallows/foursquare.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"

using namespace mallows;

namespace {

SplitCounts counts_of(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
    return SplitCounts{a, b, c, d};
}

double multinomial_prob(const SplitCounts& c, double th1, double th2) {
    const double n = static_cast<double>(c.total());
    double lp = std::lgamma(n + 1.0) - std::lgamma(c.n11 + 1.0) - std::lgamma(c.n12 + 1.0) -
                std::lgamma(c.n21 + 1.0) - std::lgamma(c.n22 + 1.0);
    lp += c.n11 * std::log(th1 * th2) + c.n12 * std::log(th1 * (1 - th2)) +
          c.n21 * std::log((1 - th1) * th2) + c.n22 * std::log((1 - th1) * (1 - th2));
    return std::exp(lp);
}

// All integer 4-tuples summing to n.
std::vector<SplitCounts> all_splits(int n) {
    std::vector<SplitCounts> out;
    for (int a = 0; a <= n; ++a)
        for (int b = 0; a + b <= n; ++b)
            for (int c = 0; a + b + c <= n; ++c) out.push_back(counts_of(a, b, c, n - a - b - c));
    return out;
}

}  // namespace

TEST_CASE("FourSplit and DiagonalParam validation") {
    CHECK_THROWS_AS(FourSplit(0.0, 0.5, 0.25, 0.25, 0.25, 0.25), std::invalid_argument);
    CHECK_THROWS_AS(FourSplit(0.5, 1.0, 0.25, 0.25, 0.25, 0.25), std::invalid_argument);
    CHECK_THROWS_AS(FourSplit(0.5, 0.5, 0.3, 0.3, 0.3, 0.3), std::invalid_argument);
    CHECK_THROWS_AS(FourSplit(0.5, 0.5, -0.1, 0.4, 0.4, 0.3), std::invalid_argument);
    CHECK_NOTHROW(FourSplit(0.5, 0.5, 1.0, 0.0, 0.0, 0.0));

    CHECK(DiagonalParam::t_lower(0.7, 0.8) == doctest::Approx(0.5));
    CHECK(DiagonalParam::t_upper(0.7, 0.8) == doctest::Approx(0.7));
    CHECK_THROWS_AS(DiagonalParam(0.3, 0.4, 0.35), std::invalid_argument);
    const DiagonalParam d(0.3, 0.4, 0.2);
    CHECK(d.t12() == doctest::Approx(0.1));
    CHECK(d.t21() == doctest::Approx(0.2));
    CHECK(d.t22() == doctest::Approx(0.5));
}

TEST_CASE("four_square_cost at beta = 0 is a KL divergence") {
    const double th1 = 0.35, th2 = 0.6;
    const double areas[4] = {th1 * th2, th1 * (1 - th2), (1 - th1) * th2, (1 - th1) * (1 - th2)};
    // at the area split the KL divergence vanishes
    CHECK(four_square_cost(FourSplit(th1, th2, areas[0], areas[1], areas[2], areas[3]), 0.0) ==
          doctest::Approx(0.0).epsilon(1e-14));

    const FourSplit s(th1, th2, 0.4, 0.2, 0.3, 0.1);
    double kl = 0.0;
    const double ts[4] = {0.4, 0.2, 0.3, 0.1};
    for (int i = 0; i < 4; ++i) kl += ts[i] * std::log(ts[i] / areas[i]);
    CHECK(four_square_cost(s, 0.0) == doctest::Approx(kl).epsilon(1e-13));

    // vanishing fractions enter with 0 ln 0 = 0
    CHECK(std::isfinite(four_square_cost(FourSplit(0.5, 0.5, 0.0, 0.5, 0.5, 0.0), 0.0)));
    CHECK(std::isfinite(four_square_cost(FourSplit(0.5, 0.5, 0.0, 0.5, 0.5, 0.0), 2.0)));
}

TEST_CASE("cost vanishes at the equilibrium mass") {
    const double r = equilibrium_cdf(0.5, 0.5, 2.0);
    CHECK(std::abs(four_square_cost(FourSplit(0.5, 0.5, r, 0.5 - r, 0.5 - r, r), 2.0)) <= 1e-8);
    CHECK(std::abs(diagonal_cost(DiagonalParam(0.5, 0.5, r), 2.0)) <= 1e-8);
}

TEST_CASE("diagonal cost is finite at the interval endpoints and convex inside") {
    for (double beta : {-4.0, 0.0, 3.0}) {
        for (auto [th1, th2] : {std::pair{0.3, 0.4}, std::pair{0.7, 0.8}, std::pair{0.5, 0.5}}) {
            const double lo = DiagonalParam::t_lower(th1, th2);
            const double hi = DiagonalParam::t_upper(th1, th2);
            CHECK(std::isfinite(diagonal_cost(DiagonalParam(th1, th2, lo), beta)));
            CHECK(std::isfinite(diagonal_cost(DiagonalParam(th1, th2, hi), beta)));
            // positive second differences on an interior grid
            const int pts = 50;
            const double pad = (hi - lo) / 100.0;
            std::vector<double> vals;
            for (int k = 0; k < pts; ++k) {
                const double t = lo + pad + (hi - lo - 2 * pad) * k / (pts - 1.0);
                vals.push_back(diagonal_cost(DiagonalParam(th1, th2, t), beta));
            }
            for (std::size_t k = 1; k + 1 < vals.size(); ++k)
                CHECK(vals[k - 1] - 2.0 * vals[k] + vals[k + 1] > 0.0);
        }
    }
}

TEST_CASE("the critical mass is a strict minimum") {
    for (double beta : {-5.0, -1.0, 2.0, 6.0}) {
        for (auto [th1, th2] : {std::pair{0.3, 0.6}, std::pair{0.5, 0.5}, std::pair{0.8, 0.7}}) {
            const double r = equilibrium_cdf(th1, th2, beta);
            const double at_r = diagonal_cost(DiagonalParam(th1, th2, r), beta);
            for (double delta : {1e-3, 1e-2}) {
                for (double sign : {-1.0, 1.0}) {
                    const double t = r + sign * delta;
                    if (t <= DiagonalParam::t_lower(th1, th2) ||
                        t >= DiagonalParam::t_upper(th1, th2))
                        continue;
                    CHECK(diagonal_cost(DiagonalParam(th1, th2, t), beta) > at_r);
                }
            }
        }
    }
}

TEST_CASE("beta = 0 minimizer is the product mass") {
    const double th1 = 0.45, th2 = 0.65;
    CHECK(solve_critical_mass(th1, th2, 0.0) == doctest::Approx(th1 * th2).epsilon(1e-13));
    CHECK(std::abs(diagonal_cost_dt(DiagonalParam(th1, th2, th1 * th2), 0.0)) < 1e-13);
}

TEST_CASE("derivative matches finite differences of the cost") {
    for (double beta : {-3.0, 0.0, 2.0, 5.0}) {
        const double th1 = 0.4, th2 = 0.7;
        const double lo = DiagonalParam::t_lower(th1, th2);
        const double hi = DiagonalParam::t_upper(th1, th2);
        const double h = 1e-6;
        for (int k = 1; k <= 20; ++k) {
            const double t = lo + (hi - lo) * k / 21.0;
            const double fd = (diagonal_cost(DiagonalParam(th1, th2, t + h), beta) -
                               diagonal_cost(DiagonalParam(th1, th2, t - h), beta)) /
                              (2.0 * h);
            CHECK(std::abs(fd - diagonal_cost_dt(DiagonalParam(th1, th2, t), beta)) < 1e-6);
        }
    }
}

TEST_CASE("second derivative: closed form, limit, and finite differences") {
    // beta = 0 limit is sum of reciprocals
    const DiagonalParam d(0.4, 0.7, 0.3);
    const double recip = 1.0 / 0.3 + 1.0 / 0.1 + 1.0 / 0.4 + 1.0 / 0.2;
    CHECK(diagonal_cost_dtt(d, 0.0) == doctest::Approx(recip).epsilon(1e-12));

    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int rep = 0; rep < 1000; ++rep) {
        const double th1 = 0.05 + 0.9 * unif(gen);
        const double th2 = 0.05 + 0.9 * unif(gen);
        const double lo = DiagonalParam::t_lower(th1, th2);
        const double hi = DiagonalParam::t_upper(th1, th2);
        const double t = lo + (hi - lo) * (0.01 + 0.98 * unif(gen));
        const double beta = -6.0 + 12.0 * unif(gen);
        CHECK(diagonal_cost_dtt(DiagonalParam(th1, th2, t), beta) > 0.0);
    }

    const double h = 1e-4;
    for (double beta : {-2.0, 1.5}) {
        for (double t : {0.2, 0.31}) {
            const double fd = (diagonal_cost(DiagonalParam(0.4, 0.7, t + h), beta) -
                               2.0 * diagonal_cost(DiagonalParam(0.4, 0.7, t), beta) +
                               diagonal_cost(DiagonalParam(0.4, 0.7, t - h), beta)) /
                              (h * h);
            CHECK(std::abs(fd - diagonal_cost_dtt(DiagonalParam(0.4, 0.7, t), beta)) < 1e-4);
        }
    }
}

TEST_CASE("derivative sentinels at the endpoints") {
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(diagonal_cost_dt(DiagonalParam(0.4, 0.7, DiagonalParam::t_lower(0.4, 0.7)), 1.0) == -inf);
    CHECK(diagonal_cost_dt(DiagonalParam(0.4, 0.7, DiagonalParam::t_upper(0.4, 0.7)), 1.0) == inf);
    CHECK(diagonal_cost_dtt(DiagonalParam(0.4, 0.7, 0.4), 1.0) == inf);
}

TEST_CASE("critical mass solver") {
    // frozen digits, cross-checked against the closed form and a quad-width
    // evaluation during development
    CHECK(solve_critical_mass(0.5, 0.5, 2.0) ==
          doctest::Approx(0.31005725347913876).epsilon(1e-12));

    // symmetric under swapping the thetas
    for (double beta : {-4.0, 1.0, 6.0}) {
        const double a = solve_critical_mass(0.3, 0.8, beta);
        const double b = solve_critical_mass(0.8, 0.3, beta);
        CHECK(std::abs(a - b) <= 1e-14);
    }

    // solver equals the closed form over a grid; the re-evaluated derivative
    // at the root is zero up to the double-precision floor near endpoints
    for (int i = 1; i <= 9; ++i)
        for (int j = 1; j <= 9; ++j)
            for (double beta : {-6.0, -2.0, 0.0, 1.0, 4.0}) {
                const double th1 = i / 10.0, th2 = j / 10.0;
                const double ts = solve_critical_mass(th1, th2, beta);
                const double tc = equilibrium_cdf(th1, th2, beta);
                CHECK(std::abs(ts - tc) <= 1e-12);
                CHECK(std::abs(diagonal_cost_dt(DiagonalParam(th1, th2, ts), beta)) < 1e-10);
            }
}

TEST_CASE("equilibrium cdf limits and boundary") {
    // beta -> 0 is the product
    CHECK(equilibrium_cdf(0.3, 0.8, 0.0) == doctest::Approx(0.24).epsilon(1e-15));
    // series branch meets the direct formula at the seam
    for (double beta : {9.9e-7, -9.9e-7, 1.01e-6, -1.01e-6}) {
        const double direct =
            -std::log1p(-(1 - std::exp(-beta * 0.37)) * (1 - std::exp(-beta * 0.61)) /
                        (1 - std::exp(-beta))) /
            beta;
        CHECK(equilibrium_cdf(0.37, 0.61, beta) == doctest::Approx(direct).epsilon(1e-9));
    }
    // uniform marginals: R(theta, 1) = R(1, theta) = theta
    for (double th : {0.1, 0.5, 0.9}) {
        for (double beta : {-7.0, -1.0, 2.0, 40.0}) {
            CHECK(std::abs(equilibrium_cdf(th, 1.0, beta) - th) <= 1e-14);
            CHECK(std::abs(equilibrium_cdf(1.0, th, beta) - th) <= 1e-14);
            CHECK(equilibrium_cdf(th, 0.0, beta) == 0.0);
        }
    }
    // extreme temperatures approach the Frechet bounds
    CHECK(std::abs(equilibrium_cdf(0.4, 0.6, 1000.0) - 0.4) < 2e-2);
    CHECK(std::abs(equilibrium_cdf(0.7, 0.8, 1000.0) - 0.7) < 2e-2);
    CHECK(std::abs(equilibrium_cdf(0.4, 0.5, -1000.0) - 0.0) < 2e-2);
    CHECK(std::abs(equilibrium_cdf(0.7, 0.8, -1000.0) - 0.5) < 2e-2);
    // interior membership over a grid
    for (int i = 1; i <= 9; ++i)
        for (int j = 1; j <= 9; ++j)
            for (double beta : {-6.0, -3.0, 0.0, 3.0, 6.0}) {
                const double r = equilibrium_cdf(i / 10.0, j / 10.0, beta);
                CHECK(r > DiagonalParam::t_lower(i / 10.0, j / 10.0));
                CHECK(r < DiagonalParam::t_upper(i / 10.0, j / 10.0));
            }
}

TEST_CASE("equilibrium density") {
    CHECK(equilibrium_density(0.3, 0.9, 0.0) == 1.0);
    for (double beta : {-3.0, 0.5, 2.0})
        CHECK(equilibrium_density(0.0, 0.0, beta) ==
              doctest::Approx(beta / (1.0 - std::exp(-beta))).epsilon(1e-12));
    CHECK(equilibrium_density(0.0, 0.0, 2.0) == doctest::Approx(2.3130352854993312).epsilon(1e-12));
    // exact symmetry in the arguments
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        const double x = unif(gen), y = unif(gen), beta = -8.0 + 16.0 * unif(gen);
        CHECK(equilibrium_density(x, y, beta) == equilibrium_density(y, x, beta));
        CHECK(equilibrium_density(x, y, beta) >= 0.0);
    }
}

TEST_CASE("mixed partial of the cdf") {
    CHECK(equilibrium_cdf_dtheta2(0.0, 0.4, 1.7) == 0.0);
    CHECK(equilibrium_cdf_dtheta2(0.35, 0.4, 0.0) == doctest::Approx(0.35));
    // matches a central finite difference of the cdf in theta2
    const double h = 1e-6;
    for (double beta : {-2.5, 1.0, 4.0}) {
        for (auto [th1, th2] : {std::pair{0.3, 0.5}, std::pair{0.8, 0.2}}) {
            const double fd =
                (equilibrium_cdf(th1, th2 + h, beta) - equilibrium_cdf(th1, th2 - h, beta)) /
                (2.0 * h);
            CHECK(std::abs(fd - equilibrium_cdf_dtheta2(th1, th2, beta)) < 1e-6);
        }
    }
    // beta -> 0 recovers the derivative of the product
    CHECK(equilibrium_cdf_dtheta2(0.6, 0.3, 1e-9) == doctest::Approx(0.6).epsilon(1e-6));
}

TEST_CASE("two-square lower bound values") {
    // beta = 0: only the support penalty -(t1+t2) ln(theta) remains
    CHECK(two_square_lower_bound(0.3, 0.4, 1.0, 0.0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(two_square_lower_bound(0.3, 0.4, 0.5, 0.0) ==
          doctest::Approx(0.7 * std::log(2.0)).epsilon(1e-13));
    // symmetric in t1 <-> t2
    CHECK(two_square_lower_bound(0.2, 0.6, 0.5, 1.7) ==
          two_square_lower_bound(0.6, 0.2, 0.5, 1.7));
    CHECK_THROWS_AS(two_square_lower_bound(0.0, 0.5, 0.5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(two_square_lower_bound(0.1, 0.5, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("discrete four-square probability: degenerate cases") {
    // beta = 0 is multinomial for all counts
    for (int n : {2, 5}) {
        for (const SplitCounts& c : all_splits(n)) {
            CHECK(four_square_probability(c, 0.4, 0.6, n, 0.0) ==
                  doctest::Approx(multinomial_prob(c, 0.4, 0.6)).epsilon(1e-12));
        }
    }
    // all mass in one quadrant: the q-corrections collapse to 1
    for (double beta : {-3.0, 2.0}) {
        const SplitCounts c = counts_of(6, 0, 0, 0);
        CHECK(four_square_probability(c, 0.4, 0.6, 6, beta) ==
              doctest::Approx(multinomial_prob(c, 0.4, 0.6)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(four_square_probability(counts_of(1, 1, 1, 1), 0.4, 0.6, 5, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(four_square_probability(counts_of(-1, 2, 2, 2), 0.4, 0.6, 5, 1.0),
                    std::invalid_argument);
}

TEST_CASE("enumeration oracle: totals and multinomial limit") {
    for (int n : {3, 5}) {
        for (double q : {0.25, 1.0, 4.0}) {
            const double beta = -(n - 1) * std::log(q);
            const FourSquareEnumerator oracle(n, beta);
            double total = 0.0;
            for (const SplitCounts& c : all_splits(n)) total += oracle.probability(c, 0.4, 0.6);
            CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    const FourSquareEnumerator flat(4, 0.0);
    for (const SplitCounts& c : all_splits(4))
        CHECK(flat.probability(c, 0.3, 0.7) ==
              doctest::Approx(multinomial_prob(c, 0.3, 0.7)).epsilon(1e-12));
    CHECK_THROWS_AS(FourSquareEnumerator(10, 1.0), std::invalid_argument);
}

TEST_CASE("formula matches the enumeration oracle") {
    // the acceptance suite runs the full n <= 8 sweep; keep n <= 6 here
    for (int n : {3, 4, 5, 6}) {
        for (double q : {0.25, 1.0, 4.0}) {
            const double beta = -(n - 1) * std::log(q);
            const FourSquareEnumerator oracle(n, beta);
            for (auto [th1, th2] : {std::pair{0.4, 0.6}, std::pair{0.5, 0.5}}) {
                for (const SplitCounts& c : all_splits(n)) {
                    const double fo = oracle.probability(c, th1, th2);
                    const double ff = four_square_probability(c, th1, th2, n, beta);
                    CHECK(std::abs(ff - fo) <= 1e-12 * fo);
                }
            }
        }
    }
}

TEST_CASE("discrete probabilities converge to the continuum cost") {
    const double th1 = 0.5, th2 = 0.5, beta = 2.0;
    const double ts[4] = {0.3, 0.2, 0.2, 0.3};
    const double cost = four_square_cost(FourSplit(th1, th2, ts[0], ts[1], ts[2], ts[3]), beta);
    double prev_gap = 1e9;
    for (int n : {100, 1000, 10000}) {
        // nearest-integer counts, remainder pushed into n11
        std::int64_t c[4];
        for (int k = 0; k < 4; ++k) c[k] = std::llround(n * ts[k]);
        c[0] += n - (c[0] + c[1] + c[2] + c[3]);
        const double lp =
            log_four_square_probability(counts_of(c[0], c[1], c[2], c[3]), th1, th2, n, beta);
        const double gap = std::abs(-lp / n - cost);
        CHECK(gap <= 2.0 * std::log(static_cast<double>(n)) / n);
        CHECK(gap < prev_gap);
        prev_gap = gap;
    }
}
