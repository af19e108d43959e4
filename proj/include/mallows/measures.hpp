#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "mallows/pressure.hpp"

namespace mallows {

/// Probability measure on [0,1]^2 with piecewise-constant density on an
/// m x m grid.  Cell (i,j), 0-based, covers (i/m,(i+1)/m] x (j/m,(j+1)/m]
/// with i along x and j along y.  Immutable after construction.
class GridMeasure {
public:
    /// Validates size, nonnegativity, and |sum - 1| <= 1e-12.
    GridMeasure(int m, std::vector<double> mass);

    /// Clips negative round-off and rescales to total mass one.
    static GridMeasure normalized(int m, std::vector<double> mass);
    static GridMeasure uniform(int m);

    int resolution() const { return m_; }
    double cell(int i, int j) const { return mass_[index(i, j)]; }
    const std::vector<double>& raw() const { return mass_; }

private:
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(m_) +
               static_cast<std::size_t>(j);
    }
    int m_;
    std::vector<double> mass_;
};

/// Grid distribution function: values F(k/m) for k = 0..m with F(0) = 0,
/// F(1) = 1, nondecreasing.  Evaluated as the piecewise-linear interpolant.
class MarginalCDF {
public:
    explicit MarginalCDF(std::vector<double> values);

    int resolution() const { return static_cast<int>(values_.size()) - 1; }
    double at_grid(int k) const { return values_[static_cast<std::size_t>(k)]; }
    const std::vector<double>& values() const { return values_; }

    double operator()(double a) const;

    /// Generalized inverse inf{a : F(a) >= x}; flat (zero-mass) bands
    /// resolve to their left endpoint.
    double inverse(double x) const;

    bool has_flat_band() const;

private:
    std::vector<double> values_;
};

/// S(mu | lambda^2) = -sum p_ij ln(p_ij m^2), with 0 ln 0 = 0; always <= 0.
double relative_entropy(const GridMeasure& mu);

/// E(mu): half the mu x mu probability that two independent points are
/// discordant.  For piecewise-constant densities the cell-pair kernel is
/// exact: 1 for strictly discordant cells, 1/2 for cells sharing a row or
/// a column (or identical), 0 otherwise.  O(m^2) via 2-D prefix sums.
double energy(const GridMeasure& mu);

/// I_beta(mu) = -S(mu) + beta E(mu) + p(beta); nonnegative for grid
/// measures up to quadrature error.
double rate_function(const GridMeasure& mu, double beta);
double rate_function(const GridMeasure& mu, double beta, const PressureEvaluator& rule);

MarginalCDF marginal_x(const GridMeasure& mu);
MarginalCDF marginal_y(const GridMeasure& mu);

double generalized_inverse(const MarginalCDF& f, double x);

/// Pushforward of mu through the generalized inverses of its own marginal
/// CDFs; the result has uniform marginals (the coupling part of mu).
/// If a marginal has a zero-mass band the inverse is resolved by the
/// infimum rule, mass lands on band edges, and *had_zero_mass_band is set.
GridMeasure standardize(const GridMeasure& mu, bool* had_zero_mass_band = nullptr);

/// Measure with nu([0,x] x [0,y]) = nu0([0,gx(x)] x [0,gy(y)]).  When nu0
/// has uniform marginals the output marginals are gx and gy.
GridMeasure renormalize(const GridMeasure& nu0, const MarginalCDF& gx, const MarginalCDF& gy);

/// Relative entropy of a 1-D grid measure given by cell weights.
double entropy_1d(std::span<const double> weights);

/// P(X2 < X1) for independent X1 ~ first, X2 ~ second (1-D grid measures);
/// same-cell pairs contribute 1/2.
double discordance_1d(std::span<const double> first, std::span<const double> second);

/// Serialization: one header line "m=<int>" followed by m^2 rows
/// "i,j,mass" (1-based cells, 17 significant digits; bit-exact round trip).
void write_grid_measure(std::ostream& os, const GridMeasure& mu);
GridMeasure read_grid_measure(std::istream& is);

}  // namespace mallows
