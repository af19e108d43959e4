#include "mallows/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace mallows {

namespace {

constexpr double kMassTolerance = 1e-12;

// Padded cumulative sums: cum(i,j) = total mass of cells (k,l) with k < i, l < j.
class PrefixSums {
public:
    explicit PrefixSums(const GridMeasure& mu) : m_(mu.resolution()) {
        const std::size_t w = static_cast<std::size_t>(m_) + 1;
        cum_.assign(w * w, 0.0);
        for (int i = 0; i < m_; ++i)
            for (int j = 0; j < m_; ++j)
                at(i + 1, j + 1) = mu.cell(i, j) + at(i, j + 1) + at(i + 1, j) - at(i, j);
    }

    double operator()(int i, int j) const { return cum_[idx(i, j)]; }

    // Exact CDF V(x,y) of the piecewise-constant-density measure.
    double eval(const GridMeasure& mu, double x, double y) const {
        x = std::clamp(x, 0.0, 1.0);
        y = std::clamp(y, 0.0, 1.0);
        const double fx = x * m_;
        const double fy = y * m_;
        const int i = std::min(static_cast<int>(fx), m_ - 1);
        const int j = std::min(static_cast<int>(fy), m_ - 1);
        const double u = fx - i;
        const double v = fy - j;
        return (*this)(i, j) + u * ((*this)(i + 1, j) - (*this)(i, j)) +
               v * ((*this)(i, j + 1) - (*this)(i, j)) + u * v * mu.cell(i, j);
    }

private:
    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(i) * (static_cast<std::size_t>(m_) + 1) +
               static_cast<std::size_t>(j);
    }
    double& at(int i, int j) { return cum_[idx(i, j)]; }

    int m_;
    std::vector<double> cum_;
};

std::vector<double> axis_masses(const GridMeasure& mu, bool along_x) {
    const int m = mu.resolution();
    std::vector<double> w(static_cast<std::size_t>(m), 0.0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            w[static_cast<std::size_t>(along_x ? i : j)] += mu.cell(i, j);
    return w;
}

MarginalCDF cdf_from_masses(const std::vector<double>& w) {
    std::vector<double> f(w.size() + 1, 0.0);
    for (std::size_t k = 0; k < w.size(); ++k) f[k + 1] = f[k] + w[k];
    if (std::abs(f.back() - 1.0) > 1e-9)
        throw std::invalid_argument("marginal does not sum to one");
    // pin the endpoint and absorb any upward round-off of the partial sums
    f.back() = 1.0;
    for (std::size_t k = w.size(); k-- > 0;) f[k] = std::min(f[k], f[k + 1]);
    return MarginalCDF(std::move(f));
}

}  // namespace

GridMeasure::GridMeasure(int m, std::vector<double> mass) : m_(m), mass_(std::move(mass)) {
    if (m < 1) throw std::invalid_argument("GridMeasure: resolution must be >= 1");
    if (mass_.size() != static_cast<std::size_t>(m) * static_cast<std::size_t>(m))
        throw std::invalid_argument("GridMeasure: mass array must have m*m entries");
    double total = 0.0;
    for (double p : mass_) {
        if (!(p >= 0.0)) throw std::invalid_argument("GridMeasure: negative or NaN cell mass");
        total += p;
    }
    if (std::abs(total - 1.0) > kMassTolerance)
        throw std::invalid_argument("GridMeasure: total mass " + std::to_string(total) +
                                    " is not 1 within 1e-12");
}

GridMeasure GridMeasure::normalized(int m, std::vector<double> mass) {
    double total = 0.0;
    for (double& p : mass) {
        if (p < 0.0) p = 0.0;
        total += p;
    }
    if (!(total > 0.0)) throw std::invalid_argument("GridMeasure: total mass must be positive");
    for (double& p : mass) p /= total;
    return GridMeasure(m, std::move(mass));
}

GridMeasure GridMeasure::uniform(int m) {
    std::vector<double> mass(static_cast<std::size_t>(m) * static_cast<std::size_t>(m),
                             1.0 / (static_cast<double>(m) * m));
    return normalized(m, std::move(mass));
}

MarginalCDF::MarginalCDF(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2) throw std::invalid_argument("MarginalCDF: need at least 2 values");
    if (values_.front() != 0.0 || values_.back() != 1.0)
        throw std::invalid_argument("MarginalCDF: endpoints must be exactly 0 and 1");
    for (std::size_t k = 1; k < values_.size(); ++k)
        if (values_[k] < values_[k - 1])
            throw std::invalid_argument("MarginalCDF: values must be nondecreasing");
}

double MarginalCDF::operator()(double a) const {
    const int m = resolution();
    const double f = std::clamp(a, 0.0, 1.0) * m;
    const int k = std::min(static_cast<int>(f), m - 1);
    const double u = f - k;
    return values_[static_cast<std::size_t>(k)] +
           u * (values_[static_cast<std::size_t>(k) + 1] - values_[static_cast<std::size_t>(k)]);
}

double MarginalCDF::inverse(double x) const {
    const int m = resolution();
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) x = 1.0;
    const auto it = std::lower_bound(values_.begin(), values_.end(), x);
    const int k = static_cast<int>(it - values_.begin());
    if (k == 0) return 0.0;
    const double lo = values_[static_cast<std::size_t>(k) - 1];
    const double hi = values_[static_cast<std::size_t>(k)];
    // lo < x <= hi by minimality, so the segment rises.
    return (k - 1 + (x - lo) / (hi - lo)) / m;
}

bool MarginalCDF::has_flat_band() const {
    for (std::size_t k = 1; k < values_.size(); ++k)
        if (values_[k] == values_[k - 1]) return true;
    return false;
}

double generalized_inverse(const MarginalCDF& f, double x) { return f.inverse(x); }

double relative_entropy(const GridMeasure& mu) {
    const int m = mu.resolution();
    const double m2 = static_cast<double>(m) * m;
    double s = 0.0;
    for (double p : mu.raw())
        if (p > 0.0) s -= p * std::log(p * m2);
    return s;
}

double energy(const GridMeasure& mu) {
    const int m = mu.resolution();
    const PrefixSums cum(mu);
    double discordant = 0.0;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            // mass strictly left & above, plus strictly right & below
            const double la = cum(i, m) - cum(i, j + 1);
            const double rb = cum(m, j) - cum(i + 1, j);
            discordant += mu.cell(i, j) * (la + rb);
        }
    }
    const std::vector<double> wx = axis_masses(mu, true);
    const std::vector<double> wy = axis_masses(mu, false);
    double aligned = 0.0;
    for (double c : wx) aligned += c * c;
    for (double r : wy) aligned += r * r;
    for (double p : mu.raw()) aligned -= p * p;
    return 0.5 * (discordant + 0.5 * aligned);
}

double rate_function(const GridMeasure& mu, double beta, const PressureEvaluator& rule) {
    return -relative_entropy(mu) + beta * energy(mu) + rule.pressure(beta);
}

double rate_function(const GridMeasure& mu, double beta) {
    return rate_function(mu, beta, default_pressure());
}

MarginalCDF marginal_x(const GridMeasure& mu) { return cdf_from_masses(axis_masses(mu, true)); }
MarginalCDF marginal_y(const GridMeasure& mu) { return cdf_from_masses(axis_masses(mu, false)); }

namespace {

// Cell masses from a CDF sampled on the (m+1)x(m+1) grid: mixed differences,
// with round-off clipped and the total rescaled to one.
GridMeasure measure_from_cdf_samples(int m, const std::vector<double>& v) {
    const std::size_t w = static_cast<std::size_t>(m) + 1;
    std::vector<double> mass(static_cast<std::size_t>(m) * static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const std::size_t a = static_cast<std::size_t>(i);
            const std::size_t b = static_cast<std::size_t>(j);
            mass[a * static_cast<std::size_t>(m) + b] =
                v[(a + 1) * w + b + 1] - v[a * w + b + 1] - v[(a + 1) * w + b] + v[a * w + b];
        }
    return GridMeasure::normalized(m, std::move(mass));
}

}  // namespace

GridMeasure standardize(const GridMeasure& mu, bool* had_zero_mass_band) {
    const int m = mu.resolution();
    const MarginalCDF fx = marginal_x(mu);
    const MarginalCDF fy = marginal_y(mu);
    if (had_zero_mass_band) *had_zero_mass_band = fx.has_flat_band() || fy.has_flat_band();

    std::vector<double> xi(static_cast<std::size_t>(m) + 1);
    std::vector<double> yi(static_cast<std::size_t>(m) + 1);
    for (int k = 0; k <= m; ++k) {
        xi[static_cast<std::size_t>(k)] = fx.inverse(static_cast<double>(k) / m);
        yi[static_cast<std::size_t>(k)] = fy.inverse(static_cast<double>(k) / m);
    }

    const PrefixSums cum(mu);
    const std::size_t w = static_cast<std::size_t>(m) + 1;
    std::vector<double> v(w * w);
    for (int a = 0; a <= m; ++a)
        for (int b = 0; b <= m; ++b)
            v[static_cast<std::size_t>(a) * w + static_cast<std::size_t>(b)] =
                cum.eval(mu, xi[static_cast<std::size_t>(a)], yi[static_cast<std::size_t>(b)]);
    return measure_from_cdf_samples(m, v);
}

GridMeasure renormalize(const GridMeasure& nu0, const MarginalCDF& gx, const MarginalCDF& gy) {
    const int m = nu0.resolution();
    if (gx.resolution() != m || gy.resolution() != m)
        throw std::invalid_argument("renormalize: CDF resolution must match the measure");
    const PrefixSums cum(nu0);
    const std::size_t w = static_cast<std::size_t>(m) + 1;
    std::vector<double> v(w * w);
    for (int a = 0; a <= m; ++a)
        for (int b = 0; b <= m; ++b)
            v[static_cast<std::size_t>(a) * w + static_cast<std::size_t>(b)] =
                cum.eval(nu0, gx.at_grid(a), gy.at_grid(b));
    return measure_from_cdf_samples(m, v);
}

double entropy_1d(std::span<const double> weights) {
    const double m = static_cast<double>(weights.size());
    double s = 0.0;
    for (double p : weights)
        if (p > 0.0) s -= p * std::log(p * m);
    return s;
}

double discordance_1d(std::span<const double> first, std::span<const double> second) {
    if (first.size() != second.size())
        throw std::invalid_argument("discordance_1d: size mismatch");
    double below = 0.0;  // running mass of `second` strictly below cell j
    double total = 0.0;
    for (std::size_t j = 0; j < first.size(); ++j) {
        total += first[j] * (below + 0.5 * second[j]);
        below += second[j];
    }
    return total;
}

void write_grid_measure(std::ostream& os, const GridMeasure& mu) {
    const int m = mu.resolution();
    os << "m=" << m << "\n";
    char buf[40];
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", mu.cell(i, j));
            os << (i + 1) << ',' << (j + 1) << ',' << buf << "\n";
        }
}

GridMeasure read_grid_measure(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("m=", 0) != 0)
        throw std::invalid_argument("grid measure file: expected header m=<int>");
    const int m = std::stoi(line.substr(2));
    if (m < 1) throw std::invalid_argument("grid measure file: bad resolution");
    const std::size_t cells = static_cast<std::size_t>(m) * static_cast<std::size_t>(m);
    std::vector<double> mass(cells, -1.0);
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        int i, j;
        char c1, c2;
        double p;
        if (!(row >> i >> c1 >> j >> c2 >> p) || c1 != ',' || c2 != ',')
            throw std::invalid_argument("grid measure file: malformed row '" + line + "'");
        if (i < 1 || i > m || j < 1 || j > m)
            throw std::invalid_argument("grid measure file: cell index out of range");
        const std::size_t idx = static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(m) +
                                static_cast<std::size_t>(j - 1);
        if (mass[idx] >= 0.0)
            throw std::invalid_argument("grid measure file: duplicate cell");
        mass[idx] = p;
        ++rows;
    }
    if (rows != cells) throw std::invalid_argument("grid measure file: missing cells");
    return GridMeasure(m, std::move(mass));
}

}  // namespace mallows
