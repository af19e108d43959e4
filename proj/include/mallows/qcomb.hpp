#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace mallows {

/// A real number carried as (sign, ln|value|). Products of q-inversion
/// weights span hundreds of orders of magnitude once n reaches the
/// thousands, so they are never materialized as plain doubles.
struct LogValue {
    int sign = 0;  // -1, 0, +1
    double logmag = -std::numeric_limits<double>::infinity();

    static LogValue from_value(double v);
    static LogValue from_log(double logmag, int sign = 1);

    double value() const;
    LogValue operator*(const LogValue& other) const;
};

/// Bijection of {1,...,n}, stored as the image sequence (pi_1,...,pi_n).
/// The constructor rejects anything that is not a bijection.
class Permutation {
public:
    explicit Permutation(std::vector<int> image);
    static Permutation identity(int n);

    int size() const { return static_cast<int>(image_.size()); }
    /// Value at 0-based position; values are 1-based.
    int operator[](int pos) const { return image_[static_cast<std::size_t>(pos)]; }
    const std::vector<int>& image() const { return image_; }

private:
    std::vector<int> image_;
};

/// Number of pairs i<j with pi_i > pi_j, merge-counted in O(n log n).
std::uint64_t inversion_count(const Permutation& pi);

/// ln [k]_q with [k]_q = (1-q^k)/(1-q).  Stable through q = 1, where the
/// direct ratio is 0/0: near q = 1 the q-integer is expanded as
/// k*(1 + (k-1)(q-1)/2 + (k-1)(k-2)(q-1)^2/6 + ...).
double log_q_integer(int k, double q);

/// ln [n]_q!  (equals ln n! at q = 1).  Rejects n < 0 and q <= 0.
LogValue log_q_factorial(int n, double q);

/// ln([n]_q!/n!), the reduced q-factorial.  Accumulated term by term as
/// ln([k]_q/k) so the two large factorials never cancel.
LogValue log_reduced_q_factorial(int n, double q);

/// ln of the Gaussian binomial [n choose k]_q.  Requires 0 <= k <= n;
/// exactly symmetric under k <-> n-k.
LogValue log_gaussian_binomial(int n, int k, double q);

/// P_{n,q}(pi) = q^{inv(pi)} / [n]_q!, computed in log domain.
double mallows_pmf(const Permutation& pi, double q);

}  // namespace mallows
