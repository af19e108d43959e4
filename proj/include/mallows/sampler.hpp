#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mallows/qcomb.hpp"

namespace mallows {

/// Seedable generator with deterministic child-stream derivation.  Monte
/// Carlo replicas each receive child(i) of a root stream, which makes
/// results independent of scheduling and thread count.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed);

    /// Independent stream derived from this stream's seed and an index.
    RandomStream child(std::uint64_t index) const;

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0,1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on {0,...,n-1} by rejection (unbiased).
    int uniform_int(int n);

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

struct Point {
    double x;
    double y;
};

/// n points of ([0,1]^2)^n with pairwise distinct x's and pairwise
/// distinct y's (ties are a null event and are resampled away).
struct PointConfiguration {
    std::vector<Point> points;
    int size() const { return static_cast<int>(points.size()); }
};

struct SplitCounts {
    std::int64_t n11 = 0;
    std::int64_t n12 = 0;
    std::int64_t n21 = 0;
    std::int64_t n22 = 0;
    std::int64_t total() const { return n11 + n12 + n21 + n22; }
};

/// Exact sample from P_{n,q} by sequential insertion: item k enters at
/// displacement j from the right with probability q^j (1-q)/(1-q^k),
/// so q -> 0 yields the identity.  The insertions are replayed backwards
/// through a rank-indexed Fenwick tree, O(n log n) total.
Permutation sample_mallows(int n, double q, RandomStream& rng);

/// Exact sample of the n-point Gibbs configuration at inverse temperature
/// beta: iid uniform x's, iid uniform sorted y-levels, and a Mallows
/// permutation with q = exp(-beta/(n-1)) linking the ranks.  The returned
/// pairs are uniformly relabeled, so the n points are exchangeable.
PointConfiguration sample_configuration(int n, double beta, RandomStream& rng);

/// Quadrant occupation counts at (theta1, theta2) with the closed-left
/// convention: x <= theta1 and y <= theta2 land in n11.
SplitCounts four_square_counts(const PointConfiguration& cfg, double theta1, double theta2);

/// n11 / n, the empirical joint distribution function at (theta1, theta2).
double empirical_cdf_at(const PointConfiguration& cfg, double theta1, double theta2);

}  // namespace mallows
