#include "mallows/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mallows {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Fenwick tree over slot occupancies supporting "k-th free slot" queries.
class SlotTree {
public:
    explicit SlotTree(int n) : n_(n), tree_(static_cast<std::size_t>(n) + 1, 0) {
        for (int i = 1; i <= n; ++i) {
            tree_[static_cast<std::size_t>(i)] += 1;
            const int j = i + (i & -i);
            if (j <= n) tree_[static_cast<std::size_t>(j)] += tree_[static_cast<std::size_t>(i)];
        }
        log2_ = 1;
        while ((1 << log2_) <= n) ++log2_;
    }

    // Smallest 1-based slot index whose free-count prefix reaches k; marks it used.
    int take_kth(int k) {
        int pos = 0;
        for (int step = 1 << log2_; step > 0; step >>= 1) {
            const int next = pos + step;
            if (next <= n_ && tree_[static_cast<std::size_t>(next)] < k) {
                pos = next;
                k -= tree_[static_cast<std::size_t>(next)];
            }
        }
        const int slot = pos + 1;
        for (int i = slot; i <= n_; i += i & -i) tree_[static_cast<std::size_t>(i)] -= 1;
        return slot;
    }

private:
    int n_;
    int log2_;
    std::vector<int> tree_;
};

// Displacement j in {0..k-1} with P(j) proportional to q^j, by CDF inversion.
int truncated_geometric(int k, double q, RandomStream& rng) {
    if (k <= 1) return 0;
    if (q == 1.0) return rng.uniform_int(k);
    const double lq = std::log(q);
    const double u = rng.uniform01();
    const double x = 1.0 + u * std::expm1(k * lq);  // = 1 - u(1 - q^k)
    const double j = std::ceil(std::log(x) / lq) - 1.0;
    if (!(j > 0.0)) return 0;
    if (!(j < k - 1)) return k - 1;
    return static_cast<int>(j);
}

// n iid uniforms, sorted ascending, with duplicate values resampled.
std::vector<double> sorted_distinct_uniforms(int n, RandomStream& rng) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& u : v) u = rng.uniform01();
    std::sort(v.begin(), v.end());
    for (bool clean = false; !clean;) {
        clean = true;
        for (std::size_t i = 1; i < v.size(); ++i) {
            if (v[i] == v[i - 1]) {
                v[i] = rng.uniform01();
                clean = false;
            }
        }
        if (!clean) std::sort(v.begin(), v.end());
    }
    return v;
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

RandomStream RandomStream::child(std::uint64_t index) const {
    return RandomStream(splitmix64(seed_ + 0x9E3779B97F4A7C15ULL * (index + 1)));
}

int RandomStream::uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t r;
    do {
        r = next_u64();
    } while (r >= limit);
    return static_cast<int>(r % bound);
}

Permutation sample_mallows(int n, double q, RandomStream& rng) {
    if (n < 1) throw std::invalid_argument("sample_mallows: n must be >= 1");
    if (!(q > 0.0)) throw std::invalid_argument("sample_mallows: q must be positive");
    // Position (from the left) of item k at insertion time.
    std::vector<int> pos(static_cast<std::size_t>(n) + 1);
    for (int k = 1; k <= n; ++k) pos[static_cast<std::size_t>(k)] = k - truncated_geometric(k, q, rng);
    // Replay backwards: at step k the earlier items occupy the remaining
    // free slots in order, so item k lands in the pos[k]-th free slot.
    std::vector<int> image(static_cast<std::size_t>(n));
    SlotTree slots(n);
    for (int k = n; k >= 1; --k) {
        const int slot = slots.take_kth(pos[static_cast<std::size_t>(k)]);
        image[static_cast<std::size_t>(slot - 1)] = k;
    }
    return Permutation(std::move(image));
}

PointConfiguration sample_configuration(int n, double beta, RandomStream& rng) {
    if (n < 2) throw std::invalid_argument("sample_configuration: n must be >= 2");
    const double q = std::exp(-beta / (n - 1));
    const std::vector<double> xs = sorted_distinct_uniforms(n, rng);
    const std::vector<double> ys = sorted_distinct_uniforms(n, rng);
    const Permutation pi = sample_mallows(n, q, rng);

    PointConfiguration cfg;
    cfg.points.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const std::size_t i = static_cast<std::size_t>(k);
        cfg.points[i] = Point{xs[i], ys[static_cast<std::size_t>(pi[k] - 1)]};
    }
    // Uniform relabeling restores exchangeability of the returned tuple.
    for (int k = n - 1; k > 0; --k)
        std::swap(cfg.points[static_cast<std::size_t>(k)],
                  cfg.points[static_cast<std::size_t>(rng.uniform_int(k + 1))]);
    return cfg;
}

SplitCounts four_square_counts(const PointConfiguration& cfg, double theta1, double theta2) {
    if (!(theta1 > 0.0 && theta1 < 1.0 && theta2 > 0.0 && theta2 < 1.0))
        throw std::invalid_argument("four_square_counts: thetas must lie in (0,1)");
    SplitCounts c;
    for (const Point& p : cfg.points) {
        const bool left = p.x <= theta1;
        const bool low = p.y <= theta2;
        if (left && low)
            ++c.n11;
        else if (left)
            ++c.n12;
        else if (low)
            ++c.n21;
        else
            ++c.n22;
    }
    return c;
}

double empirical_cdf_at(const PointConfiguration& cfg, double theta1, double theta2) {
    if (cfg.size() == 0) throw std::invalid_argument("empirical_cdf_at: empty configuration");
    if (!(theta1 >= 0.0 && theta1 <= 1.0 && theta2 >= 0.0 && theta2 <= 1.0))
        throw std::invalid_argument("empirical_cdf_at: thetas must lie in [0,1]");
    std::int64_t n11 = 0;
    for (const Point& p : cfg.points)
        if (p.x <= theta1 && p.y <= theta2) ++n11;
    return static_cast<double>(n11) / cfg.size();
}

}  // namespace mallows
