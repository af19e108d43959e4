#include "mallows/qcomb.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace mallows {

LogValue LogValue::from_value(double v) {
    if (v == 0.0) return LogValue{};
    return LogValue{v > 0 ? 1 : -1, std::log(std::abs(v))};
}

LogValue LogValue::from_log(double logmag, int sign) {
    if (sign == 0) return LogValue{};
    return LogValue{sign > 0 ? 1 : -1, logmag};
}

double LogValue::value() const { return sign == 0 ? 0.0 : sign * std::exp(logmag); }

LogValue LogValue::operator*(const LogValue& other) const {
    if (sign == 0 || other.sign == 0) return LogValue{};
    return LogValue{sign * other.sign, logmag + other.logmag};
}

Permutation::Permutation(std::vector<int> image) : image_(std::move(image)) {
    const int n = static_cast<int>(image_.size());
    std::vector<char> seen(static_cast<std::size_t>(n) + 1, 0);
    for (int v : image_) {
        if (v < 1 || v > n || seen[static_cast<std::size_t>(v)])
            throw std::invalid_argument("Permutation: image is not a bijection of {1..n}");
        seen[static_cast<std::size_t>(v)] = 1;
    }
}

Permutation Permutation::identity(int n) {
    std::vector<int> img(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) img[static_cast<std::size_t>(i)] = i + 1;
    return Permutation(std::move(img));
}

namespace {

std::uint64_t merge_count(std::vector<int>& a, std::vector<int>& buf, int lo, int hi) {
    if (hi - lo < 2) return 0;
    const int mid = lo + (hi - lo) / 2;
    std::uint64_t inv = merge_count(a, buf, lo, mid) + merge_count(a, buf, mid, hi);
    int i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (a[static_cast<std::size_t>(j)] < a[static_cast<std::size_t>(i)]) {
            inv += static_cast<std::uint64_t>(mid - i);
            buf[static_cast<std::size_t>(k++)] = a[static_cast<std::size_t>(j++)];
        } else {
            buf[static_cast<std::size_t>(k++)] = a[static_cast<std::size_t>(i++)];
        }
    }
    while (i < mid) buf[static_cast<std::size_t>(k++)] = a[static_cast<std::size_t>(i++)];
    while (j < hi) buf[static_cast<std::size_t>(k++)] = a[static_cast<std::size_t>(j++)];
    for (int t = lo; t < hi; ++t) a[static_cast<std::size_t>(t)] = buf[static_cast<std::size_t>(t)];
    return inv;
}

void require_positive_q(double q) {
    if (!(q > 0.0)) throw std::invalid_argument("q must be positive, got " + std::to_string(q));
}

}  // namespace

std::uint64_t inversion_count(const Permutation& pi) {
    std::vector<int> a = pi.image();
    std::vector<int> buf(a.size());
    return merge_count(a, buf, 0, static_cast<int>(a.size()));
}

double log_q_integer(int k, double q) {
    if (k < 1) throw std::invalid_argument("log_q_integer: k must be >= 1");
    require_positive_q(q);
    if (q == 1.0) return std::log(static_cast<double>(k));
    const double d = q - 1.0;
    if (std::abs(d) < 1e-8) {
        const double corr = 0.5 * (k - 1) * d * (1.0 + (k - 2) * d / 3.0);
        return std::log(static_cast<double>(k)) + std::log1p(corr);
    }
    // [k]_q = expm1(k ln q)/expm1(ln q); both factors keep full relative
    // accuracy for any q > 0, q != 1.
    const double lq = std::log(q);
    return std::log(std::abs(std::expm1(k * lq))) - std::log(std::abs(std::expm1(lq)));
}

LogValue log_q_factorial(int n, double q) {
    if (n < 0) throw std::invalid_argument("log_q_factorial: n must be >= 0");
    require_positive_q(q);
    double s = 0.0;
    for (int k = 2; k <= n; ++k) s += log_q_integer(k, q);
    return LogValue::from_log(s);
}

LogValue log_reduced_q_factorial(int n, double q) {
    if (n < 0) throw std::invalid_argument("log_reduced_q_factorial: n must be >= 0");
    require_positive_q(q);
    double s = 0.0;
    for (int k = 2; k <= n; ++k)
        s += log_q_integer(k, q) - std::log(static_cast<double>(k));
    return LogValue::from_log(s);
}

LogValue log_gaussian_binomial(int n, int k, double q) {
    if (k < 0 || k > n) throw std::invalid_argument("log_gaussian_binomial: need 0 <= k <= n");
    require_positive_q(q);
    // Ordering the two subtractions by min/max makes the k <-> n-k symmetry
    // hold bit for bit.
    const int lo = std::min(k, n - k);
    const int hi = n - lo;
    const double v = log_q_factorial(n, q).logmag - log_q_factorial(lo, q).logmag -
                     log_q_factorial(hi, q).logmag;
    return LogValue::from_log(v);
}

double mallows_pmf(const Permutation& pi, double q) {
    require_positive_q(q);
    const double li = static_cast<double>(inversion_count(pi)) * std::log(q);
    return std::exp(li - log_q_factorial(pi.size(), q).logmag);
}

}  // namespace mallows
