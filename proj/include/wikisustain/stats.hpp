#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace wikisustain::stats {

/// Sums in ascending order, so the result does not depend on input order.
inline double mean(std::span<const double> x) {
    if (x.empty()) return 0.0;
    std::vector<double> v(x.begin(), x.end());
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (double e : v) s += e;
    return s / static_cast<double>(v.size());
}

namespace detail {
inline double sum_sq_dev(std::span<const double> x, double m) {
    std::vector<double> d;
    d.reserve(x.size());
    for (double v : x) d.push_back((v - m) * (v - m));
    std::sort(d.begin(), d.end());
    double s = 0.0;
    for (double e : d) s += e;
    return s;
}
}  // namespace detail

/// Average of the two middle elements for even sizes; 0 for empty input.
inline double median(std::span<const double> x) {
    if (x.empty()) return 0.0;
    std::vector<double> v(x.begin(), x.end());
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

/// Population standard deviation (divides by n).
inline double stddev(std::span<const double> x) {
    if (x.empty()) return 0.0;
    return std::sqrt(detail::sum_sq_dev(x, mean(x)) / static_cast<double>(x.size()));
}

/// Sample standard deviation (divides by n - 1); 0 for fewer than two values.
inline double sample_stddev(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    return std::sqrt(detail::sum_sq_dev(x, mean(x)) / static_cast<double>(x.size() - 1));
}

}  // namespace wikisustain::stats
