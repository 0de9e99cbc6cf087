#include "mfgsim/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace mfgsim {

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace {

double percentile(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double pos = p * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

Quartiles quartiles(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return {percentile(values, 0.25), percentile(values, 0.50), percentile(values, 0.75)};
}

double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return percentile(values, 0.50);
}

}  // namespace mfgsim
