#pragma once

#include <string>
#include <vector>

namespace mfgsim {

/// printf "%.17g": 17 significant digits, round-trips doubles exactly.
std::string format_double(double x);

/// Linear-interpolation quartiles (same convention as numpy's default).
struct Quartiles {
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
};
Quartiles quartiles(std::vector<double> values);

double median_of(std::vector<double> values);

}  // namespace mfgsim
