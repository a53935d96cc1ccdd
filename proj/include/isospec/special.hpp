#pragma once

#include <vector>

namespace isospec {

// log(n!) for 0 <= n <= 4096, tabulated in extended precision.
long double log_factorial(int n);

// Spherical Bessel j_0..j_lmax at x >= 0 (upward recurrence above the turning
// point, Miller's downward recurrence below it).
std::vector<double> spherical_bessel_j(int lmax, double x);

// Cylinder Bessel J_{l+1/2}(x) for l = 0..lmax, from the spherical values.
std::vector<double> bessel_j_half(int lmax, double x);

// Ratios i_l(x)/i_0(x) = I_{l+1/2}(x)/I_{1/2}(x) for l = 0..lmax, x >= 0,
// by Miller's downward recurrence.
std::vector<double> modified_bessel_i_half_ratio(int lmax, double x);

}  // namespace isospec
