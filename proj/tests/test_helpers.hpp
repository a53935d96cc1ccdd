#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <numbers>
#include <vector>

#include "isospec/coeffs.hpp"
#include "isospec/wigner.hpp"

namespace testing_support {

inline constexpr double kPi = std::numbers::pi;

// Racah's factorial sum in long double, independent of the library path.
inline double racah_3j(int j1, int j2, int j3, int m1, int m2, int m3) {
    if (m1 + m2 + m3 != 0) return 0.0;
    if (j3 < std::abs(j1 - j2) || j3 > j1 + j2) return 0.0;
    if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(m3) > j3) return 0.0;
    auto f = [](int n) { return std::lgamma(static_cast<long double>(n) + 1.0L); };
    const long double tri = f(j1 + j2 - j3) + f(j1 - j2 + j3) + f(-j1 + j2 + j3) - f(j1 + j2 + j3 + 1);
    const long double pre = 0.5L * (tri + f(j1 + m1) + f(j1 - m1) + f(j2 + m2) + f(j2 - m2) + f(j3 + m3) + f(j3 - m3));
    const int kmin = std::max({0, j2 - j3 - m1, j1 - j3 + m2});
    const int kmax = std::min({j1 + j2 - j3, j1 - m1, j2 + m2});
    long double sum = 0.0L;
    for (int k = kmin; k <= kmax; ++k) {
        const long double term = std::exp(pre - f(k) - f(j1 + j2 - j3 - k) - f(j1 - m1 - k) - f(j2 + m2 - k) -
                                          f(j3 - j2 + m1 + k) - f(j3 - j1 - m2 + k));
        sum += (k % 2 == 0 ? term : -term);
    }
    const int phase = j1 - j2 - m3;
    return static_cast<double>((phase % 2 == 0 ? 1.0L : -1.0L) * sum);
}

// Random coefficients of a real field.
inline isospec::HarmonicCoeffs random_real_coeffs(int lmax, isospec::Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    isospec::HarmonicCoeffs c(lmax);
    for (int l = 0; l <= lmax; ++l)
        for (int m = 0; m <= l; ++m) {
            const isospec::cplx z(n(rng), m == 0 ? 0.0 : n(rng));
            c.set(l, m, z);
            if (m > 0) c.set(l, -m, (m % 2 == 0 ? 1.0 : -1.0) * std::conj(z));
        }
    return c;
}

inline double max_abs_diff(const isospec::HarmonicCoeffs& a, const isospec::HarmonicCoeffs& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
    return worst;
}

}  // namespace testing_support
