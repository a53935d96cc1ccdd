#include "isospec/special.hpp"

#include <cmath>
#include <string>

#include "isospec/errors.hpp"

namespace isospec {

namespace {

constexpr int kFactorialTable = 4096;

const std::vector<long double>& factorial_table() {
    static const std::vector<long double> table = [] {
        std::vector<long double> t(kFactorialTable + 1, 0.0L);
        for (int n = 2; n <= kFactorialTable; ++n) t[n] = t[n - 1] + std::log(static_cast<long double>(n));
        return t;
    }();
    return table;
}

}  // namespace

long double log_factorial(int n) {
    if (n < 0 || n > kFactorialTable)
        throw InvalidArgument("log_factorial: argument " + std::to_string(n) + " out of range");
    return factorial_table()[n];
}

std::vector<double> spherical_bessel_j(int lmax, double x) {
    if (lmax < 0) throw InvalidArgument("spherical_bessel_j: negative degree");
    if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidArgument("spherical_bessel_j: x must be finite and >= 0");
    std::vector<double> j(lmax + 1, 0.0);
    if (x == 0.0) {
        j[0] = 1.0;
        return j;
    }
    const double j0 = std::sin(x) / x;
    if (x > lmax) {
        // Upward recurrence is stable while l < x.
        j[0] = j0;
        if (lmax >= 1) j[1] = std::sin(x) / (x * x) - std::cos(x) / x;
        for (int l = 1; l < lmax; ++l) j[l + 1] = (2 * l + 1) / x * j[l] - j[l - 1];
        return j;
    }
    // Miller: start well above both lmax and x, recur downward, normalize.
    const int start = lmax + 30 + static_cast<int>(std::sqrt(40.0 * (lmax + 1))) + static_cast<int>(x);
    double above = 0.0;
    double cur = 1e-300;
    for (int l = start; l >= 1; --l) {
        const double below = (2 * l + 1) / x * cur - above;
        above = cur;
        cur = below;
        if (l - 1 <= lmax) j[l - 1] = cur;
        if (l <= lmax) j[l] = above;
        if (std::abs(cur) > 1e250) {
            for (int k = l - 1; k <= lmax; ++k)
                if (k >= 0) j[k] *= 1e-250;
            above *= 1e-250;
            cur *= 1e-250;
        }
    }
    // j[0] holds the unnormalized j_0, `above` the unnormalized j_1.
    const double j1 = std::sin(x) / (x * x) - std::cos(x) / x;
    const double scale = std::abs(j0) >= std::abs(j1) ? j0 / j[0] : j1 / above;
    for (double& v : j) v *= scale;
    return j;
}

std::vector<double> bessel_j_half(int lmax, double x) {
    std::vector<double> j = spherical_bessel_j(lmax, x);
    const double factor = std::sqrt(2.0 * x / M_PI);
    for (double& v : j) v *= factor;
    return j;
}

std::vector<double> modified_bessel_i_half_ratio(int lmax, double x) {
    if (lmax < 0) throw InvalidArgument("modified_bessel_i_half_ratio: negative degree");
    if (!(x >= 0.0) || !std::isfinite(x))
        throw InvalidArgument("modified_bessel_i_half_ratio: x must be finite and >= 0");
    std::vector<double> r(lmax + 1, 0.0);
    r[0] = 1.0;
    if (x == 0.0 || lmax == 0) return r;
    const int start = lmax + 40 + static_cast<int>(10.0 * std::sqrt(x + 1.0));
    // i_{l-1} = i_{l+1} + (2l+1)/x i_l, started from (i_{start+1}, i_start) = (0, tiny).
    double above = 0.0;
    double cur = 1e-300;
    std::vector<double> vals(lmax + 1, 0.0);
    for (int l = start; l >= 1; --l) {
        const double below = above + (2 * l + 1) / x * cur;
        above = cur;
        cur = below;
        if (l <= lmax) vals[l] = above;
        if (cur > 1e250) {
            for (double& v : vals) v *= 1e-250;
            above *= 1e-250;
            cur *= 1e-250;
        }
    }
    vals[0] = cur;
    for (int l = 1; l <= lmax; ++l) r[l] = vals[l] / vals[0];
    return r;
}

}  // namespace isospec
