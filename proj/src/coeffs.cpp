#include "isospec/coeffs.hpp"

#include <string>

#include "isospec/errors.hpp"

namespace isospec {

HarmonicCoeffs::HarmonicCoeffs(int lmax) : lmax_(lmax) {
    if (lmax < 0) throw InvalidArgument("HarmonicCoeffs: negative lmax");
    z_.assign(static_cast<std::size_t>(lmax + 1) * (lmax + 1), cplx(0.0, 0.0));
}

void HarmonicCoeffs::check(int l, int m) const {
    if (l < 0 || l > lmax_ || m < -l || m > l)
        throw InvalidArgument("HarmonicCoeffs: index (" + std::to_string(l) + "," + std::to_string(m) +
                              ") outside lmax " + std::to_string(lmax_));
}

cplx HarmonicCoeffs::operator()(int l, int m) const {
    check(l, m);
    return z_[index(l, m)];
}

void HarmonicCoeffs::set(int l, int m, cplx value) {
    check(l, m);
    if (m == 0) {
        z_[index(l, 0)] = cplx(value.real(), 0.0);
        return;
    }
    const int am = m < 0 ? -m : m;
    const cplx pos = m > 0 ? value : ((am % 2 == 0) ? std::conj(value) : -std::conj(value));
    z_[index(l, am)] = pos;
    z_[index(l, -am)] = (am % 2 == 0) ? std::conj(pos) : -std::conj(pos);
}

void HarmonicCoeffs::set_block(int l, const cplx* values) {
    check(l, 0);
    for (int m = 0; m <= l; ++m) set(l, m, values[m + l]);
}

}  // namespace isospec
