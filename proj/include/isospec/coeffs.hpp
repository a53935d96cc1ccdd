#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace isospec {

using cplx = std::complex<double>;

// Triangular array Z_l^m, 0 <= l <= lmax, -l <= m <= l, of a real field.
// All (lmax+1)^2 entries are stored; setters keep Z_l^{-m} = (-1)^m conj(Z_l^m)
// and Z_l^0 real, so the array always describes a real-valued field.
class HarmonicCoeffs {
public:
    HarmonicCoeffs() = default;
    explicit HarmonicCoeffs(int lmax);

    int lmax() const noexcept { return lmax_; }
    std::size_t size() const noexcept { return z_.size(); }

    static std::size_t index(int l, int m) noexcept {
        return static_cast<std::size_t>(l * l + l + m);
    }

    cplx operator()(int l, int m) const;

    // Sets Z_l^m and its conjugate partner Z_l^{-m}. For m = 0 only the real
    // part is kept.
    void set(int l, int m, cplx value);

    // Replaces the whole degree-l block (2l+1 values ordered m = -l..l) and
    // re-imposes the reality constraint from the m >= 0 half.
    void set_block(int l, const cplx* values);

    const cplx* block(int l) const noexcept { return z_.data() + index(l, -l); }
    const std::vector<cplx>& values() const noexcept { return z_; }

private:
    void check(int l, int m) const;

    int lmax_ = -1;
    std::vector<cplx> z_;
};

// Nonnegative angular power spectrum f_0..f_lmax.
struct AngularPowerSpectrum {
    std::vector<double> f;
    int lmax() const noexcept { return static_cast<int>(f.size()) - 1; }
};

}  // namespace isospec
