#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "isospec/coeffs.hpp"
#include "isospec/wigner.hpp"

namespace isospec {

struct GaussLegendre {
    std::vector<double> nodes;    // ascending in (-1, 1)
    std::vector<double> weights;  // positive, summing to 2
};

GaussLegendre gauss_legendre(int n);

// Legendre polynomial P_l(x), |x| <= 1.
double legendre(int l, double x);

// P_0(x)..P_lmax(x).
std::vector<double> legendre_all(int lmax, double x);

// Fully normalized associated Legendre functions with the Condon-Shortley
// phase, so that Y_l^m(theta, phi) = P(l, m) * exp(i m phi) for m >= 0.
class NormalizedLegendre {
public:
    NormalizedLegendre(int lmax, double theta);
    double operator()(int l, int m) const { return p_[static_cast<std::size_t>(l * (l + 1) / 2 + m)]; }
    int lmax() const noexcept { return lmax_; }

private:
    int lmax_;
    std::vector<double> p_;
};

cplx spherical_harmonic(int l, int m, double theta, double phi);

// Gauss-Legendre colatitudes times equispaced longitudes.
class SphereGrid {
public:
    SphereGrid(int n_theta, int n_phi);
    static SphereGrid for_band_limit(int lmax);

    int n_theta() const noexcept { return static_cast<int>(theta_.size()); }
    int n_phi() const noexcept { return static_cast<int>(phi_.size()); }
    const std::vector<double>& colatitudes() const noexcept { return theta_; }
    const std::vector<double>& colat_weights() const noexcept { return weights_; }
    const std::vector<double>& longitudes() const noexcept { return phi_; }
    int lmax_exact() const noexcept { return lmax_exact_; }

private:
    std::vector<double> theta_;
    std::vector<double> weights_;
    std::vector<double> phi_;
    int lmax_exact_;
};

struct SphereMap {
    std::shared_ptr<const SphereGrid> grid;
    Eigen::MatrixXd values;  // n_theta x n_phi
};

struct TransformOptions {
    bool use_fft = false;  // longitude transform through FFTW instead of direct sums
};

SphereMap synthesize(const HarmonicCoeffs& c, std::shared_ptr<const SphereGrid> grid,
                     const std::optional<std::vector<int>>& degrees = std::nullopt,
                     const TransformOptions& opts = {});

HarmonicCoeffs analyze(const SphereMap& map, int lmax, const TransformOptions& opts = {});

// Field value sum_{l,m} Z_l^m Y_l^m(theta, phi) at an arbitrary point.
double evaluate(const HarmonicCoeffs& c, double theta, double phi);

// Map of the rotated field L -> X(g^{-1} L), exact for band-limited input.
SphereMap rotate_map(const SphereMap& map, const Rotation& g, int lmax);

struct LegendreDiagnostics {
    std::vector<double> raw;            // unclamped transform values
    std::vector<int> clamped_degrees;   // negatives in [-1e-8, -1e-12) set to 0
};

// f_l = 2 pi int_{-1}^{1} C(x) P_l(x) dx with nquad Gauss-Legendre nodes.
// Values in [-1e-12, 0) are round-off and clamped to 0; values below -1e-8
// raise NotPositiveDefinite; values in between are clamped and listed in diag.
AngularPowerSpectrum legendre_transform(const std::function<double(double)>& cov, int lmax, int nquad,
                                        LegendreDiagnostics* diag = nullptr);

// Same transform with Gauss-Legendre nodes in the angle g on [0, pi] and the
// sin g weight; converges fast for covariances smooth in g but not in cos g.
AngularPowerSpectrum legendre_transform_angle(const std::function<double(double)>& cov_of_gamma, int lmax,
                                              int nquad, LegendreDiagnostics* diag = nullptr);

// sum_l f_l (2l+1)/(4 pi) P_l(cos gamma).
double covariance_eval(const AngularPowerSpectrum& f, double cos_gamma);

inline constexpr double kClampThreshold = 1e-12;
inline constexpr double kIndefiniteThreshold = 1e-8;

}  // namespace isospec
