#pragma once

#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "isospec/coeffs.hpp"

namespace isospec {

// f_l = (l(l+1) + c^2)^{-2}; covariance is the Legendre series truncated at series_lmax.
struct LaplaceBeltrami {
    double c = 1.0;
    int series_lmax = 1024;
};

// C(cos g) = (1 - 2 z cos g + z^2)^{-(n-2)/2}.
struct GeneratingInvPow {
    double z = 0.5;
    double n = 3.0;
};

// C(cos g) = (1 - a^2) / (1 - 2 a cos g + a^2)^{n/2}.
struct PoissonKernelPow {
    double a = 0.5;
    double n = 3.0;
};

// von Mises-Fisher density C(cos g) = kappa exp(kappa cos g) / (4 pi sinh kappa).
struct ExpKappa {
    double kappa = 1.0;
};

// C(cos g) = exp(kappa cos g) J_0(kappa sin g).
struct ExpJ0 {
    double kappa = 1.0;
};

// C(cos g) = I_0(sqrt(2 kappa (1 + cos g))) J_0(sqrt(2 kappa (1 - cos g))).
struct BesselI0Product {
    double kappa = 1.0;
};

// Matern form in the great-circle angle g, half-integer smoothness only.
struct MaternRestricted {
    double sigma2 = 1.0;
    double nu = 0.5;
    double theta = 1.0;
};

// Radial spectral measure of a 3-D isotropic field restricted to the unit
// sphere: an absolutely continuous density plus point masses.
struct SpectralMeasure {
    std::function<double(double)> density;           // may be empty
    std::vector<std::pair<double, double>> atoms;    // (lambda, mass)
    std::string density_name;                        // for serialization
    double density_param = 0.0;                      // for serialization
};

using CovarianceModel = std::variant<LaplaceBeltrami, GeneratingInvPow, PoissonKernelPow, ExpKappa, ExpJ0,
                                     BesselI0Product, MaternRestricted, SpectralMeasure>;

// Density 2 lambda^2 / ((2 pi)^2 (lambda^2 + c^2)^2), the 3-D analogue of the
// Laplace-Beltrami model.
SpectralMeasure laplace_beltrami_measure(double c);

std::string variant_name(const CovarianceModel& model);

// Throws ConfigError naming the offending parameter.
void validate(const CovarianceModel& model);

double model_covariance(const CovarianceModel& model, double gamma);

AngularPowerSpectrum model_spectrum(const CovarianceModel& model, int lmax);

// True when model_spectrum uses a closed form rather than a transform.
bool has_closed_form_spectrum(const CovarianceModel& model);

struct PoissonOptions {
    double tolerance = 1e-9;
    double lambda_max = 1e6;
    int nodes_per_panel = 32;
};

struct PoissonResult {
    double value = 0.0;
    double tail_bound = 0.0;   // bound on the neglected integral beyond lambda_end
    double lambda_end = 0.0;
    int panels = 0;
};

// 2 pi^2 int_0^inf J_{l+1/2}(lambda)^2 lambda^{-1} S(d lambda).
PoissonResult poisson_formula_spectrum(const SpectralMeasure& measure, int l, const PoissonOptions& opts = {});

// Spectral-measure covariance C(r) = int j_0(lambda r) S(d lambda) at chord r.
double spectral_measure_covariance(const SpectralMeasure& measure, double chord, double tolerance = 1e-9);

}  // namespace isospec
