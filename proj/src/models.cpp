#include "isospec/models.hpp"

#include <cmath>
#include <string>

#include "isospec/errors.hpp"
#include "isospec/harmonics.hpp"
#include "isospec/special.hpp"

namespace isospec {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const std::string& variant, const std::string& param, const std::string& rule) {
    if (!ok) throw ConfigError(variant + ": parameter '" + param + "' must satisfy " + rule);
}

double matern_profile(double nu, double t) {
    if (nu == 0.5) return std::exp(-t);
    if (nu == 1.5) return (1.0 + t) * std::exp(-t);
    return (1.0 + t + t * t / 3.0) * std::exp(-t);
}

int default_nquad(int lmax) { return 2 * lmax + 2 + 512; }

// Upper bound of int_L^inf S(lambda) w(lambda) d lambda by Gauss-Legendre in t = L / lambda.
double tail_integral(const std::function<double(double)>& s, const std::function<double(double)>& envelope,
                     double big_l) {
    static const GaussLegendre gl = gauss_legendre(64);
    double sum = 0.0;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double t = 0.5 * (gl.nodes[i] + 1.0);
        const double lambda = big_l / t;
        sum += 0.5 * gl.weights[i] * std::abs(s(lambda)) * envelope(lambda) * big_l / (t * t);
    }
    return sum;
}

}  // namespace

SpectralMeasure laplace_beltrami_measure(double c) {
    if (!(c > 0.0)) throw ConfigError("SpectralMeasure: parameter 'c' must satisfy c > 0");
    SpectralMeasure m;
    m.density = [c](double lambda) {
        const double d = lambda * lambda + c * c;
        return 2.0 * lambda * lambda / (4.0 * M_PI * M_PI * d * d);
    };
    m.density_name = "laplace_beltrami";
    m.density_param = c;
    return m;
}

std::string variant_name(const CovarianceModel& model) {
    return std::visit(overloaded{[](const LaplaceBeltrami&) { return std::string("LaplaceBeltrami"); },
                                 [](const GeneratingInvPow&) { return std::string("GeneratingInvPow"); },
                                 [](const PoissonKernelPow&) { return std::string("PoissonKernelPow"); },
                                 [](const ExpKappa&) { return std::string("ExpKappa"); },
                                 [](const ExpJ0&) { return std::string("ExpJ0"); },
                                 [](const BesselI0Product&) { return std::string("BesselI0Product"); },
                                 [](const MaternRestricted&) { return std::string("MaternRestricted"); },
                                 [](const SpectralMeasure&) { return std::string("SpectralMeasure"); }},
                      model);
}

void validate(const CovarianceModel& model) {
    std::visit(overloaded{
                   [](const LaplaceBeltrami& m) {
                       require(m.c > 0.0 && std::isfinite(m.c), "LaplaceBeltrami", "c", "c > 0");
                       require(m.series_lmax >= 1, "LaplaceBeltrami", "series_lmax", "series_lmax >= 1");
                   },
                   [](const GeneratingInvPow& m) {
                       require(m.z > 0.0 && m.z < 1.0, "GeneratingInvPow", "z", "0 < z < 1");
                       require(m.n >= 3.0 && std::isfinite(m.n), "GeneratingInvPow", "n", "n >= 3");
                   },
                   [](const PoissonKernelPow& m) {
                       require(m.a > 0.0 && m.a < 1.0, "PoissonKernelPow", "a", "0 < a < 1");
                       require(m.n >= 2.0 && std::isfinite(m.n), "PoissonKernelPow", "n", "n >= 2");
                   },
                   [](const ExpKappa& m) {
                       require(m.kappa > 0.0 && m.kappa <= 500.0, "ExpKappa", "kappa", "0 < kappa <= 500");
                   },
                   [](const ExpJ0& m) { require(m.kappa > 0.0 && m.kappa <= 500.0, "ExpJ0", "kappa", "0 < kappa <= 500"); },
                   [](const BesselI0Product& m) {
                       require(m.kappa > 0.0 && m.kappa <= 500.0, "BesselI0Product", "kappa", "0 < kappa <= 500");
                   },
                   [](const MaternRestricted& m) {
                       require(m.sigma2 > 0.0 && std::isfinite(m.sigma2), "MaternRestricted", "sigma2", "sigma2 > 0");
                       require(m.nu == 0.5 || m.nu == 1.5 || m.nu == 2.5, "MaternRestricted", "nu",
                               "nu in {0.5, 1.5, 2.5} (general smoothness is not supported)");
                       require(m.theta > 0.0 && std::isfinite(m.theta), "MaternRestricted", "theta", "theta > 0");
                   },
                   [](const SpectralMeasure& m) {
                       require(static_cast<bool>(m.density) || !m.atoms.empty(), "SpectralMeasure", "density",
                               "a density or at least one atom");
                       for (const auto& [lambda, mass] : m.atoms) {
                           require(lambda > 0.0 && std::isfinite(lambda), "SpectralMeasure", "atoms",
                                   "atom locations > 0");
                           require(mass >= 0.0 && std::isfinite(mass), "SpectralMeasure", "atoms", "atom masses >= 0");
                       }
                   }},
               model);
}

double model_covariance(const CovarianceModel& model, double gamma) {
    validate(model);
    if (!(gamma >= 0.0 && gamma <= M_PI)) throw InvalidArgument("model_covariance: gamma outside [0, pi]");
    const double x = std::cos(gamma);
    return std::visit(
        overloaded{
            [&](const LaplaceBeltrami& m) {
                AngularPowerSpectrum f;
                f.f.resize(m.series_lmax + 1);
                for (int l = 0; l <= m.series_lmax; ++l) {
                    const double d = l * (l + 1.0) + m.c * m.c;
                    f.f[l] = 1.0 / (d * d);
                }
                return covariance_eval(f, x);
            },
            [&](const GeneratingInvPow& m) { return std::pow(1.0 - 2.0 * m.z * x + m.z * m.z, -(m.n - 2.0) / 2.0); },
            [&](const PoissonKernelPow& m) {
                return (1.0 - m.a * m.a) / std::pow(1.0 - 2.0 * m.a * x + m.a * m.a, m.n / 2.0);
            },
            [&](const ExpKappa& m) {
                // kappa e^{kappa x} / (4 pi sinh kappa) written without overflow.
                return m.kappa * std::exp(m.kappa * (x - 1.0)) / (2.0 * M_PI * (1.0 - std::exp(-2.0 * m.kappa)));
            },
            [&](const ExpJ0& m) { return std::exp(m.kappa * x) * std::cyl_bessel_j(0.0, m.kappa * std::sin(gamma)); },
            [&](const BesselI0Product& m) {
                const double up = std::sqrt(std::max(0.0, 2.0 * m.kappa * (1.0 + x)));
                const double down = std::sqrt(std::max(0.0, 2.0 * m.kappa * (1.0 - x)));
                return std::cyl_bessel_i(0.0, up) * std::cyl_bessel_j(0.0, down);
            },
            [&](const MaternRestricted& m) { return m.sigma2 * matern_profile(m.nu, m.theta * gamma); },
            [&](const SpectralMeasure& m) { return spectral_measure_covariance(m, 2.0 * std::sin(0.5 * gamma)); }},
        model);
}

bool has_closed_form_spectrum(const CovarianceModel& model) {
    return std::visit(overloaded{[](const LaplaceBeltrami&) { return true; },
                                 [](const GeneratingInvPow& m) { return m.n == 3.0; },
                                 [](const PoissonKernelPow& m) { return m.n == 3.0; },
                                 [](const ExpKappa&) { return true; }, [](const ExpJ0&) { return true; },
                                 [](const BesselI0Product&) { return true; },
                                 [](const MaternRestricted&) { return false; },
                                 [](const SpectralMeasure&) { return false; }},
                      model);
}

AngularPowerSpectrum model_spectrum(const CovarianceModel& model, int lmax) {
    validate(model);
    if (lmax < 0) throw InvalidArgument("model_spectrum: negative lmax");
    AngularPowerSpectrum out;
    out.f.assign(lmax + 1, 0.0);
    auto by_transform = [&]() {
        return legendre_transform([&](double x) { return model_covariance(model, std::acos(x)); }, lmax,
                                  default_nquad(lmax));
    };
    std::visit(overloaded{
                   [&](const LaplaceBeltrami& m) {
                       for (int l = 0; l <= lmax; ++l) {
                           const double d = l * (l + 1.0) + m.c * m.c;
                           out.f[l] = 1.0 / (d * d);
                       }
                   },
                   [&](const GeneratingInvPow& m) {
                       if (m.n != 3.0) {
                           out = by_transform();
                           return;
                       }
                       double zl = 1.0;
                       for (int l = 0; l <= lmax; ++l, zl *= m.z) out.f[l] = 4.0 * M_PI * zl / (2.0 * l + 1.0);
                   },
                   [&](const PoissonKernelPow& m) {
                       if (m.n != 3.0) {
                           out = by_transform();
                           return;
                       }
                       double al = 1.0;
                       for (int l = 0; l <= lmax; ++l, al *= m.a) out.f[l] = 4.0 * M_PI * al;
                   },
                   [&](const ExpKappa& m) { out.f = modified_bessel_i_half_ratio(lmax, m.kappa); },
                   [&](const ExpJ0& m) {
                       double term = 1.0;  // kappa^l / l!
                       for (int l = 0; l <= lmax; ++l) {
                           if (l > 0) term *= m.kappa / l;
                           out.f[l] = term * 4.0 * M_PI / (2.0 * l + 1.0);
                       }
                   },
                   [&](const BesselI0Product& m) {
                       double term = 1.0;  // kappa^l / (l!)^2
                       for (int l = 0; l <= lmax; ++l) {
                           if (l > 0) term *= m.kappa / (static_cast<double>(l) * l);
                           out.f[l] = term * 4.0 * M_PI / (2.0 * l + 1.0);
                       }
                   },
                   [&](const MaternRestricted&) {
                       out = legendre_transform_angle([&](double g) { return model_covariance(model, g); }, lmax,
                                                      default_nquad(lmax));
                   },
                   [&](const SpectralMeasure& m) {
                       for (int l = 0; l <= lmax; ++l) out.f[l] = poisson_formula_spectrum(m, l).value;
                   }},
               model);
    return out;
}

PoissonResult poisson_formula_spectrum(const SpectralMeasure& measure, int l, const PoissonOptions& opts) {
    if (l < 0) throw InvalidArgument("poisson_formula_spectrum: negative degree");
    if (!(opts.tolerance > 0.0) || opts.nodes_per_panel < 2 || !(opts.lambda_max > 0.0))
        throw InvalidArgument("poisson_formula_spectrum: invalid quadrature options");
    PoissonResult res;
    // 2 pi^2 J_{l+1/2}(x)^2 / x = 4 pi j_l(x)^2.
    for (const auto& [lambda, mass] : measure.atoms) {
        const double jl = spherical_bessel_j(l, lambda)[l];
        res.value += 4.0 * M_PI * jl * jl * mass;
    }
    if (!measure.density) return res;

    const GaussLegendre gl = gauss_legendre(opts.nodes_per_panel);
    const double nu = l + 0.5;
    // J_nu^2 + Y_nu^2 <= 2 / (pi sqrt(x^2 - nu^2)) for x > nu >= 1/2, hence
    // 4 pi j_l^2 <= 4 pi / (x sqrt(x^2 - nu^2)).
    auto envelope = [nu](double x) { return 4.0 * M_PI / (x * std::sqrt(x * x - nu * nu)); };
    const double safe_start = 2.0 * nu + 10.0;
    double acc = 0.0;
    int k = 0;
    while (true) {
        const double a = k * M_PI;
        const double b = a + M_PI;
        double panel = 0.0;
        for (int i = 0; i < opts.nodes_per_panel; ++i) {
            const double x = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[i];
            const double jl = spherical_bessel_j(l, x)[l];
            panel += 0.5 * (b - a) * gl.weights[i] * 4.0 * M_PI * jl * jl * measure.density(x);
        }
        acc += panel;
        ++k;
        res.panels = k;
        res.lambda_end = b;
        if (b >= safe_start && std::abs(panel) <= opts.tolerance * std::abs(acc)) {
            const double bound = tail_integral(measure.density, envelope, b);
            if (bound <= opts.tolerance * std::max(std::abs(acc), 1e-300) || bound == 0.0) {
                res.tail_bound = bound;
                break;
            }
        }
        if (b >= opts.lambda_max) {
            const double bound = tail_integral(measure.density, envelope, b);
            throw ConvergenceError("poisson_formula_spectrum: tail beyond lambda=" + std::to_string(b) +
                                       " not below tolerance (bound " + std::to_string(bound) + ")",
                                   bound);
        }
    }
    res.value += acc;
    return res;
}

double spectral_measure_covariance(const SpectralMeasure& measure, double chord, double tolerance) {
    if (!(chord >= 0.0)) throw InvalidArgument("spectral_measure_covariance: negative chord");
    auto j0 = [](double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; };
    double value = 0.0;
    for (const auto& [lambda, mass] : measure.atoms) value += mass * j0(lambda * chord);
    if (!measure.density) return value;
    static const GaussLegendre gl = gauss_legendre(32);
    if (chord == 0.0) {
        // Total mass: [0, 10] by panels, the rest by lambda = 10 / t on (0, 1].
        static const GaussLegendre tail = gauss_legendre(128);
        double acc = 0.0;
        for (int k = 0; k < 10; ++k)
            for (std::size_t i = 0; i < gl.nodes.size(); ++i)
                acc += 0.5 * gl.weights[i] * measure.density(k + 0.5 + 0.5 * gl.nodes[i]);
        for (std::size_t i = 0; i < tail.nodes.size(); ++i) {
            const double t = 0.5 * (tail.nodes[i] + 1.0);
            acc += 0.5 * tail.weights[i] * measure.density(10.0 / t) * 10.0 / (t * t);
        }
        return value + acc;
    }
    const double width = M_PI / std::max(chord, 1.0);
    auto envelope = [chord](double x) { return std::min(1.0, 1.0 / (x * chord)); };
    double acc = 0.0;
    for (int k = 0;; ++k) {
        const double a = k * width;
        const double b = a + width;
        double panel = 0.0;
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
            const double x = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[i];
            panel += 0.5 * (b - a) * gl.weights[i] * j0(x * chord) * measure.density(x);
        }
        acc += panel;
        if (std::abs(panel) <= tolerance * std::abs(acc) && k >= 4) {
            const double bound = tail_integral(measure.density, envelope, b);
            if (bound <= tolerance * std::max(std::abs(acc), 1e-300)) break;
        }
        if (b > 1e7)
            throw ConvergenceError("spectral_measure_covariance: integral did not converge",
                                   tail_integral(measure.density, envelope, b));
    }
    return value + acc;
}

}  // namespace isospec
