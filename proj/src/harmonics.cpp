#include "isospec/harmonics.hpp"

#include <cmath>
#include <mutex>
#include <string>

#include <fftw3.h>

#include "isospec/errors.hpp"

namespace isospec {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// Inverse longitude transform: out[j] = F_0 + 2 Re sum_{m>=1} F_m exp(i m phi_j).
void longitude_synthesis(const std::vector<cplx>& fm, std::vector<double>& out, bool use_fft) {
    const int n = static_cast<int>(out.size());
    const int mmax = static_cast<int>(fm.size()) - 1;
    if (!use_fft) {
        for (int j = 0; j < n; ++j) {
            const double phi = kTwoPi * j / n;
            double v = fm[0].real();
            for (int m = 1; m <= mmax; ++m) v += 2.0 * (fm[m] * std::polar(1.0, m * phi)).real();
            out[j] = v;
        }
        return;
    }
    const int nc = n / 2 + 1;
    fftw_complex* in = fftw_alloc_complex(nc);
    double* res = fftw_alloc_real(n);
    for (int k = 0; k < nc; ++k) {
        const cplx v = (k <= mmax) ? fm[k] : cplx(0.0, 0.0);
        in[k][0] = v.real();
        in[k][1] = v.imag();
    }
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        plan = fftw_plan_dft_c2r_1d(n, in, res, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    for (int j = 0; j < n; ++j) out[j] = res[j];
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(res);
}

// Forward longitude transform: G_m = (2 pi / n) sum_j x_j exp(-i m phi_j), m = 0..mmax.
void longitude_analysis(const double* x, int n, int mmax, std::vector<cplx>& gm, bool use_fft) {
    gm.assign(mmax + 1, cplx(0.0, 0.0));
    const double scale = kTwoPi / n;
    if (!use_fft) {
        for (int m = 0; m <= mmax; ++m) {
            cplx s(0.0, 0.0);
            for (int j = 0; j < n; ++j) s += x[j] * std::polar(1.0, -m * kTwoPi * j / n);
            gm[m] = scale * s;
        }
        return;
    }
    const int nc = n / 2 + 1;
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(nc);
    for (int j = 0; j < n; ++j) in[j] = x[j];
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    for (int m = 0; m <= mmax && m < nc; ++m) gm[m] = scale * cplx(out[m][0], out[m][1]);
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
}

}  // namespace

GaussLegendre gauss_legendre(int n) {
    if (n < 1) throw InvalidArgument("gauss_legendre: node count must be positive");
    GaussLegendre gl;
    gl.nodes.assign(n, 0.0);
    gl.weights.assign(n, 0.0);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Tricomi initial guess for the i-th largest root, refined by Newton.
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int l = 1; l < n; ++l) {
                const double p2 = ((2.0 * l + 1.0) * x * p1 - l * p0) / (l + 1.0);
                p0 = p1;
                p1 = p2;
            }
            const double pn = (n == 1) ? x : p1;
            const double pnm1 = (n == 1) ? 1.0 : p0;
            dp = n * (x * pn - pnm1) / (x * x - 1.0);
            const double dx = pn / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                // one more evaluation of the derivative at the converged root
                p0 = 1.0;
                p1 = x;
                for (int l = 1; l < n; ++l) {
                    const double p2 = ((2.0 * l + 1.0) * x * p1 - l * p0) / (l + 1.0);
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * ((n == 1) ? x : p1) - ((n == 1) ? 1.0 : p0)) / (x * x - 1.0);
                break;
            }
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        gl.nodes[n - 1 - i] = x;
        gl.nodes[i] = -x;
        gl.weights[n - 1 - i] = w;
        gl.weights[i] = w;
    }
    if (n % 2 == 1) gl.nodes[n / 2] = 0.0;
    return gl;
}

double legendre(int l, double x) {
    if (l < 0) throw InvalidArgument("legendre: negative degree");
    if (!(std::abs(x) <= 1.0)) throw InvalidArgument("legendre: |x| > 1");
    if (l == 0) return 1.0;
    double p0 = 1.0;
    double p1 = x;
    for (int k = 1; k < l; ++k) {
        const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

std::vector<double> legendre_all(int lmax, double x) {
    if (lmax < 0) throw InvalidArgument("legendre_all: negative degree");
    if (!(std::abs(x) <= 1.0)) throw InvalidArgument("legendre_all: |x| > 1");
    std::vector<double> p(lmax + 1, 1.0);
    if (lmax >= 1) p[1] = x;
    for (int k = 1; k < lmax; ++k) p[k + 1] = ((2.0 * k + 1.0) * x * p[k] - k * p[k - 1]) / (k + 1.0);
    return p;
}

NormalizedLegendre::NormalizedLegendre(int lmax, double theta) : lmax_(lmax) {
    if (lmax < 0) throw InvalidArgument("NormalizedLegendre: negative degree");
    if (!(theta >= 0.0 && theta <= M_PI)) throw InvalidArgument("NormalizedLegendre: theta outside [0, pi]");
    p_.assign(static_cast<std::size_t>((lmax + 1) * (lmax + 2) / 2), 0.0);
    const double x = std::cos(theta);
    const double s = std::sin(theta);
    auto at = [this](int l, int m) -> double& { return p_[static_cast<std::size_t>(l * (l + 1) / 2 + m)]; };
    double sectoral = 1.0 / std::sqrt(4.0 * M_PI);
    for (int m = 0; m <= lmax; ++m) {
        if (m > 0) sectoral *= -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
        at(m, m) = sectoral;
        if (m + 1 <= lmax) at(m + 1, m) = std::sqrt(2.0 * m + 3.0) * x * sectoral;
        for (int l = m + 2; l <= lmax; ++l) {
            const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
            const double b = std::sqrt((static_cast<double>(l - 1) * (l - 1) - static_cast<double>(m) * m) /
                                       (4.0 * (l - 1) * (l - 1) - 1.0));
            at(l, m) = a * (x * at(l - 1, m) - b * at(l - 2, m));
        }
    }
}

cplx spherical_harmonic(int l, int m, double theta, double phi) {
    if (l < 0 || m < -l || m > l)
        throw InvalidArgument("spherical_harmonic: invalid index (" + std::to_string(l) + "," + std::to_string(m) + ")");
    const NormalizedLegendre p(l, theta);
    const int am = std::abs(m);
    const cplx y = p(l, am) * std::polar(1.0, am * phi);
    if (m >= 0) return y;
    return (am % 2 == 0) ? std::conj(y) : -std::conj(y);
}

SphereGrid::SphereGrid(int n_theta, int n_phi) {
    if (n_theta < 1 || n_phi < 1) throw InvalidArgument("SphereGrid: grid sizes must be positive");
    const GaussLegendre gl = gauss_legendre(n_theta);
    // Colatitudes ascending from the north pole: x = cos(theta) descending.
    theta_.resize(n_theta);
    weights_.resize(n_theta);
    for (int i = 0; i < n_theta; ++i) {
        theta_[i] = std::acos(gl.nodes[n_theta - 1 - i]);
        weights_[i] = gl.weights[n_theta - 1 - i];
    }
    phi_.resize(n_phi);
    for (int j = 0; j < n_phi; ++j) phi_[j] = kTwoPi * j / n_phi;
    lmax_exact_ = std::min(n_theta - 1, (n_phi - 1) / 2);
}

SphereGrid SphereGrid::for_band_limit(int lmax) {
    if (lmax < 0) throw InvalidArgument("SphereGrid: negative band limit");
    return SphereGrid(lmax + 1, 2 * lmax + 2);
}

SphereMap synthesize(const HarmonicCoeffs& c, std::shared_ptr<const SphereGrid> grid,
                     const std::optional<std::vector<int>>& degrees, const TransformOptions& opts) {
    if (!grid) throw InvalidArgument("synthesize: missing grid");
    const int lmax = c.lmax();
    if (lmax > grid->lmax_exact())
        throw InvalidArgument("synthesize: coefficient band limit " + std::to_string(lmax) + " exceeds grid limit " +
                              std::to_string(grid->lmax_exact()));
    std::vector<char> keep(lmax + 1, degrees ? 0 : 1);
    if (degrees) {
        for (int l : *degrees) {
            if (l < 0 || l > lmax) throw InvalidArgument("synthesize: degree filter entry out of range");
            keep[l] = 1;
        }
    }
    SphereMap map{grid, Eigen::MatrixXd::Zero(grid->n_theta(), grid->n_phi())};
    std::vector<cplx> fm(lmax + 1);
    std::vector<double> row(grid->n_phi());
    for (int i = 0; i < grid->n_theta(); ++i) {
        const NormalizedLegendre p(lmax, grid->colatitudes()[i]);
        for (int m = 0; m <= lmax; ++m) {
            cplx s(0.0, 0.0);
            for (int l = m; l <= lmax; ++l)
                if (keep[l]) s += c(l, m) * p(l, m);
            fm[m] = s;
        }
        longitude_synthesis(fm, row, opts.use_fft);
        for (int j = 0; j < grid->n_phi(); ++j) map.values(i, j) = row[j];
    }
    return map;
}

HarmonicCoeffs analyze(const SphereMap& map, int lmax, const TransformOptions& opts) {
    if (!map.grid) throw InvalidArgument("analyze: missing grid");
    const SphereGrid& grid = *map.grid;
    if (lmax < 0 || lmax > grid.lmax_exact())
        throw InvalidArgument("analyze: band limit " + std::to_string(lmax) + " exceeds grid limit " +
                              std::to_string(grid.lmax_exact()));
    if (map.values.rows() != grid.n_theta() || map.values.cols() != grid.n_phi())
        throw InvalidArgument("analyze: map dimensions do not match grid");
    std::vector<cplx> acc(static_cast<std::size_t>((lmax + 1) * (lmax + 2) / 2), cplx(0.0, 0.0));
    std::vector<double> row(grid.n_phi());
    std::vector<cplx> gm;
    for (int i = 0; i < grid.n_theta(); ++i) {
        for (int j = 0; j < grid.n_phi(); ++j) row[j] = map.values(i, j);
        longitude_analysis(row.data(), grid.n_phi(), lmax, gm, opts.use_fft);
        const NormalizedLegendre p(lmax, grid.colatitudes()[i]);
        const double w = grid.colat_weights()[i];
        for (int l = 0; l <= lmax; ++l)
            for (int m = 0; m <= l; ++m) acc[static_cast<std::size_t>(l * (l + 1) / 2 + m)] += w * p(l, m) * gm[m];
    }
    HarmonicCoeffs c(lmax);
    for (int l = 0; l <= lmax; ++l)
        for (int m = 0; m <= l; ++m) c.set(l, m, acc[static_cast<std::size_t>(l * (l + 1) / 2 + m)]);
    return c;
}

double evaluate(const HarmonicCoeffs& c, double theta, double phi) {
    const int lmax = c.lmax();
    const NormalizedLegendre p(lmax, theta);
    double v = 0.0;
    for (int l = 0; l <= lmax; ++l) {
        v += c(l, 0).real() * p(l, 0);
        for (int m = 1; m <= l; ++m) v += 2.0 * (c(l, m) * std::polar(1.0, m * phi)).real() * p(l, m);
    }
    return v;
}

SphereMap rotate_map(const SphereMap& map, const Rotation& g, int lmax) {
    const HarmonicCoeffs c = analyze(map, lmax);
    const Rotation ginv = inverse(g);
    SphereMap out{map.grid, Eigen::MatrixXd::Zero(map.values.rows(), map.values.cols())};
    for (int i = 0; i < map.grid->n_theta(); ++i)
        for (int j = 0; j < map.grid->n_phi(); ++j) {
            const auto v = isospec::apply(ginv, unit_vector(map.grid->colatitudes()[i], map.grid->longitudes()[j]));
            const auto [theta, phi] = polar_angles(v);
            out.values(i, j) = evaluate(c, theta, phi);
        }
    return out;
}

namespace {

AngularPowerSpectrum finish_transform(std::vector<double> raw, LegendreDiagnostics* diag) {
    const int lmax = static_cast<int>(raw.size()) - 1;
    AngularPowerSpectrum out;
    out.f.resize(lmax + 1);
    std::vector<int> clamped;
    for (int l = 0; l <= lmax; ++l) {
        raw[l] *= kTwoPi;
        double v = raw[l];
        if (v < -kIndefiniteThreshold)
            throw NotPositiveDefinite("legendre_transform: coefficient at degree " + std::to_string(l) + " is " +
                                          std::to_string(v) + " (covariance is not positive definite)",
                                      l, v);
        if (v < -kClampThreshold) clamped.push_back(l);
        if (v < 0.0) v = 0.0;
        out.f[l] = v;
    }
    if (diag) {
        diag->raw = raw;
        diag->clamped_degrees = clamped;
    }
    return out;
}

}  // namespace

AngularPowerSpectrum legendre_transform(const std::function<double(double)>& cov, int lmax, int nquad,
                                        LegendreDiagnostics* diag) {
    if (lmax < 0) throw InvalidArgument("legendre_transform: negative lmax");
    if (nquad < lmax + 1) throw InvalidArgument("legendre_transform: nquad must be at least lmax + 1");
    const GaussLegendre gl = gauss_legendre(nquad);
    std::vector<double> raw(lmax + 1, 0.0);
    for (int i = 0; i < nquad; ++i) {
        const double cx = cov(gl.nodes[i]);
        if (!std::isfinite(cx)) throw InvalidArgument("legendre_transform: covariance is not finite");
        const std::vector<double> p = legendre_all(lmax, gl.nodes[i]);
        for (int l = 0; l <= lmax; ++l) raw[l] += gl.weights[i] * cx * p[l];
    }
    return finish_transform(std::move(raw), diag);
}

AngularPowerSpectrum legendre_transform_angle(const std::function<double(double)>& cov_of_gamma, int lmax,
                                              int nquad, LegendreDiagnostics* diag) {
    if (lmax < 0) throw InvalidArgument("legendre_transform_angle: negative lmax");
    if (nquad < lmax + 1) throw InvalidArgument("legendre_transform_angle: nquad must be at least lmax + 1");
    const GaussLegendre gl = gauss_legendre(nquad);
    std::vector<double> raw(lmax + 1, 0.0);
    for (int i = 0; i < nquad; ++i) {
        const double g = 0.5 * M_PI * (gl.nodes[i] + 1.0);
        const double w = 0.5 * M_PI * gl.weights[i] * std::sin(g);
        const double cg = cov_of_gamma(g);
        if (!std::isfinite(cg)) throw InvalidArgument("legendre_transform_angle: covariance is not finite");
        const std::vector<double> p = legendre_all(lmax, std::cos(g));
        for (int l = 0; l <= lmax; ++l) raw[l] += w * cg * p[l];
    }
    return finish_transform(std::move(raw), diag);
}

double covariance_eval(const AngularPowerSpectrum& f, double cos_gamma) {
    if (!(std::abs(cos_gamma) <= 1.0)) throw InvalidArgument("covariance_eval: |cos gamma| > 1");
    const int lmax = f.lmax();
    double sum = 0.0;
    double p0 = 1.0;
    double p1 = cos_gamma;
    for (int l = 0; l <= lmax; ++l) {
        double pl;
        if (l == 0) {
            pl = 1.0;
        } else if (l == 1) {
            pl = cos_gamma;
        } else {
            pl = ((2.0 * l - 1.0) * cos_gamma * p1 - (l - 1.0) * p0) / l;
            p0 = p1;
            p1 = pl;
        }
        sum += f.f[l] * (2.0 * l + 1.0) / (4.0 * M_PI) * pl;
    }
    return sum;
}

}  // namespace isospec
