#include <doctest.h>

#include <cmath>

#include "isospec/errors.hpp"
#include "isospec/harmonics.hpp"
#include "isospec/models.hpp"
#include "test_helpers.hpp"

using namespace isospec;
using testing_support::kPi;

TEST_SUITE("harmonics") {

TEST_CASE("Legendre polynomials") {
    CHECK(legendre(0, 0.37) == 1.0);
    for (int l = 0; l <= 50; ++l) CHECK(legendre(l, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(legendre(2, 0.5) == doctest::Approx(-0.125).epsilon(1e-15));
    const std::vector<double> all = legendre_all(10, -0.3);
    for (int l = 0; l <= 10; ++l) CHECK(all[l] == doctest::Approx(legendre(l, -0.3)).epsilon(1e-14));
}

TEST_CASE("Gauss-Legendre rules") {
    const GaussLegendre g1 = gauss_legendre(1);
    CHECK(g1.nodes[0] == 0.0);
    CHECK(g1.weights[0] == doctest::Approx(2.0));
    const GaussLegendre g2 = gauss_legendre(2);
    CHECK(g2.nodes[0] == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-15));
    CHECK(g2.nodes[1] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));
    CHECK(g2.weights[0] == doctest::Approx(1.0));
    double x2 = 0.0;
    for (int i = 0; i < 2; ++i) x2 += g2.weights[i] * g2.nodes[i] * g2.nodes[i];
    CHECK(x2 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("spherical harmonics") {
    for (double th : {0.0, 0.4, 2.0})
        CHECK(spherical_harmonic(0, 0, th, 1.3).real() == doctest::Approx(std::sqrt(1.0 / (4.0 * kPi))));
    for (int l = 0; l <= 8; ++l)
        for (int m = -l; m <= l; ++m) {
            const cplx y = spherical_harmonic(l, m, 0.0, 0.9);
            const double want = (m == 0) ? std::sqrt((2.0 * l + 1.0) / (4.0 * kPi)) : 0.0;
            CHECK(std::abs(y - want) < 1e-14);
        }
    // Addition formula at two random locations.
    const double t1 = 0.8, p1 = 2.2, t2 = 2.1, p2 = 5.0;
    const auto v1 = unit_vector(t1, p1), v2 = unit_vector(t2, p2);
    const double x = v1[0] * v2[0] + v1[1] * v2[1] + v1[2] * v2[2];
    cplx sum(0.0, 0.0);
    for (int m = -3; m <= 3; ++m) sum += std::conj(spherical_harmonic(3, m, t1, p1)) * spherical_harmonic(3, m, t2, p2);
    CHECK(std::abs(sum - 7.0 / (4.0 * kPi) * legendre(3, x)) < 1e-12);
}

TEST_CASE("harmonics are orthonormal under the grid quadrature") {
    const int lmax = 6;
    const SphereGrid grid = SphereGrid::for_band_limit(lmax);
    double worst = 0.0;
    for (int l1 = 0; l1 <= lmax; ++l1)
        for (int m1 = -l1; m1 <= l1; ++m1)
            for (int l2 = 0; l2 <= lmax; ++l2)
                for (int m2 = -l2; m2 <= l2; ++m2) {
                    cplx s(0.0, 0.0);
                    for (int i = 0; i < grid.n_theta(); ++i)
                        for (int j = 0; j < grid.n_phi(); ++j)
                            s += grid.colat_weights()[i] * (2 * kPi / grid.n_phi()) *
                                 std::conj(spherical_harmonic(l1, m1, grid.colatitudes()[i], grid.longitudes()[j])) *
                                 spherical_harmonic(l2, m2, grid.colatitudes()[i], grid.longitudes()[j]);
                    worst = std::max(worst, std::abs(s - ((l1 == l2 && m1 == m2) ? 1.0 : 0.0)));
                }
    CHECK(worst < 1e-12);
}

TEST_CASE("synthesis and analysis") {
    Rng rng(21);
    auto grid = std::make_shared<const SphereGrid>(SphereGrid::for_band_limit(32));

    HarmonicCoeffs c0(4);
    c0.set(0, 0, 2.5);
    const SphereMap constant = synthesize(c0, grid);
    CHECK((constant.values.array() - 2.5 / std::sqrt(4.0 * kPi)).abs().maxCoeff() < 1e-13);

    const HarmonicCoeffs c = testing_support::random_real_coeffs(32, rng);
    const SphereMap map = synthesize(c, grid);
    CHECK(testing_support::max_abs_diff(analyze(map, 32), c) < 1e-9);

    // Degree filter evaluated at the north pole.
    const HarmonicCoeffs small = testing_support::random_real_coeffs(5, rng);
    CHECK(evaluate(small, 0.0, 0.0) ==
          doctest::Approx([&] {
              double s = 0.0;
              for (int l = 0; l <= 5; ++l) s += std::sqrt((2.0 * l + 1.0) / (4.0 * kPi)) * small(l, 0).real();
              return s;
          }()));
    auto g8 = std::make_shared<const SphereGrid>(SphereGrid::for_band_limit(8));
    const SphereMap only3 = synthesize(small, g8, std::vector<int>{3});
    CHECK(only3.values(0, 0) == doctest::Approx(evaluate(small, g8->colatitudes()[0], g8->longitudes()[0]) -
                                                [&] {
                                                    HarmonicCoeffs rest = small;
                                                    for (int m = -3; m <= 3; ++m) rest.set(3, m, 0.0);
                                                    return evaluate(rest, g8->colatitudes()[0], g8->longitudes()[0]);
                                                }()));

    // Parseval.
    double power = 0.0;
    for (const cplx& z : c.values()) power += std::norm(z);
    double quad = 0.0;
    for (int i = 0; i < grid->n_theta(); ++i)
        for (int j = 0; j < grid->n_phi(); ++j)
            quad += grid->colat_weights()[i] * (2 * kPi / grid->n_phi()) * map.values(i, j) * map.values(i, j);
    CHECK(std::abs(power - quad) < 1e-9 * power);
}

TEST_CASE("analysis of a constant and of a single coefficient") {
    auto grid = std::make_shared<const SphereGrid>(SphereGrid::for_band_limit(10));
    SphereMap m{grid, Eigen::MatrixXd::Constant(grid->n_theta(), grid->n_phi(), 1.7)};
    const HarmonicCoeffs c = analyze(m, 10);
    CHECK(c(0, 0).real() == doctest::Approx(1.7 * std::sqrt(4.0 * kPi)));
    for (std::size_t i = 1; i < c.size(); ++i) CHECK(std::abs(c.values()[i]) < 1e-12);

    HarmonicCoeffs one(10);
    one.set(4, 2, cplx(0.3, -0.8));
    one.set(4, -2, std::conj(cplx(0.3, -0.8)));
    CHECK(testing_support::max_abs_diff(analyze(synthesize(one, grid), 10), one) < 1e-13);
}

TEST_CASE("FFT longitude path agrees with direct sums") {
    Rng rng(22);
    auto grid = std::make_shared<const SphereGrid>(SphereGrid::for_band_limit(24));
    const HarmonicCoeffs c = testing_support::random_real_coeffs(24, rng);
    TransformOptions fft;
    fft.use_fft = true;
    const SphereMap a = synthesize(c, grid), b = synthesize(c, grid, std::nullopt, fft);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(testing_support::max_abs_diff(analyze(a, 24), analyze(a, 24, fft)) < 1e-12);
}

TEST_CASE("Legendre transform and covariance evaluation") {
    const AngularPowerSpectrum one = legendre_transform([](double) { return 1.0; }, 6, 16);
    CHECK(one.f[0] == doctest::Approx(4.0 * kPi));
    for (int l = 1; l <= 6; ++l) CHECK(std::abs(one.f[l]) < 1e-13);
    const AngularPowerSpectrum p2 = legendre_transform([](double x) { return legendre(2, x); }, 6, 16);
    CHECK(p2.f[2] == doctest::Approx(4.0 * kPi / 5.0));
    for (int l : {0, 1, 3, 4, 5, 6}) CHECK(std::abs(p2.f[l]) < 1e-13);

    AngularPowerSpectrum spike;
    spike.f = {0.0, 0.0, 1.0};
    CHECK(covariance_eval(spike, 1.0) == doctest::Approx(5.0 / (4.0 * kPi)));

    const AngularPowerSpectrum lb = model_spectrum(LaplaceBeltrami{1.0, 64}, 64);
    double variance = 0.0;
    for (int l = 0; l <= 64; ++l) variance += lb.f[l] * (2.0 * l + 1.0) / (4.0 * kPi);
    CHECK(covariance_eval(lb, 1.0) == doctest::Approx(variance).epsilon(1e-14));
    const AngularPowerSpectrum back = legendre_transform([&](double x) { return covariance_eval(lb, x); }, 16, 80);
    for (int l = 0; l <= 16; ++l) {
        const double d = l * (l + 1.0) + 1.0;
        CHECK(std::abs(back.f[l] - 1.0 / (d * d)) < 1e-10);
    }
}

TEST_CASE("indefinite covariances are rejected") {
    // -P_3 has a materially negative degree-3 coefficient.
    CHECK_THROWS_AS(legendre_transform([](double x) { return -legendre(3, x); }, 5, 16), NotPositiveDefinite);
}

}  // TEST_SUITE
