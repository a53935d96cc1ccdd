#pragma once

#include <array>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "isospec/coeffs.hpp"

namespace isospec {

using Rng = std::mt19937_64;

// Largest degree accepted by the 3j / d-matrix evaluators. Accuracy is
// 1e-10 relative up to degree 64 and degrades gradually beyond.
inline constexpr int kMaxWignerDegree = 256;

double wigner_3j(int l1, int l2, int l3, int m1, int m2, int m3);

// 3j(l1 l2 l3; 0 0 0) from its closed form.
double wigner_3j_zero(int l1, int l2, int l3);

// <l1 k1; l2 k2 | l k>
double clebsch_gordan(int l1, int k1, int l2, int k2, int l, int k);

// Integral of Y_{l1}^{m1} Y_{l2}^{m2} Y_{l3}^{m3} over the sphere.
double gaunt(int l1, int m1, int l2, int m2, int l3, int m3);

bool triangle_ok(int l1, int l2, int l3) noexcept;

// Element of SO(3) as z-y-z Euler angles: R = Rz(phi) Ry(theta) Rz(gamma).
struct Rotation {
    double phi = 0.0;    // [0, 2pi)
    double theta = 0.0;  // [0, pi]
    double gamma = 0.0;  // [0, 2pi)
};

using Matrix3 = std::array<std::array<double, 3>, 3>;

Rotation make_rotation(double phi, double theta, double gamma);
Matrix3 rotation_matrix(const Rotation& g);
Rotation rotation_from_matrix(const Matrix3& r);
Rotation compose(const Rotation& g1, const Rotation& g2);  // g1 after g2
Rotation inverse(const Rotation& g);

// Unit vector of the point (theta, phi) and its inverse map.
std::array<double, 3> unit_vector(double theta, double phi);
std::pair<double, double> polar_angles(const std::array<double, 3>& v);
std::array<double, 3> apply(const Rotation& g, const std::array<double, 3>& v);

double wigner_d_element(int l, int m, int k, double theta);

// Small d-matrix, entry (m + l, k + l) holds d_{m,k}(theta).
Eigen::MatrixXd wigner_d(int l, double theta);

struct WignerDBlock {
    int degree = 0;
    Eigen::MatrixXcd entries;  // entry (k + l, m + l) holds D_{k,m}
    cplx operator()(int k, int m) const { return entries(k + degree, m + degree); }
};

// D_{m,k}(phi, theta, gamma) = exp(-i m phi) d_{m,k}(theta) exp(-i k gamma).
WignerDBlock wigner_D(int l, const Rotation& g);
cplx wigner_D_element(int l, int m, int k, const Rotation& g);

// Z_l -> D^{(l)}(g) Z_l for every degree.
HarmonicCoeffs rotate_coefficients(const HarmonicCoeffs& c, const Rotation& g);

Rotation sample_haar_rotation(Rng& rng);

struct SO3Resolution {
    int n_theta = 1;  // Gauss-Legendre nodes in cos(theta)
    int n_phi = 1;    // equispaced points in phi
    int n_gamma = 1;  // equispaced points in gamma

    // Exact for products of D-matrix entries of total degree <= degree.
    static SO3Resolution for_degree(int degree);
};

struct SO3Node {
    Rotation g;
    double weight = 0.0;  // weights sum to 1
};

// Product rule behind so3_integral.
std::vector<SO3Node> so3_quadrature(const SO3Resolution& res);

// Normalized Haar integral of f.
cplx so3_integral(const std::function<cplx(const Rotation&)>& f, const SO3Resolution& res);

}  // namespace isospec
