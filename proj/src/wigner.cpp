#include "isospec/wigner.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "isospec/errors.hpp"
#include "isospec/harmonics.hpp"
#include "isospec/special.hpp"

namespace isospec {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

void check_degree_order(const char* who, int l, int m) {
    if (l < 0) throw InvalidArgument(std::string(who) + ": negative degree " + std::to_string(l));
    if (l > kMaxWignerDegree)
        throw InvalidArgument(std::string(who) + ": degree " + std::to_string(l) + " exceeds supported maximum " +
                              std::to_string(kMaxWignerDegree));
    if (m < -l || m > l)
        throw InvalidArgument(std::string(who) + ": order " + std::to_string(m) + " outside [-" + std::to_string(l) +
                              "," + std::to_string(l) + "]");
}

// Neumaier-compensated accumulator.
struct CompensatedSum {
    long double sum = 0.0L;
    long double comp = 0.0L;
    void add(long double x) {
        const long double t = sum + x;
        if (std::fabs(sum) >= std::fabs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    long double value() const { return sum + comp; }
};

double wrap_angle(double a) {
    double r = std::fmod(a, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;
    return r;
}

}  // namespace

bool triangle_ok(int l1, int l2, int l3) noexcept {
    return l1 >= 0 && l2 >= 0 && l3 >= 0 && l3 >= std::abs(l1 - l2) && l3 <= l1 + l2;
}

double wigner_3j(int l1, int l2, int l3, int m1, int m2, int m3) {
    check_degree_order("wigner_3j", l1, m1);
    check_degree_order("wigner_3j", l2, m2);
    check_degree_order("wigner_3j", l3, m3);
    if (m1 + m2 + m3 != 0 || !triangle_ok(l1, l2, l3)) return 0.0;
    if (m1 == 0 && m2 == 0 && m3 == 0 && (l1 + l2 + l3) % 2 != 0) return 0.0;

    const int tmin = std::max({0, l2 - l3 - m1, l1 - l3 + m2});
    const int tmax = std::min({l1 + l2 - l3, l1 - m1, l2 + m2});
    const long double log_delta = log_factorial(l1 + l2 - l3) + log_factorial(l1 - l2 + l3) +
                                  log_factorial(-l1 + l2 + l3) - log_factorial(l1 + l2 + l3 + 1);
    const long double log_pref =
        0.5L * (log_delta + log_factorial(l1 + m1) + log_factorial(l1 - m1) + log_factorial(l2 + m2) +
                log_factorial(l2 - m2) + log_factorial(l3 + m3) + log_factorial(l3 - m3));
    CompensatedSum acc;
    for (int t = tmin; t <= tmax; ++t) {
        const long double log_den = log_factorial(t) + log_factorial(l3 - l2 + t + m1) +
                                    log_factorial(l3 - l1 + t - m2) + log_factorial(l1 + l2 - l3 - t) +
                                    log_factorial(l1 - t - m1) + log_factorial(l2 - t + m2);
        const long double term = std::exp(log_pref - log_den);
        acc.add((t % 2 == 0) ? term : -term);
    }
    const int phase = l1 - l2 - m3;
    const long double value = (phase % 2 == 0) ? acc.value() : -acc.value();
    return static_cast<double>(value);
}

double wigner_3j_zero(int l1, int l2, int l3) {
    if (l1 < 0 || l2 < 0 || l3 < 0) throw InvalidArgument("wigner_3j_zero: negative degree");
    if (std::max({l1, l2, l3}) > kMaxWignerDegree)
        throw InvalidArgument("wigner_3j_zero: degree exceeds supported maximum");
    if (!triangle_ok(l1, l2, l3))
        throw InvalidArgument("wigner_3j_zero: triangle inequality violated for (" + std::to_string(l1) + "," +
                              std::to_string(l2) + "," + std::to_string(l3) + ")");
    const int big_l = l1 + l2 + l3;
    if (big_l % 2 != 0) return 0.0;
    const int h = big_l / 2;
    const long double log_mag = 0.5L * (log_factorial(big_l - 2 * l1) + log_factorial(big_l - 2 * l2) +
                                        log_factorial(big_l - 2 * l3) - log_factorial(big_l + 1)) +
                                log_factorial(h) - log_factorial(h - l1) - log_factorial(h - l2) -
                                log_factorial(h - l3);
    const double mag = static_cast<double>(std::exp(log_mag));
    return (h % 2 == 0) ? mag : -mag;
}

double clebsch_gordan(int l1, int k1, int l2, int k2, int l, int k) {
    check_degree_order("clebsch_gordan", l1, k1);
    check_degree_order("clebsch_gordan", l2, k2);
    check_degree_order("clebsch_gordan", l, k);
    if (k1 + k2 != k) return 0.0;
    const double w = wigner_3j(l1, l2, l, k1, k2, -k);
    const int phase = l1 - l2 + k;
    const double sign = ((phase % 2) + 2) % 2 == 0 ? 1.0 : -1.0;
    return sign * std::sqrt(2.0 * l + 1.0) * w;
}

double gaunt(int l1, int m1, int l2, int m2, int l3, int m3) {
    check_degree_order("gaunt", l1, m1);
    check_degree_order("gaunt", l2, m2);
    check_degree_order("gaunt", l3, m3);
    if (!triangle_ok(l1, l2, l3) || (l1 + l2 + l3) % 2 != 0 || m1 + m2 + m3 != 0) return 0.0;
    const double norm = std::sqrt((2.0 * l1 + 1.0) * (2.0 * l2 + 1.0) * (2.0 * l3 + 1.0) / (4.0 * M_PI));
    return norm * wigner_3j_zero(l1, l2, l3) * wigner_3j(l1, l2, l3, m1, m2, m3);
}

Rotation make_rotation(double phi, double theta, double gamma) {
    if (!std::isfinite(phi) || !std::isfinite(theta) || !std::isfinite(gamma))
        throw InvalidArgument("make_rotation: non-finite Euler angle");
    // Bring theta into [0, pi] using Rz(a) Ry(-b) Rz(c) = Rz(a + pi) Ry(b) Rz(c + pi).
    double t = std::fmod(theta, kTwoPi);
    if (t < 0.0) t += kTwoPi;
    if (t > M_PI) {
        t = kTwoPi - t;
        phi += M_PI;
        gamma += M_PI;
    }
    return Rotation{wrap_angle(phi), t, wrap_angle(gamma)};
}

Matrix3 rotation_matrix(const Rotation& g) {
    const double ca = std::cos(g.phi), sa = std::sin(g.phi);
    const double cb = std::cos(g.theta), sb = std::sin(g.theta);
    const double cc = std::cos(g.gamma), sc = std::sin(g.gamma);
    return Matrix3{{{ca * cb * cc - sa * sc, -ca * cb * sc - sa * cc, ca * sb},
                    {sa * cb * cc + ca * sc, -sa * cb * sc + ca * cc, sa * sb},
                    {-sb * cc, sb * sc, cb}}};
}

Rotation rotation_from_matrix(const Matrix3& r) {
    const double sb = 0.5 * (std::hypot(r[0][2], r[1][2]) + std::hypot(r[2][0], r[2][1]));
    const double theta = std::atan2(sb, r[2][2]);
    double phi = 0.0;
    double gamma = 0.0;
    if (sb > 0.5) {
        phi = std::atan2(r[1][2], r[0][2]);
        gamma = std::atan2(r[2][1], -r[2][0]);
    } else if (r[2][2] > 0.0) {
        // Near the identity only phi + gamma is well conditioned.
        const double sum = std::atan2(r[1][0] - r[0][1], r[0][0] + r[1][1]);
        phi = sb > 0.0 ? std::atan2(r[1][2], r[0][2]) : sum;
        gamma = sum - phi;
    } else {
        // Near a half turn about a horizontal axis only phi - gamma is.
        const double diff = std::atan2(-(r[1][0] + r[0][1]), r[1][1] - r[0][0]);
        phi = sb > 0.0 ? std::atan2(r[1][2], r[0][2]) : diff;
        gamma = phi - diff;
    }
    return Rotation{wrap_angle(phi), theta, wrap_angle(gamma)};
}

Rotation compose(const Rotation& g1, const Rotation& g2) {
    const Matrix3 a = rotation_matrix(g1);
    const Matrix3 b = rotation_matrix(g2);
    Matrix3 c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += a[i][k] * b[k][j];
            c[i][j] = s;
        }
    return rotation_from_matrix(c);
}

Rotation inverse(const Rotation& g) {
    // (Rz(a) Ry(b) Rz(c))^{-1} = Rz(pi - c) Ry(b) Rz(pi - a).
    return Rotation{wrap_angle(M_PI - g.gamma), g.theta, wrap_angle(M_PI - g.phi)};
}

std::array<double, 3> unit_vector(double theta, double phi) {
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

std::pair<double, double> polar_angles(const std::array<double, 3>& v) {
    const double theta = std::atan2(std::hypot(v[0], v[1]), v[2]);
    return {theta, wrap_angle(std::atan2(v[1], v[0]))};
}

std::array<double, 3> apply(const Rotation& g, const std::array<double, 3>& v) {
    const Matrix3 r = rotation_matrix(g);
    std::array<double, 3> out{};
    for (int i = 0; i < 3; ++i) out[i] = r[i][0] * v[0] + r[i][1] * v[1] + r[i][2] * v[2];
    return out;
}

double wigner_d_element(int l, int m, int k, double theta) {
    check_degree_order("wigner_d", l, m);
    check_degree_order("wigner_d", l, k);
    if (!(theta >= 0.0 && theta <= M_PI))
        throw InvalidArgument("wigner_d: theta " + std::to_string(theta) + " outside [0, pi]");
    const long double c = std::cos(0.5L * theta);
    const long double s = std::sin(0.5L * theta);
    const long double log_num =
        0.5L * (log_factorial(l + m) + log_factorial(l - m) + log_factorial(l + k) + log_factorial(l - k));
    const int smin = std::max(0, k - m);
    const int smax = std::min(l + k, l - m);
    CompensatedSum acc;
    for (int q = smin; q <= smax; ++q) {
        const int pc = 2 * l + k - m - 2 * q;
        const int ps = m - k + 2 * q;
        const long double log_den =
            log_factorial(l + k - q) + log_factorial(q) + log_factorial(m - k + q) + log_factorial(l - m - q);
        const long double term = std::exp(log_num - log_den) * std::pow(c, pc) * std::pow(s, ps);
        acc.add(((m - k + q) % 2 == 0) ? term : -term);
    }
    return static_cast<double>(acc.value());
}

Eigen::MatrixXd wigner_d(int l, double theta) {
    check_degree_order("wigner_d", l, 0);
    if (!(theta >= 0.0 && theta <= M_PI))
        throw InvalidArgument("wigner_d: theta " + std::to_string(theta) + " outside [0, pi]");
    Eigen::MatrixXd d(2 * l + 1, 2 * l + 1);
    for (int m = -l; m <= l; ++m)
        for (int k = -l; k <= l; ++k) d(m + l, k + l) = wigner_d_element(l, m, k, theta);
    return d;
}

WignerDBlock wigner_D(int l, const Rotation& g) {
    const Eigen::MatrixXd d = wigner_d(l, g.theta);
    WignerDBlock block;
    block.degree = l;
    block.entries.resize(2 * l + 1, 2 * l + 1);
    for (int m = -l; m <= l; ++m) {
        const cplx left = std::polar(1.0, -m * g.phi);
        for (int k = -l; k <= l; ++k)
            block.entries(m + l, k + l) = left * d(m + l, k + l) * std::polar(1.0, -k * g.gamma);
    }
    return block;
}

cplx wigner_D_element(int l, int m, int k, const Rotation& g) {
    return std::polar(1.0, -m * g.phi) * wigner_d_element(l, m, k, g.theta) * std::polar(1.0, -k * g.gamma);
}

HarmonicCoeffs rotate_coefficients(const HarmonicCoeffs& c, const Rotation& g) {
    HarmonicCoeffs out(c.lmax());
    std::vector<cplx> block;
    for (int l = 0; l <= c.lmax(); ++l) {
        const WignerDBlock d = wigner_D(l, g);
        const cplx* z = c.block(l);
        block.assign(2 * l + 1, cplx(0.0, 0.0));
        for (int k = -l; k <= l; ++k) {
            cplx s(0.0, 0.0);
            for (int m = -l; m <= l; ++m) s += d(k, m) * z[m + l];
            block[k + l] = s;
        }
        out.set_block(l, block.data());
    }
    return out;
}

Rotation sample_haar_rotation(Rng& rng) {
    std::uniform_real_distribution<double> angle(0.0, kTwoPi);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double phi = angle(rng);
    const double cos_theta = 1.0 - 2.0 * unit(rng);
    const double gamma = angle(rng);
    return Rotation{phi, std::acos(cos_theta), gamma};
}

SO3Resolution SO3Resolution::for_degree(int degree) {
    if (degree < 0) throw InvalidArgument("SO3Resolution: negative degree");
    return SO3Resolution{degree + 1, 2 * degree + 2, 2 * degree + 2};
}

std::vector<SO3Node> so3_quadrature(const SO3Resolution& res) {
    if (res.n_theta < 1 || res.n_phi < 1 || res.n_gamma < 1)
        throw InvalidArgument("so3_quadrature: every quadrature size must be positive");
    const GaussLegendre gl = gauss_legendre(res.n_theta);
    std::vector<SO3Node> nodes;
    nodes.reserve(static_cast<std::size_t>(res.n_theta) * res.n_phi * res.n_gamma);
    const double norm = 1.0 / static_cast<double>(res.n_phi * res.n_gamma);
    for (int i = 0; i < res.n_theta; ++i) {
        const double theta = std::acos(gl.nodes[i]);
        for (int a = 0; a < res.n_phi; ++a)
            for (int b = 0; b < res.n_gamma; ++b)
                nodes.push_back({Rotation{kTwoPi * a / res.n_phi, theta, kTwoPi * b / res.n_gamma},
                                 0.5 * gl.weights[i] * norm});
    }
    return nodes;
}

cplx so3_integral(const std::function<cplx(const Rotation&)>& f, const SO3Resolution& res) {
    if (res.n_theta < 1 || res.n_phi < 1 || res.n_gamma < 1)
        throw InvalidArgument("so3_integral: every quadrature size must be positive");
    cplx total(0.0, 0.0);
    for (const SO3Node& node : so3_quadrature(res)) total += node.weight * f(node.g);
    return total;
}

}  // namespace isospec
