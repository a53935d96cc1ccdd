#include "isospec/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "isospec/cumulants.hpp"
#include "isospec/errors.hpp"
#include "isospec/harmonics.hpp"
#include "isospec/models.hpp"
#include "isospec/simulate.hpp"
#include "isospec/spectra.hpp"
#include "isospec/wigner.hpp"

namespace isospec {

namespace {

constexpr double kPi = std::numbers::pi;

class Suite {
public:
    explicit Suite(VerifyReport& report) : report_(report) {}

    void add(const std::string& name, double residual, double tolerance, const std::string& note = {}) {
        const bool ok = std::isfinite(residual) && residual <= tolerance;
        report_.checks.push_back(CheckResult{name, ok, residual, tolerance, note});
    }

    // Runs body and records an exception as a failed check.
    template <class F>
    void guarded(const std::string& name, F&& body) {
        try {
            body();
        } catch (const std::exception& ex) {
            report_.checks.push_back(CheckResult{name, false, std::nan(""), 0.0, std::string("exception: ") + ex.what()});
        }
    }

private:
    VerifyReport& report_;
};

// --- Wigner symbols -----------------------------------------------------

void check_selection_rules(Suite& s, const ThreeJFunction& tj, int lmax) {
    double worst = 0.0;
    long tested = 0;
    for (int l1 = 0; l1 <= lmax; ++l1)
        for (int l2 = 0; l2 <= lmax; ++l2)
            for (int l3 = 0; l3 <= lmax; ++l3) {
                const bool tri = triangle_ok(l1, l2, l3);
                for (int m1 = -l1; m1 <= l1; ++m1)
                    for (int m2 = -l2; m2 <= l2; ++m2)
                        for (int m3 = -l3; m3 <= l3; ++m3) {
                            const bool zero_sum = (m1 + m2 + m3 == 0);
                            if (tri && zero_sum) continue;
                            worst = std::max(worst, std::abs(tj(l1, l2, l3, m1, m2, m3)));
                            ++tested;
                        }
            }
    s.add("wigner3j.selection_rules", worst, 0.0, std::to_string(tested) + " forbidden symbols, degrees <= " + std::to_string(lmax));
}

// Tables of 3j(l1 l2 l; m1 m2 -m1-m2) for every l in the coupling range.
struct PairTables {
    int l1, l2, lo, hi;
    std::vector<std::vector<double>> t;  // t[l - lo][(m1 + l1) * (2 l2 + 1) + m2 + l2]
    double at(int l, int m1, int m2) const {
        return t[static_cast<std::size_t>(l - lo)][static_cast<std::size_t>((m1 + l1) * (2 * l2 + 1) + m2 + l2)];
    }
};

// With cyclic = true the symbols are evaluated as 3j(l2 l l1; m2 m m1), so the
// orthogonality sums also exercise the cyclic symmetry of the source.
PairTables pair_tables(const ThreeJFunction& tj, int l1, int l2, bool cyclic = false) {
    PairTables pt{l1, l2, std::abs(l1 - l2), l1 + l2, {}};
    for (int l = pt.lo; l <= pt.hi; ++l) {
        std::vector<double> v(static_cast<std::size_t>((2 * l1 + 1) * (2 * l2 + 1)), 0.0);
        for (int m1 = -l1; m1 <= l1; ++m1)
            for (int m2 = -l2; m2 <= l2; ++m2) {
                const int m = -m1 - m2;
                if (std::abs(m) > l) continue;
                v[static_cast<std::size_t>((m1 + l1) * (2 * l2 + 1) + m2 + l2)] =
                    cyclic ? tj(l2, l, l1, m2, m, m1) : tj(l1, l2, l, m1, m2, m);
            }
        pt.t.push_back(std::move(v));
    }
    return pt;
}

void check_orthogonality(Suite& s, const ThreeJFunction& tj, int lmax, int lmax_degree_sum) {
    double worst = 0.0, worst_deg = 0.0, worst_norm = 0.0;
    for (int l1 = 0; l1 <= lmax; ++l1)
        for (int l2 = 0; l2 <= lmax; ++l2) {
            const PairTables pt = pair_tables(tj, l1, l2);
            const PairTables pc = pair_tables(tj, l1, l2, true);
            // (2l+1) sum_{m1,m2} 3j(l1 l2 l; m1 m2 m) 3j(l1 l2 j; m1 m2 m) = delta_lj
            for (int l = pt.lo; l <= pt.hi; ++l)
                for (int j = pt.lo; j <= pt.hi; ++j)
                    for (int m = -std::min(l, j); m <= std::min(l, j); ++m) {
                        double sum = 0.0;
                        for (int m1 = -l1; m1 <= l1; ++m1) {
                            const int m2 = -m - m1;
                            if (std::abs(m2) > l2) continue;
                            sum += pt.at(l, m1, m2) * pc.at(j, m1, m2);
                        }
                        const double target = (l == j) ? 1.0 : 0.0;
                        worst = std::max(worst, std::abs((2.0 * l + 1.0) * sum - target));
                        if (m == 0 && l == j) worst_norm = std::max(worst_norm, std::abs((2.0 * l + 1.0) * sum - 1.0));
                    }
            if (l1 > lmax_degree_sum || l2 > lmax_degree_sum) continue;
            // sum_{l,m} (2l+1) 3j(l1 l2 l; m1 m2 m) 3j(l1 l2 l; m1' m2' m) = delta delta
            for (int m1 = -l1; m1 <= l1; ++m1)
                for (int m2 = -l2; m2 <= l2; ++m2)
                    for (int n1 = -l1; n1 <= l1; ++n1) {
                        const int n2 = m1 + m2 - n1;
                        if (std::abs(n2) > l2) continue;
                        double sum = 0.0;
                        for (int l = pt.lo; l <= pt.hi; ++l) sum += (2.0 * l + 1.0) * pt.at(l, m1, m2) * pc.at(l, n1, n2);
                        const double target = (m1 == n1) ? 1.0 : 0.0;
                        worst_deg = std::max(worst_deg, std::abs(sum - target));
                    }
        }
    s.add("wigner3j.orthogonality", worst, 1e-10, "orders summed, degrees <= " + std::to_string(lmax));
    s.add("wigner3j.orthogonality_degrees", worst_deg, 1e-10, "degrees summed, degrees <= " + std::to_string(lmax_degree_sum));
    s.add("wigner3j.normalization", worst_norm, 1e-12, "(2l3+1) sum 3j(m1 m2 0)^2 = 1");
}

void check_closed_form(Suite& s, const ThreeJFunction& tj, int lmax) {
    double worst = 0.0;
    for (int l1 = 0; l1 <= lmax; ++l1)
        for (int l2 = 0; l2 <= lmax; ++l2)
            for (int l3 = std::abs(l1 - l2); l3 <= l1 + l2; ++l3)
                worst = std::max(worst, std::abs(wigner_3j_zero(l1, l2, l3) - tj(l1, l2, l3, 0, 0, 0)));
    worst = std::max(worst, std::abs(wigner_3j_zero(2, 2, 2) + std::sqrt(2.0 / 35.0)));
    worst = std::max(worst, std::abs(wigner_3j_zero(1, 1, 2) - std::sqrt(2.0 / 15.0)));
    worst = std::max(worst, std::abs(wigner_3j_zero(1, 1, 1)));
    s.add("wigner3j.closed_form_zero_orders", worst, 1e-12, "degrees <= " + std::to_string(lmax) + ", (2,2,2) = -sqrt(2/35)");
}

void check_known_values(Suite& s, const ThreeJFunction& tj) {
    double worst = 0.0;
    worst = std::max(worst, std::abs(tj(1, 1, 0, 1, -1, 0) - 1.0 / std::sqrt(3.0)));
    worst = std::max(worst, std::abs(tj(1, 1, 2, 1, -1, 0) - 1.0 / std::sqrt(30.0)));
    worst = std::max(worst, std::abs(tj(1, 2, 3, 0, 0, 1)));
    s.add("wigner3j.reference_values", worst, 1e-10);

    double cg = 0.0;
    cg = std::max(cg, std::abs(clebsch_gordan(1, 0, 1, 0, 0, 0) + 1.0 / std::sqrt(3.0)));
    cg = std::max(cg, std::abs(clebsch_gordan(1, 0, 1, 0, 2, 0) - std::sqrt(2.0 / 3.0)));
    cg = std::max(cg, std::abs(clebsch_gordan(1, 1, 1, 0, 2, 0)));
    cg = std::max(cg, std::abs(gaunt(1, 0, 1, 0, 2, 0) - 1.0 / std::sqrt(5.0 * kPi)));
    cg = std::max(cg, std::abs(gaunt(1, 0, 1, 0, 1, 0)));
    s.add("wigner3j.clebsch_gordan_gaunt", cg, 1e-10);
}

// --- D-matrices and Haar integrals ----------------------------------------

void check_d_matrices(Suite& s, Rng& rng) {
    double unit = 0.0, comp = 0.0, ident = 0.0, inv = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const Rotation g1 = sample_haar_rotation(rng);
        const Rotation g2 = sample_haar_rotation(rng);
        for (int l = 0; l <= 8; ++l) {
            const Eigen::MatrixXcd a = wigner_D(l, g1).entries;
            const Eigen::MatrixXcd b = wigner_D(l, g2).entries;
            const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(2 * l + 1, 2 * l + 1);
            unit = std::max(unit, (a.adjoint() * a - id).cwiseAbs().maxCoeff());
            comp = std::max(comp, (wigner_D(l, compose(g1, g2)).entries - a * b).cwiseAbs().maxCoeff());
            inv = std::max(inv, (wigner_D(l, compose(g1, inverse(g1))).entries - id).cwiseAbs().maxCoeff());
            for (int m = -l; m <= l; ++m) {
                const cplx y = spherical_harmonic(l, m, g1.theta, g1.phi);
                const cplx d = std::sqrt((2.0 * l + 1.0) / (4.0 * kPi)) * std::conj(a(m + l, l));
                ident = std::max(ident, std::abs(y - d));
            }
        }
    }
    s.add("wignerD.unitarity", unit, 1e-12, "degrees <= 8");
    s.add("wignerD.composition", comp, 1e-10);
    s.add("wignerD.inverse", inv, 1e-12);
    s.add("wignerD.harmonic_identity", ident, 1e-12, "sqrt((2l+1)/4pi) conj(D_{m0}) = Y_l^m");
}

// D blocks of every degree <= lmax at every node of a quadrature rule.
struct DGrid {
    std::vector<SO3Node> nodes;
    int lmax;
    std::vector<std::vector<Eigen::MatrixXcd>> blocks;  // [node][l]

    DGrid(const SO3Resolution& res, int lmax_) : nodes(so3_quadrature(res)), lmax(lmax_) {
        blocks.resize(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i)
            for (int l = 0; l <= lmax; ++l) blocks[i].push_back(wigner_D(l, nodes[i].g).entries);
    }
    cplx D(std::size_t node, int l, int k, int m) const { return blocks[node][static_cast<std::size_t>(l)](k + l, m + l); }
};

void check_haar_low_order(Suite& s, int lmax) {
    const DGrid grid(SO3Resolution::for_degree(3 * lmax), lmax);
    const std::size_t nn = grid.nodes.size();
    double single = 0.0, dbl = 0.0, triple = 0.0;
    long ntriple = 0;
    for (int l = 0; l <= lmax; ++l)
        for (int k = -l; k <= l; ++k)
            for (int m = -l; m <= l; ++m) {
                cplx sum(0.0, 0.0);
                for (std::size_t i = 0; i < nn; ++i) sum += grid.nodes[i].weight * grid.D(i, l, k, m);
                single = std::max(single, std::abs(sum - cplx(l == 0 ? 1.0 : 0.0, 0.0)));
            }
    for (int l1 = 0; l1 <= lmax; ++l1)
        for (int l2 = 0; l2 <= lmax; ++l2)
            for (int k1 = -l1; k1 <= l1; ++k1)
                for (int m1 = -l1; m1 <= l1; ++m1)
                    for (int k2 = -l2; k2 <= l2; ++k2)
                        for (int m2 = -l2; m2 <= l2; ++m2) {
                            if (k1 != k2 || m1 != m2) {
                                if ((k1 + m1 + k2 + m2) % 3 != 0) continue;  // thin the trivially-zero cases
                            }
                            cplx sum(0.0, 0.0);
                            for (std::size_t i = 0; i < nn; ++i)
                                sum += grid.nodes[i].weight * std::conj(grid.D(i, l1, k1, m1)) * grid.D(i, l2, k2, m2);
                            const double target = (l1 == l2 && k1 == k2 && m1 == m2) ? 1.0 / (2.0 * l1 + 1.0) : 0.0;
                            dbl = std::max(dbl, std::abs(sum - target));
                        }
    for (int l1 = 0; l1 <= lmax; ++l1)
        for (int l2 = l1; l2 <= lmax; ++l2)
            for (int l3 = l2; l3 <= lmax; ++l3)
                for (int k1 = -l1; k1 <= l1; ++k1)
                    for (int k2 = -l2; k2 <= l2; ++k2)
                        for (int m1 = -l1; m1 <= l1; ++m1)
                            for (int m2 = -l2; m2 <= l2; ++m2) {
                                const int k3 = -k1 - k2, m3 = -m1 - m2;
                                if (std::abs(k3) > l3 || std::abs(m3) > l3) continue;
                                cplx sum(0.0, 0.0);
                                for (std::size_t i = 0; i < nn; ++i)
                                    sum += grid.nodes[i].weight * grid.D(i, l1, k1, m1) * grid.D(i, l2, k2, m2) *
                                           grid.D(i, l3, k3, m3);
                                const double target = wigner_3j(l1, l2, l3, k1, k2, k3) * wigner_3j(l1, l2, l3, m1, m2, m3);
                                triple = std::max(triple, std::abs(sum - target));
                                ++ntriple;
                            }
    s.add("haar.single_product", single, 1e-10, "degrees <= " + std::to_string(lmax));
    s.add("haar.double_product", dbl, 1e-10, "degrees <= " + std::to_string(lmax));
    s.add("haar.triple_product", triple, 1e-10, std::to_string(ntriple) + " zero-sum index sets, degrees <= " + std::to_string(lmax));
}

// Every zero-sum order tuple for the degrees.
std::vector<std::vector<int>> zero_sum_orders(const std::vector<int>& l) {
    std::vector<std::vector<int>> out;
    const int p = static_cast<int>(l.size());
    std::vector<int> m(p);
    auto rec = [&](auto&& self, int i, int partial) -> void {
        if (i == p - 1) {
            if (std::abs(partial) <= l[p - 1]) {
                m[p - 1] = -partial;
                out.push_back(m);
            }
            return;
        }
        for (int v = -l[i]; v <= l[i]; ++v) {
            m[i] = v;
            self(self, i + 1, partial + v);
        }
    };
    rec(rec, 0, 0);
    return out;
}

std::vector<std::vector<int>> admissible_diagonals(const std::vector<int>& l) {
    std::vector<std::vector<int>> out;
    const int p = static_cast<int>(l.size());
    std::vector<int> d(static_cast<std::size_t>(p - 3));
    auto rec = [&](auto&& self, int a, int prev) -> void {
        if (a == p - 3) {
            if (triangle_ok(prev, l[p - 2], l[p - 1])) out.push_back(d);
            return;
        }
        for (int v = std::abs(prev - l[a + 1]); v <= prev + l[a + 1]; ++v) {
            d[static_cast<std::size_t>(a)] = v;
            self(self, a + 1, v);
        }
    };
    rec(rec, 0, l[0]);
    return out;
}

std::vector<std::vector<int>> sorted_degree_tuples(int p, int lmax) {
    std::vector<std::vector<int>> out;
    std::vector<int> l(p);
    auto rec = [&](auto&& self, int i, int lo) -> void {
        if (i == p) {
            out.push_back(l);
            return;
        }
        for (int v = lo; v <= lmax; ++v) {
            l[i] = v;
            self(self, i + 1, v);
        }
    };
    rec(rec, 0, 0);
    return out;
}

// Haar integral of prod_a D_{k_a m_a}: numerics versus the coupled-diagonal sum,
// plus the invariance sum_m prod D_{k m} W(m) = W(k) at a random rotation.
void check_haar_p_fold(Suite& s, Rng& rng, int p, int lmax, int samples_per_tuple, const char* int_name, const char* sum_name,
                       const char* note) {
    const DGrid grid(SO3Resolution::for_degree(p * lmax), lmax);
    const std::size_t nn = grid.nodes.size();
    double worst_int = 0.0, worst_sum = 0.0;
    long nint = 0, nsum = 0;
    const Rotation g = sample_haar_rotation(rng);
    std::vector<Eigen::MatrixXcd> Dg;
    for (int l = 0; l <= lmax; ++l) Dg.push_back(wigner_D(l, g).entries);

    for (const std::vector<int>& l : sorted_degree_tuples(p, lmax)) {
        const auto orders = zero_sum_orders(l);
        const auto diags = admissible_diagonals(l);
        std::uniform_int_distribution<std::size_t> pick(0, orders.size() - 1);
        for (int t = 0; t < samples_per_tuple; ++t) {
            const std::vector<int>& k = orders[pick(rng)];
            const std::vector<int>& m = orders[pick(rng)];
            cplx sum(0.0, 0.0);
            for (std::size_t i = 0; i < nn; ++i) {
                cplx prod(grid.nodes[i].weight, 0.0);
                for (int a = 0; a < p; ++a) prod *= grid.D(i, l[a], k[a], m[a]);
                sum += prod;
            }
            double target = 0.0;
            for (const auto& d : diags) target += coupling_weight(l, d, k) * coupling_weight(l, d, m);
            if (p == 4) {
                // Explicit two-triangle form of the same integral.
                double explicit_form = 0.0;
                const int kk = k[0] + k[1], mm = m[0] + m[1];
                for (int L = 0; L <= 2 * lmax; ++L) {
                    if (std::abs(kk) > L || std::abs(mm) > L) continue;
                    if (!triangle_ok(l[0], l[1], L) || !triangle_ok(l[2], l[3], L)) continue;
                    const double sign = ((kk - mm) % 2 == 0) ? 1.0 : -1.0;
                    explicit_form += (2.0 * L + 1.0) * sign * wigner_3j(l[0], l[1], L, k[0], k[1], -kk) *
                                     wigner_3j(l[2], l[3], L, k[2], k[3], kk) * wigner_3j(l[0], l[1], L, m[0], m[1], -mm) *
                                     wigner_3j(l[2], l[3], L, m[2], m[3], mm);
                }
                worst_int = std::max(worst_int, std::abs(explicit_form - target));
            }
            worst_int = std::max(worst_int, std::abs(sum - target));
            ++nint;
        }
        for (const auto& d : diags) {
            for (std::size_t ki = 0; ki < orders.size(); ki += std::max<std::size_t>(1, orders.size() / 16)) {
                const std::vector<int>& k = orders[ki];
                cplx lhs(0.0, 0.0);
                for (const auto& m : orders) {
                    const double w = coupling_weight(l, d, m);
                    if (w == 0.0) continue;
                    cplx prod(w, 0.0);
                    for (int a = 0; a < p; ++a)
                        prod *= Dg[static_cast<std::size_t>(l[a])](k[a] + l[a], m[a] + l[a]);
                    lhs += prod;
                }
                worst_sum = std::max(worst_sum, std::abs(lhs - coupling_weight(l, d, k)));
                ++nsum;
            }
        }
    }
    s.add(int_name, worst_int, 1e-9, std::to_string(nint) + " index sets; " + note);
    s.add(sum_name, worst_sum, 1e-9, std::to_string(nsum) + " coupled sums; " + note);
}

// The coupled four-fold kernel is symmetric under simultaneous permutations
// of (l_a, k_a, m_a) whenever the degree sum is even.
void check_sym_l4(Suite& s, Rng& rng, int lmax, int samples) {
    auto kernel = [](const std::array<int, 4>& l, const std::array<int, 4>& k, const std::array<int, 4>& m) {
        const int kk = k[0] + k[1], mm = m[0] + m[1];
        double total = 0.0;
        for (int L = 0; L <= 2 * 3 + 2; ++L) {
            if (std::abs(kk) > L || std::abs(mm) > L) continue;
            if (!triangle_ok(l[0], l[1], L) || !triangle_ok(L, l[2], l[3])) continue;
            const double sign = ((kk - mm) % 2 == 0) ? 1.0 : -1.0;
            total += (2.0 * L + 1.0) * sign * wigner_3j(l[0], l[1], L, k[0], k[1], -kk) * wigner_3j(L, l[2], l[3], kk, k[2], k[3]) *
                     wigner_3j(l[0], l[1], L, m[0], m[1], -mm) * wigner_3j(L, l[2], l[3], mm, m[2], m[3]);
        }
        return total;
    };
    double worst = 0.0;
    long count = 0;
    for (const std::vector<int>& lv : sorted_degree_tuples(4, lmax)) {
        if (std::accumulate(lv.begin(), lv.end(), 0) % 2 != 0) continue;
        const auto orders = zero_sum_orders(lv);
        std::uniform_int_distribution<std::size_t> pick(0, orders.size() - 1);
        for (int t = 0; t < samples; ++t) {
            const auto& kv = orders[pick(rng)];
            const auto& mv = orders[pick(rng)];
            const std::array<int, 4> l{lv[0], lv[1], lv[2], lv[3]}, k{kv[0], kv[1], kv[2], kv[3]}, m{mv[0], mv[1], mv[2], mv[3]};
            const double base = kernel(l, k, m);
            std::array<int, 4> perm{0, 1, 2, 3};
            do {
                std::array<int, 4> lp, kp, mp;
                for (int i = 0; i < 4; ++i) {
                    lp[i] = l[perm[i]];
                    kp[i] = k[perm[i]];
                    mp[i] = m[perm[i]];
                }
                worst = std::max(worst, std::abs(kernel(lp, kp, mp) - base));
                ++count;
            } while (std::next_permutation(perm.begin(), perm.end()));
        }
    }
    s.add("haar.coupled_kernel_symmetry", worst, 1e-10, std::to_string(count) + " permuted evaluations, degrees <= " + std::to_string(lmax));
}

// --- Harmonics ------------------------------------------------------------

HarmonicCoeffs random_coeffs(int lmax, Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    HarmonicCoeffs c(lmax);
    for (int l = 0; l <= lmax; ++l)
        for (int m = 0; m <= l; ++m) {
            const cplx z(n(rng), m == 0 ? 0.0 : n(rng));
            c.set(l, m, z);
            if (m > 0) c.set(l, -m, (m % 2 == 0 ? 1.0 : -1.0) * std::conj(z));
        }
    return c;
}

void check_harmonics(Suite& s, Rng& rng) {
    const int lmax = 32;
    const HarmonicCoeffs c = random_coeffs(lmax, rng);
    auto grid = std::make_shared<const SphereGrid>(SphereGrid::for_band_limit(lmax));
    const SphereMap map = synthesize(c, grid);
    const HarmonicCoeffs back = analyze(map, lmax);
    double rt = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) rt = std::max(rt, std::abs(c.values()[i] - back.values()[i]));
    s.add("sht.round_trip", rt, 1e-9, "lmax 32");

    TransformOptions fft;
    fft.use_fft = true;
    const SphereMap map_fft = synthesize(c, grid, std::nullopt, fft);
    const HarmonicCoeffs back_fft = analyze(map_fft, lmax, fft);
    double fd = (map.values - map_fft.values).cwiseAbs().maxCoeff();
    for (std::size_t i = 0; i < c.size(); ++i) fd = std::max(fd, std::abs(back.values()[i] - back_fft.values()[i]));
    s.add("sht.fft_matches_direct", fd, 1e-12);

    std::uniform_real_distribution<double> u(0.0, 1.0);
    double add = 0.0;
    for (int t = 0; t < 100; ++t) {
        const double th1 = std::acos(1 - 2 * u(rng)), ph1 = 2 * kPi * u(rng);
        const double th2 = std::acos(1 - 2 * u(rng)), ph2 = 2 * kPi * u(rng);
        const auto v1 = unit_vector(th1, ph1), v2 = unit_vector(th2, ph2);
        const double x = std::clamp(v1[0] * v2[0] + v1[1] * v2[1] + v1[2] * v2[2], -1.0, 1.0);
        for (int l = 0; l <= 20; ++l) {
            cplx sum(0.0, 0.0);
            for (int m = -l; m <= l; ++m) sum += std::conj(spherical_harmonic(l, m, th1, ph1)) * spherical_harmonic(l, m, th2, ph2);
            add = std::max(add, std::abs(sum - (2.0 * l + 1.0) / (4.0 * kPi) * legendre(l, x)));
        }
    }
    s.add("sht.addition_theorem", add, 1e-11, "100 location pairs, degrees <= 20");

    double fh = 0.0;
    for (int j = 0; j <= 6; ++j) {
        const AngularPowerSpectrum f = legendre_transform([j](double x) { return legendre(j, x); }, 10, 32);
        for (int l = 0; l <= 10; ++l)
            fh = std::max(fh, std::abs(f.f[static_cast<std::size_t>(l)] - (l == j ? 4.0 * kPi / (2.0 * j + 1.0) : 0.0)));
    }
    s.add("sht.funk_hecke_spike", fh, 1e-12);
}

// --- Models -----------------------------------------------------------------

void check_models(Suite& s) {
    const std::vector<CovarianceModel> models = {
        LaplaceBeltrami{1.0, 64}, LaplaceBeltrami{2.5, 64}, GeneratingInvPow{0.5, 3.0}, GeneratingInvPow{0.8, 3.0},
        PoissonKernelPow{0.3, 3.0}, PoissonKernelPow{0.7, 3.0}, ExpKappa{1.0}, ExpKappa{10.0}, ExpJ0{1.0}, ExpJ0{4.0},
        BesselI0Product{1.0}, BesselI0Product{3.0}};
    double worst = 0.0;
    std::string worst_name;
    for (const CovarianceModel& m : models) {
        const AngularPowerSpectrum closed = model_spectrum(m, 16);
        const AngularPowerSpectrum tr = legendre_transform([&](double x) { return model_covariance(m, std::acos(std::clamp(x, -1.0, 1.0))); }, 16, 400);
        for (int l = 0; l <= 16; ++l) {
            const double d = std::abs(closed.f[static_cast<std::size_t>(l)] - tr.f[static_cast<std::size_t>(l)]);
            if (d > worst) {
                worst = d;
                worst_name = variant_name(m);
            }
        }
    }
    s.add("models.closed_form_consistency", worst, 1e-7, "degrees <= 16; worst " + worst_name);
    const AngularPowerSpectrum lb = model_spectrum(LaplaceBeltrami{1.0, 1024}, 4);
    s.add("models.laplace_beltrami_f2", std::abs(lb.f[2] - 1.0 / 49.0), 0.0, "f_2(c=1) = 1/49");

    double matern_min = 0.0;
    for (double theta : {0.5, 1.0, 2.0}) {
        const AngularPowerSpectrum f = model_spectrum(MaternRestricted{1.0, 0.5, theta}, 32);
        for (double v : f.f) matern_min = std::min(matern_min, v);
    }
    s.add("models.matern_half_positive", -matern_min, 0.0, "nu = 1/2, theta in {0.5, 1, 2}, degrees <= 32");
}

void poisson_probe(Suite& s, VerifyReport& report) {
    const SpectralMeasure lb = laplace_beltrami_measure(1.0);
    double worst_bound = 0.0;
    nlohmann::json rows = nlohmann::json::array();
    for (int l = 0; l <= 4; ++l) {
        const PoissonResult r = poisson_formula_spectrum(lb, l);
        const double claimed = 1.0 / std::pow(l * (l + 1.0) + 1.0, 2);
        worst_bound = std::max(worst_bound, r.tail_bound);
        rows.push_back({{"l", l}, {"numeric", r.value}, {"tail_bound", r.tail_bound}, {"lambda_end", r.lambda_end},
                        {"closed_form", claimed}, {"ratio", r.value / claimed}});
    }
    report.findings.push_back(
        {{"name", "poisson_formula_vs_laplace_beltrami"},
         {"agrees", false},
         {"summary",
          "The Poisson-formula integral of the 3-D Laplace-Beltrami density does not reproduce (l(l+1)+c^2)^-2; "
          "the model spectrum keeps the closed form."},
         {"rows", rows}});
    s.add("models.poisson_probe_tail_bound", worst_bound, 1e-9, "discrepancy with the closed form recorded under findings");
}

// --- Cumulants --------------------------------------------------------------

void check_cumulants(Suite& s, Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    double worst = 0.0;
    for (int order = 1; order <= 6; ++order)
        for (int t = 0; t < 5; ++t) {
            SubsetTable mom;
            for (std::uint32_t mask = 1; mask < (1u << order); ++mask) mom[mask] = cplx(n(rng), n(rng));
            SubsetTable cum;
            for (std::uint32_t mask = 1; mask < (1u << order); ++mask) {
                // Cumulant of the sub-collection selected by mask.
                std::vector<int> idx;
                for (int i = 0; i < order; ++i)
                    if (mask & (1u << i)) idx.push_back(i);
                SubsetTable sub;
                for (std::uint32_t sm = 1; sm < (1u << idx.size()); ++sm) {
                    std::uint32_t full = 0;
                    for (std::size_t j = 0; j < idx.size(); ++j)
                        if (sm & (1u << j)) full |= 1u << idx[j];
                    sub[sm] = mom[full];
                }
                cum[mask] = cumulant_from_moments(sub, static_cast<int>(idx.size()));
            }
            const cplx back = moment_from_cumulants(cum, order);
            worst = std::max(worst, std::abs(back - mom[(1u << order) - 1]) / std::max(1.0, std::abs(mom[(1u << order) - 1])));
        }
    s.add("cumulants.round_trip", worst, 1e-12, "orders <= 6");

    // Exponential(1): E X^k = k!.
    auto exp_cumulant = [](int order) {
        SubsetTable mom;
        for (std::uint32_t mask = 1; mask < (1u << order); ++mask) {
            double f = 1.0;
            for (int j = 2; j <= __builtin_popcount(mask); ++j) f *= j;
            mom[mask] = f;
        }
        return cumulant_from_moments(mom, order).real();
    };
    const double e = std::max(std::abs(exp_cumulant(3) - 2.0), std::abs(exp_cumulant(4) - 6.0));
    s.add("cumulants.exponential", e, 1e-12, "kappa_3 = 2, kappa_4 = 6");
}

// --- Spectra ----------------------------------------------------------------

PolySpectrum random_table(int p, int lmax, Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    PolySpectrum s(p);
    for (const SpectrumKey& k : principal_domain(p, lmax)) s.set(k, n(rng));
    return s;
}

void check_inversion(Suite& s, Rng& rng, int p, int lmax) {
    const PolySpectrum adm = (p == 3) ? random_table(3, lmax, rng) : admissible_projection(random_table(p, lmax, rng), lmax);
    const auto cum = [&](const std::vector<int>& l, const std::vector<int>& m) { return cumulants_from_polyspectrum(adm, l, m); };
    const PolySpectrum back = polyspectrum_from_cumulants(p, cum, lmax);
    double worst = 0.0;
    for (const SpectrumKey& k : principal_domain(p, lmax)) worst = std::max(worst, std::abs(back.value(k) - adm.value(k)));
    for (const auto& [k, e] : back.entries()) worst = std::max(worst, std::abs(e.imag));

    // Cumulants -> spectrum -> cumulants over every degree order.
    double worst_cum = 0.0, structural = 0.0;
    std::uniform_int_distribution<int> deg(0, lmax);
    for (int t = 0; t < 400; ++t) {
        std::vector<int> l(p), m(p);
        for (int i = 0; i < p; ++i) {
            l[i] = deg(rng);
            m[i] = std::uniform_int_distribution<int>(-l[i], l[i])(rng);
        }
        const int msum = std::accumulate(m.begin(), m.end(), 0);
        const int lsum = std::accumulate(l.begin(), l.end(), 0);
        const cplx a = cumulants_from_polyspectrum(adm, l, m);
        const cplx b = cumulants_from_polyspectrum(back, l, m);
        worst_cum = std::max(worst_cum, std::abs(a - b));
        if (msum != 0 || lsum % 2 != 0) structural = std::max(structural, std::abs(a));
        if (msum != 0) {
            // Repair the orders to a zero-sum tuple and compare again.
            m[p - 1] -= msum;
            if (std::abs(m[p - 1]) <= l[p - 1])
                worst_cum = std::max(worst_cum, std::abs(cumulants_from_polyspectrum(adm, l, m) - cumulants_from_polyspectrum(back, l, m)));
        }
    }
    const std::string tag = "spectra.inversion_p" + std::to_string(p);
    s.add(tag, std::max(worst, worst_cum), 1e-10, "degrees <= " + std::to_string(lmax));
    s.add("spectra.structural_zeros_p" + std::to_string(p), structural, 0.0, "odd degree sums and nonzero order sums");
}

void check_linear_degeneracy(Suite& s) {
    // Cumulants nonzero only when all degrees and orders coincide map to
    // spectra whose implied cumulants shrink by a factor < 1 on that pattern,
    // so the only consistent such table is zero.
    double worst = 0.0;
    for (int p : {3, 4})
        for (int l = 1; l <= 4; ++l) {
            const auto cum = [l](const std::vector<int>& ls, const std::vector<int>& ms) -> cplx {
                for (std::size_t i = 0; i < ls.size(); ++i)
                    if (ls[i] != l || ms[i] != 0) return {0.0, 0.0};
                return {1.0, 0.0};
            };
            const PolySpectrum sp = polyspectrum_from_cumulants(p, cum, l);
            const double back = cumulants_from_polyspectrum(sp, std::vector<int>(p, l), std::vector<int>(p, 0)).real();
            worst = std::max(worst, back);  // eigenvalue of the round trip on the pattern
        }
    s.add("spectra.linear_field_degeneracy", worst, 1.0 - 1e-3, "round-trip eigenvalue on the all-equal pattern stays below 1");
}

void check_bispectral_basis(Suite& s) {
    // Orthogonality of the basis by quadrature over two spheres.
    const int lmax = 4;
    const int nth = 12, nph = 12;
    const GaussLegendre gl = gauss_legendre(nth);
    std::vector<std::array<int, 3>> triples;
    for (int a = 0; a <= lmax; ++a)
        for (int b = 0; b <= lmax; ++b)
            for (int c = std::abs(a - b); c <= std::min(lmax, a + b); ++c)
                if ((a + b + c) % 2 == 0) triples.push_back({a, b, c});
    std::vector<std::vector<cplx>> values(triples.size());
    std::vector<double> weights;
    for (int i1 = 0; i1 < nth; ++i1)
        for (int j1 = 0; j1 < nph; ++j1)
            for (int i2 = 0; i2 < nth; ++i2) {
                const double th1 = std::acos(gl.nodes[i1]), ph1 = 2 * kPi * j1 / nph, th2 = std::acos(gl.nodes[i2]);
                // phi2 does not enter; its integral contributes 2 pi.
                weights.push_back(gl.weights[i1] * (2 * kPi / nph) * gl.weights[i2] * 2 * kPi);
                for (std::size_t t = 0; t < triples.size(); ++t)
                    values[t].push_back(bispectrum_basis(triples[t][0], triples[t][1], triples[t][2], th1, ph1, th2));
            }
    double worst = 0.0;
    for (std::size_t a = 0; a < triples.size(); ++a)
        for (std::size_t b = a; b < triples.size(); ++b) {
            cplx sum(0.0, 0.0);
            for (std::size_t q = 0; q < weights.size(); ++q) sum += weights[q] * std::conj(values[a][q]) * values[b][q];
            const double target = (a == b) ? 1.0 / (4.0 * kPi) : 0.0;
            worst = std::max(worst, std::abs(sum - target));
        }
    s.add("spectra.bispectral_basis_orthogonality", worst, 1e-8, "inner products equal delta/(4 pi), degrees <= 4");
}

// --- Monte Carlo --------------------------------------------------------------

void check_monte_carlo(Suite& s, const VerifyOptions& opts) {
    {
        SimulationConfig cfg;
        AngularPowerSpectrum f;
        f.f.assign(7, 1.0);
        cfg.spec = f;
        cfg.n_replicates = 1000;
        cfg.lmax = 6;
        cfg.master_seed = opts.seed;
        cfg.threads = opts.threads;
        const CoeffEnsemble e = run_ensemble(cfg);
        EstimateOptions eo;
        eo.threads = opts.threads;
        double zmax = 0.0;
        for (const auto& sp : {polyspectrum_estimate(3, e, 6, eo), polyspectrum_estimate(4, e, 4, eo)})
            for (const auto& [k, en] : sp.entries()) zmax = std::max(zmax, std::abs(en.value) / en.se);
        s.add("mc.gaussian_null", zmax, 4.0, "max |estimate|/SE over B3 (l<=6) and T4 (l<=4), N = 1000");
    }
    {
        BaseArraySpec spec;
        spec.f.f.assign(3, 1.0);
        spec.m0.assign(3, M0Distribution{});
        spec.m0[2].law = M0Law::centered_exponential;
        SimulationConfig cfg;
        cfg.spec = spec;
        cfg.n_replicates = 5000;
        cfg.lmax = 2;
        cfg.master_seed = opts.seed;
        cfg.threads = opts.threads;
        const CoeffEnsemble e = run_ensemble(cfg);
        EstimateOptions eo;
        eo.threads = opts.threads;
        const PolySpectrum b3 = polyspectrum_estimate(3, e, 2, eo);
        const PolySpectrum b4 = polyspectrum_estimate(4, e, 2, eo);
        const PolySpectrum t3 = theoretical_polyspectra(spec, 3), t4 = theoretical_polyspectra(spec, 4);
        double zmax = 0.0;
        for (const auto* pair : {&b3, &b4}) {
            const PolySpectrum& target = (pair == &b3) ? t3 : t4;
            for (const auto& [k, en] : pair->entries()) zmax = std::max(zmax, std::abs(en.value - target.value(k)) / en.se);
        }
        s.add("mc.wigner_d_transform_target", zmax, 5.0, "max |estimate - target|/SE, exponential m=0 base at l=2, N = 5000");
    }
}

}  // namespace

bool VerifyReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

double corrupted_wigner_3j(int l1, int l2, int l3, int m1, int m2, int m3) {
    const double v = wigner_3j(l1, l2, l3, m1, m2, m3);
    return m1 == 1 ? -v : v;
}

VerifyReport run_verification(const VerifyOptions& opts) {
    VerifyReport report;
    Suite s(report);
    const ThreeJFunction tj = opts.threej ? opts.threej : ThreeJFunction(wigner_3j);
    const bool full = opts.level == VerifyLevel::full;
    Rng rng(opts.seed);

    s.guarded("wigner3j.selection_rules", [&] { check_selection_rules(s, tj, full ? 12 : 8); });
    s.guarded("wigner3j.orthogonality", [&] { check_orthogonality(s, tj, full ? 10 : 6, full ? 6 : 4); });
    s.guarded("wigner3j.closed_form_zero_orders", [&] { check_closed_form(s, tj, 20); });
    s.guarded("wigner3j.reference_values", [&] { check_known_values(s, tj); });
    s.guarded("wignerD", [&] { check_d_matrices(s, rng); });
    s.guarded("haar.low_order", [&] { check_haar_low_order(s, full ? 4 : 2); });
    s.guarded("haar.four_fold", [&] {
        check_haar_p_fold(s, rng, 4, full ? 3 : 2, full ? 40 : 10, "haar.four_fold_integral", "haar.four_fold_sum", "degrees <= 3");
    });
    s.guarded("haar.coupled_kernel_symmetry", [&] { check_sym_l4(s, rng, full ? 3 : 2, full ? 6 : 2); });
    if (full)
        s.guarded("haar.five_fold", [&] {
            check_haar_p_fold(s, rng, 5, 2, 20, "haar.five_fold_integral", "haar.five_fold_sum", "degrees <= 2");
        });
    s.guarded("sht", [&] { check_harmonics(s, rng); });
    s.guarded("models", [&] { check_models(s); });
    s.guarded("cumulants", [&] { check_cumulants(s, rng); });
    s.guarded("spectra.inversion_p3", [&] { check_inversion(s, rng, 3, 6); });
    s.guarded("spectra.inversion_p4", [&] { check_inversion(s, rng, 4, full ? 4 : 3); });
    if (full) s.guarded("spectra.inversion_p5", [&] { check_inversion(s, rng, 5, 2); });
    s.guarded("spectra.linear_field_degeneracy", [&] { check_linear_degeneracy(s); });
    s.guarded("spectra.bispectral_basis_orthogonality", [&] { check_bispectral_basis(s); });
    if (full) {
        s.guarded("models.poisson_probe", [&] { poisson_probe(s, report); });
        s.guarded("mc", [&] { check_monte_carlo(s, opts); });
        report.findings.push_back(
            {{"name", "order5_normalization"},
             {"agrees", nullptr},
             {"summary", "Normalization of the order-5 invariant systems is not asserted; only the order-5 Haar identities are checked."}});
    }
    return report;
}

}  // namespace isospec
