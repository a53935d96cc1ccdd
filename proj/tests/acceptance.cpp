// One PASS/FAIL line per acceptance criterion; tolerances are pinned here.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "isospec/cli.hpp"
#include "isospec/cumulants.hpp"
#include "isospec/harmonics.hpp"
#include "isospec/io.hpp"
#include "isospec/models.hpp"
#include "isospec/simulate.hpp"
#include "isospec/spectra.hpp"
#include "isospec/wigner.hpp"
#include "test_helpers.hpp"

using namespace isospec;
using testing_support::kPi;
using testing_support::racah_3j;

namespace {

// Pinned tolerances and budgets.
constexpr double kTol3jOrthogonality = 1e-10;
constexpr double kTol3jClosedForm = 1e-12;
constexpr double kBudgetWigner = 10.0;
constexpr double kTolHaarLow = 1e-10;
constexpr double kTolHaarHigh = 1e-9;
constexpr double kBudgetHaar = 60.0;
constexpr double kTolShtRoundTrip = 1e-9;
constexpr double kTolAddition = 1e-11;
constexpr double kTolModels = 1e-7;
constexpr double kTolCumulants = 1e-12;
constexpr double kTolInversion = 1e-10;
constexpr double kNullSE = 4.0;
constexpr double kBudgetNull = 300.0;
constexpr double kTargetSE = 5.0;
constexpr double kOtherSE = 4.0;
constexpr double kBudgetTarget = 900.0;
constexpr double kIsotropySE = 5.0;
constexpr double kTolRotation = 1e-12;
constexpr double kTolTail = 1e-9;
constexpr std::uint64_t kSeed = 20240601;

int failures = 0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(int id, bool pass, const std::string& detail) {
    std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// Cached oracle 3j.
class Oracle {
public:
    double operator()(int l1, int l2, int l3, int m1, int m2, int m3) {
        if (m1 + m2 + m3 != 0 || !triangle_ok(l1, l2, l3) || std::abs(m1) > l1 || std::abs(m2) > l2 || std::abs(m3) > l3) return 0.0;
        const auto key = std::make_tuple(l1, l2, l3, m1, m2);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        const double v = racah_3j(l1, l2, l3, m1, m2, m3);
        cache_.emplace(key, v);
        return v;
    }

private:
    std::map<std::tuple<int, int, int, int, int>, double> cache_;
};

Oracle oracle;

// --- 1 -------------------------------------------------------------------------

void criterion_wigner() {
    const auto t0 = std::chrono::steady_clock::now();
    double selection = 0.0;
    for (int l1 = 0; l1 <= 10; ++l1)
        for (int l2 = 0; l2 <= 10; ++l2)
            for (int l3 = 0; l3 <= 10; ++l3)
                for (int m1 = -l1; m1 <= l1; ++m1)
                    for (int m2 = -l2; m2 <= l2; ++m2)
                        for (int m3 = -l3; m3 <= l3; ++m3)
                            if (!triangle_ok(l1, l2, l3) || m1 + m2 + m3 != 0)
                                selection = std::max(selection, std::abs(wigner_3j(l1, l2, l3, m1, m2, m3)));
    double orth = 0.0;
    for (int l1 = 0; l1 <= 10; ++l1)
        for (int l2 = 0; l2 <= 10; ++l2)
            for (int l = std::abs(l1 - l2); l <= l1 + l2; ++l)
                for (int j = std::abs(l1 - l2); j <= l1 + l2; ++j)
                    for (int m = -std::min(l, j); m <= std::min(l, j); ++m) {
                        double s = 0.0;
                        for (int m1 = -l1; m1 <= l1; ++m1) {
                            const int m2 = -m - m1;
                            if (std::abs(m2) > l2) continue;
                            s += wigner_3j(l1, l2, l, m1, m2, m) * wigner_3j(l1, l2, j, m1, m2, m);
                        }
                        orth = std::max(orth, std::abs((2.0 * l + 1.0) * s - (l == j ? 1.0 : 0.0)));
                    }
    double closed = 0.0;
    for (int l1 = 0; l1 <= 20; ++l1)
        for (int l2 = 0; l2 <= 20; ++l2)
            for (int l3 = std::abs(l1 - l2); l3 <= std::min(20, l1 + l2); ++l3)
                closed = std::max(closed, std::abs(wigner_3j_zero(l1, l2, l3) - racah_3j(l1, l2, l3, 0, 0, 0)));
    closed = std::max(closed, std::abs(wigner_3j_zero(2, 2, 2) + std::sqrt(2.0 / 35.0)));
    const double t = seconds_since(t0);
    const bool pass = selection == 0.0 && orth <= kTol3jOrthogonality && closed <= kTol3jClosedForm && t < kBudgetWigner;
    report(1, pass,
           "3j selection max=" + fmt("%.1e", selection) + " orthogonality(l<=10)=" + fmt("%.2e", orth) + " closed-form(l<=20)=" +
               fmt("%.2e", closed) + " time=" + fmt("%.2fs", t));
}

// --- 2 -------------------------------------------------------------------------

struct Grid {
    std::vector<Rotation> g;
    std::vector<double> w;
    std::vector<std::vector<Eigen::MatrixXcd>> D;
    Grid(int degree, int lmax) {
        const int nt = degree + 1, np = 2 * degree + 2;
        const GaussLegendre gl = gauss_legendre(nt);
        for (int i = 0; i < nt; ++i)
            for (int a = 0; a < np; ++a)
                for (int b = 0; b < np; ++b) {
                    g.push_back(Rotation{2 * kPi * a / np, std::acos(gl.nodes[i]), 2 * kPi * b / np});
                    w.push_back(gl.weights[i] / (2.0 * np * np));
                }
        for (const Rotation& r : g) {
            std::vector<Eigen::MatrixXcd> blocks;
            for (int l = 0; l <= lmax; ++l) blocks.push_back(wigner_D(l, r).entries);
            D.push_back(std::move(blocks));
        }
    }
    cplx integral(const std::vector<int>& l, const std::vector<int>& k, const std::vector<int>& m) const {
        cplx s(0.0, 0.0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            cplx p(w[i], 0.0);
            for (std::size_t a = 0; a < l.size(); ++a) p *= D[i][l[a]](k[a] + l[a], m[a] + l[a]);
            s += p;
        }
        return s;
    }
};

std::vector<std::vector<int>> zero_sum(const std::vector<int>& l) {
    std::vector<std::vector<int>> out;
    std::vector<int> m(l.size());
    std::function<void(std::size_t, int)> rec = [&](std::size_t i, int part) {
        if (i + 1 == l.size()) {
            if (std::abs(part) <= l.back()) {
                m.back() = -part;
                out.push_back(m);
            }
            return;
        }
        for (int v = -l[i]; v <= l[i]; ++v) {
            m[i] = v;
            rec(i + 1, part + v);
        }
    };
    rec(0, 0);
    return out;
}

// Chain coupling built from the oracle: prod 3j(L_a l_{a+1} L_{a+1}; -M_a m_{a+1} M_{a+1}), M_0 = -m_1,
// with sign (-1)^{sum internal M} and sqrt(2L+1) per internal degree.
double chain_weight(const std::vector<int>& l, const std::vector<int>& diag, const std::vector<int>& m) {
    const int p = static_cast<int>(l.size());
    std::vector<int> L{l[0]}, M{-m[0]};
    for (int d : diag) L.push_back(d);
    L.push_back(l[p - 1]);
    for (int a = 0; a + 1 < p - 1; ++a) M.push_back(M[a] - m[a + 1]);
    if (M.back() != m[p - 1]) return 0.0;
    double w = 1.0;
    for (int a = 0; a <= p - 3; ++a) {
        w *= oracle(L[a], l[a + 1], L[a + 1], -M[a], m[a + 1], M[a + 1]);
        if (w == 0.0) return 0.0;
    }
    int msum = 0;
    for (std::size_t a = 1; a + 1 < L.size(); ++a) {
        msum += M[a];
        w *= std::sqrt(2.0 * L[a] + 1.0);
    }
    return (msum % 2 == 0) ? w : -w;
}

std::vector<std::vector<int>> diagonals(const std::vector<int>& l) {
    std::vector<std::vector<int>> out;
    const int p = static_cast<int>(l.size());
    std::vector<int> d(p - 3);
    std::function<void(int, int)> rec = [&](int a, int prev) {
        if (a == p - 3) {
            if (triangle_ok(prev, l[p - 2], l[p - 1])) out.push_back(d);
            return;
        }
        for (int v = std::abs(prev - l[a + 1]); v <= prev + l[a + 1]; ++v) {
            d[a] = v;
            rec(a + 1, v);
        }
    };
    rec(0, l[0]);
    return out;
}

std::vector<std::vector<int>> sorted_tuples(int p, int lmax) {
    std::vector<std::vector<int>> out;
    std::vector<int> l(p);
    std::function<void(int, int)> rec = [&](int i, int lo) {
        if (i == p) {
            out.push_back(l);
            return;
        }
        for (int v = lo; v <= lmax; ++v) {
            l[i] = v;
            rec(i + 1, v);
        }
    };
    rec(0, 0);
    return out;
}

void criterion_haar() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(kSeed);
    double low = 0.0, high = 0.0;
    {
        const Grid grid(12, 4);
        for (int l = 0; l <= 4; ++l)
            for (int k = -l; k <= l; ++k)
                for (int m = -l; m <= l; ++m) {
                    low = std::max(low, std::abs(grid.integral({l}, {k}, {m}) - (l == 0 ? 1.0 : 0.0)));
                    for (int m2 = -l; m2 <= l; ++m2) {
                        cplx s(0.0, 0.0);
                        for (std::size_t i = 0; i < grid.g.size(); ++i)
                            s += grid.w[i] * std::conj(grid.D[i][l](k + l, m + l)) * grid.D[i][l](k + l, m2 + l);
                        low = std::max(low, std::abs(s - (m == m2 ? 1.0 / (2 * l + 1) : 0.0)));
                    }
                }
        for (const auto& l : sorted_tuples(3, 4)) {
            const auto orders = zero_sum(l);
            for (std::size_t a = 0; a < orders.size(); ++a)
                for (std::size_t b = 0; b < orders.size(); b += 3) {
                    const auto& k = orders[a];
                    const auto& m = orders[b];
                    const double want = oracle(l[0], l[1], l[2], k[0], k[1], k[2]) * oracle(l[0], l[1], l[2], m[0], m[1], m[2]);
                    low = std::max(low, std::abs(grid.integral(l, k, m) - want));
                }
        }
        // Four-fold: integral and coupled invariance, degrees <= 3.
        const Rotation g = sample_haar_rotation(rng);
        for (const auto& l : sorted_tuples(4, 3)) {
            const auto orders = zero_sum(l);
            const auto diags = diagonals(l);
            std::uniform_int_distribution<std::size_t> pick(0, orders.size() - 1);
            for (int t = 0; t < 30; ++t) {
                const auto& k = orders[pick(rng)];
                const auto& m = orders[pick(rng)];
                double want = 0.0;
                for (const auto& d : diags) want += chain_weight(l, d, k) * chain_weight(l, d, m);
                high = std::max(high, std::abs(grid.integral(l, k, m) - want));
            }
            for (const auto& d : diags)
                for (std::size_t ki = 0; ki < orders.size(); ki += 5) {
                    cplx s(0.0, 0.0);
                    for (const auto& m : orders) {
                        cplx p(chain_weight(l, d, m), 0.0);
                        for (int a = 0; a < 4; ++a) p *= wigner_D_element(l[a], orders[ki][a], m[a], g);
                        s += p;
                    }
                    high = std::max(high, std::abs(s - chain_weight(l, d, orders[ki])));
                }
        }
    }
    {
        const Grid grid(10, 2);
        const Rotation g = sample_haar_rotation(rng);
        for (const auto& l : sorted_tuples(5, 2)) {
            const auto orders = zero_sum(l);
            const auto diags = diagonals(l);
            std::uniform_int_distribution<std::size_t> pick(0, orders.size() - 1);
            for (int t = 0; t < 30; ++t) {
                const auto& k = orders[pick(rng)];
                const auto& m = orders[pick(rng)];
                double want = 0.0;
                for (const auto& d : diags) want += chain_weight(l, d, k) * chain_weight(l, d, m);
                high = std::max(high, std::abs(grid.integral(l, k, m) - want));
            }
            for (const auto& d : diags)
                for (std::size_t ki = 0; ki < orders.size(); ki += 17) {
                    cplx s(0.0, 0.0);
                    for (const auto& m : orders) {
                        const double w = chain_weight(l, d, m);
                        if (w == 0.0) continue;
                        cplx p(w, 0.0);
                        for (int a = 0; a < 5; ++a) p *= wigner_D_element(l[a], orders[ki][a], m[a], g);
                        s += p;
                    }
                    high = std::max(high, std::abs(s - chain_weight(l, d, orders[ki])));
                }
        }
    }
    // The library weight matches the oracle chain.
    double weight = 0.0;
    for (const auto& l : sorted_tuples(4, 3))
        for (const auto& d : diagonals(l))
            for (const auto& m : zero_sum(l)) weight = std::max(weight, std::abs(coupling_weight(l, d, m) - chain_weight(l, d, m)));
    high = std::max(high, weight);
    const double t = seconds_since(t0);
    report(2, low <= kTolHaarLow && high <= kTolHaarHigh && t < kBudgetHaar,
           "1-3 fold (l<=4)=" + fmt("%.2e", low) + " 4-fold (l<=3) and 5-fold (l<=2)=" + fmt("%.2e", high) + " time=" + fmt("%.1fs", t));
}

// --- 3 -------------------------------------------------------------------------

void criterion_sht() {
    Rng rng(kSeed);
    const HarmonicCoeffs c = testing_support::random_real_coeffs(32, rng);
    auto grid = std::make_shared<const SphereGrid>(SphereGrid::for_band_limit(32));
    const double rt = testing_support::max_abs_diff(analyze(synthesize(c, grid), 32), c);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double add = 0.0;
    for (int t = 0; t < 50; ++t) {
        const double t1 = std::acos(1 - 2 * u(rng)), p1 = 2 * kPi * u(rng), t2 = std::acos(1 - 2 * u(rng)), p2 = 2 * kPi * u(rng);
        const auto a = unit_vector(t1, p1), b = unit_vector(t2, p2);
        const double x = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        for (int l = 0; l <= 24; ++l) {
            cplx s(0.0, 0.0);
            for (int m = -l; m <= l; ++m) s += std::conj(spherical_harmonic(l, m, t1, p1)) * spherical_harmonic(l, m, t2, p2);
            add = std::max(add, std::abs(s - (2.0 * l + 1.0) / (4 * kPi) * legendre(l, x)));
        }
    }
    report(3, rt <= kTolShtRoundTrip && add <= kTolAddition,
           "round trip (lmax 32)=" + fmt("%.2e", rt) + " addition theorem=" + fmt("%.2e", add));
}

// --- 4 -------------------------------------------------------------------------

void criterion_models() {
    const std::vector<CovarianceModel> models = {LaplaceBeltrami{1.0, 64}, LaplaceBeltrami{3.0, 64}, GeneratingInvPow{0.5, 3.0},
                                                 GeneratingInvPow{0.9, 3.0}, PoissonKernelPow{0.5, 3.0}, PoissonKernelPow{0.8, 3.0},
                                                 ExpKappa{1.0},              ExpKappa{100.0},            ExpJ0{1.0},
                                                 ExpJ0{8.0},                 BesselI0Product{1.0},       BesselI0Product{8.0}};
    double worst = 0.0;
    for (const CovarianceModel& m : models) {
        const AngularPowerSpectrum a = model_spectrum(m, 16);
        const AngularPowerSpectrum b = legendre_transform([&](double x) { return model_covariance(m, std::acos(x)); }, 16, 512);
        for (int l = 0; l <= 16; ++l) worst = std::max(worst, std::abs(a.f[l] - b.f[l]));
    }
    const bool exact = model_spectrum(LaplaceBeltrami{1.0, 1024}, 2).f[2] == 1.0 / 49.0;
    report(4, worst <= kTolModels && exact,
           "closed form vs transform (l<=16)=" + fmt("%.2e", worst) + std::string(" f2(c=1)==1/49: ") + (exact ? "yes" : "no"));
}

// --- 5 -------------------------------------------------------------------------

void criterion_cumulants() {
    Rng rng(kSeed);
    std::normal_distribution<double> n(0.0, 1.0);
    double worst = 0.0;
    for (int order = 1; order <= 6; ++order)
        for (int t = 0; t < 20; ++t) {
            // Moments of all subsets from random complex joint moments.
            SubsetTable mom;
            for (std::uint32_t mask = 1; mask < (1u << order); ++mask) mom[mask] = cplx(n(rng), n(rng));
            SubsetTable cum;
            for (std::uint32_t mask = 1; mask < (1u << order); ++mask) {
                std::vector<int> idx;
                for (int i = 0; i < order; ++i)
                    if (mask & (1u << i)) idx.push_back(i);
                SubsetTable sub;
                for (std::uint32_t s = 1; s < (1u << idx.size()); ++s) {
                    std::uint32_t full = 0;
                    for (std::size_t j = 0; j < idx.size(); ++j)
                        if (s & (1u << j)) full |= 1u << idx[j];
                    sub[s] = mom[full];
                }
                cum[mask] = cumulant_from_moments(sub, static_cast<int>(idx.size()));
            }
            worst = std::max(worst, std::abs(moment_from_cumulants(cum, order) - mom[(1u << order) - 1]));
        }
    auto exp_cumulant = [](int order) {
        SubsetTable mom;
        for (std::uint32_t mask = 1; mask < (1u << order); ++mask) {
            double f = 1.0;
            for (int j = 2; j <= __builtin_popcount(mask); ++j) f *= j;
            mom[mask] = f;
        }
        return cumulant_from_moments(mom, order);
    };
    const bool exact = exp_cumulant(3) == cplx(2.0, 0.0) && exp_cumulant(4) == cplx(6.0, 0.0);
    report(5, worst <= kTolCumulants && exact,
           "round trip (orders<=6)=" + fmt("%.2e", worst) + std::string(" exponential kappa3=2, kappa4=6 exact: ") + (exact ? "yes" : "no"));
}

// --- 6 -------------------------------------------------------------------------

void criterion_inversion() {
    Rng rng(kSeed);
    std::normal_distribution<double> n(0.0, 1.0);
    double worst = 0.0, structural = 0.0;
    for (auto [p, lmax] : std::vector<std::pair<int, int>>{{3, 6}, {4, 4}, {5, 2}}) {
        PolySpectrum raw(p);
        for (const SpectrumKey& k : principal_domain(p, lmax)) raw.set(k, n(rng));
        const PolySpectrum s = admissible_projection(raw, lmax);
        const auto cum = [&](const std::vector<int>& l, const std::vector<int>& m) { return cumulants_from_polyspectrum(s, l, m); };
        const PolySpectrum back = polyspectrum_from_cumulants(p, cum, lmax);
        for (const SpectrumKey& k : principal_domain(p, lmax)) worst = std::max(worst, std::abs(back.value(k) - s.value(k)));
        std::uniform_int_distribution<int> deg(0, lmax);
        for (int t = 0; t < 2000; ++t) {
            std::vector<int> l(p), m(p);
            for (int i = 0; i < p; ++i) {
                l[i] = deg(rng);
                m[i] = std::uniform_int_distribution<int>(-l[i], l[i])(rng);
            }
            const int msum = std::accumulate(m.begin(), m.end(), 0), lsum = std::accumulate(l.begin(), l.end(), 0);
            const cplx a = cum(l, m);
            if (msum != 0 || lsum % 2) structural = std::max(structural, std::abs(a));
            worst = std::max(worst, std::abs(a - cumulants_from_polyspectrum(back, l, m)));
        }
    }
    report(6, worst <= kTolInversion && structural == 0.0,
           "p=3 (l<=6), p=4 (l<=4), p=5 (l<=2) inversion=" + fmt("%.2e", worst) + " structural zeros max=" + fmt("%.1e", structural));
}

// --- 7 -------------------------------------------------------------------------

void criterion_gaussian_null() {
    const auto t0 = std::chrono::steady_clock::now();
    SimulationConfig cfg;
    AngularPowerSpectrum f;
    f.f.assign(9, 1.0);
    cfg.spec = f;
    cfg.n_replicates = 2000;
    cfg.lmax = 8;
    cfg.master_seed = kSeed;
    const CoeffEnsemble e = run_ensemble(cfg);
    double z3 = 0.0, z4 = 0.0;
    std::size_t n3 = 0, n4 = 0;
    const PolySpectrum b3 = polyspectrum_estimate(3, e, 8), t4 = polyspectrum_estimate(4, e, 8);
    for (const auto& [k, v] : b3.entries()) {
        z3 = std::max(z3, std::abs(v.value) / v.se);
        ++n3;
    }
    for (const auto& [k, v] : t4.entries()) {
        z4 = std::max(z4, std::abs(v.value) / v.se);
        ++n4;
    }
    const double t = seconds_since(t0);
    report(7, z3 <= kNullSE && z4 <= kNullSE && t < kBudgetNull,
           "N=2000 lmax=8: max|B3|/SE=" + fmt("%.2f", z3) + " over " + std::to_string(n3) + " keys, max|T4|/SE=" + fmt("%.2f", z4) +
               " over " + std::to_string(n4) + " keys, time=" + fmt("%.1fs", t));
}

// --- 8 and 9 -------------------------------------------------------------------------

BaseArraySpec exponential_base(int lmax) {
    BaseArraySpec spec;
    spec.f.f.assign(static_cast<std::size_t>(lmax) + 1, 1.0);
    spec.m0.assign(static_cast<std::size_t>(lmax) + 1, M0Distribution{});
    spec.m0[2].law = M0Law::centered_exponential;
    return spec;
}

CoeffEnsemble criterion_target() {
    const auto t0 = std::chrono::steady_clock::now();
    const BaseArraySpec spec = exponential_base(6);
    SimulationConfig cfg;
    cfg.spec = spec;
    cfg.n_replicates = 5000;
    cfg.lmax = 6;
    cfg.master_seed = kSeed;
    CoeffEnsemble e = run_ensemble(cfg);
    const PolySpectrum b = polyspectrum_estimate(3, e, 6);
    EstimateOptions only2222;
    only2222.key_filter = [](const SpectrumKey& k) { return k.l == std::vector<int>{2, 2, 2, 2}; };
    const PolySpectrum t4 = polyspectrum_estimate(4, e, 2, only2222);
    const SpectrumKey k222{{2, 2, 2}, {}};
    const double target = -2.0 * std::sqrt(2.0 / 35.0);
    const SpectrumEntry* e222 = b.find(k222);
    const double z222 = (e222->value - target) / e222->se;
    double zother = 0.0;
    for (const auto& [k, v] : b.entries())
        if (!(k == k222)) zother = std::max(zother, std::abs(v.value) / v.se);
    double zt = 0.0;
    std::string t4s;
    for (int d : {0, 2, 4}) {
        const double w = wigner_3j_zero(2, 2, d);
        const double want = std::sqrt(2.0 * d + 1.0) * w * w * 6.0;
        const SpectrumEntry* v = t4.find(SpectrumKey{{2, 2, 2, 2}, {d}});
        const double z = (v->value - want) / v->se;
        zt = std::max(zt, std::abs(z));
        t4s += " T4(2222|" + std::to_string(d) + ")=" + fmt("%.3f", v->value) + "(z=" + fmt("%+.2f", z) + ")";
    }
    const double t = seconds_since(t0);
    report(8, std::abs(z222) <= kTargetSE && zother <= kOtherSE && zt <= kTargetSE && t < kBudgetTarget,
           "B3(222)=" + fmt("%.4f", e222->value) + "+-" + fmt("%.4f", e222->se) + " (target -0.4780914, z=" + fmt("%+.2f", z222) +
               ") other B3 max|z|=" + fmt("%.2f", zother) + t4s + " time=" + fmt("%.1fs", t));
    return e;
}

void criterion_isotropy(const CoeffEnsemble& e) {
    // Ten location pairs at the same separation with random orientations.
    Rng rng(kSeed + 9);
    const double gamma = 0.9;
    const int N = e.size();
    std::vector<double> cov, se;
    for (int pair = 0; pair < 10; ++pair) {
        const Rotation g = sample_haar_rotation(rng);
        auto at = [&](double th, double ph) {
            const auto [t, p] = polar_angles(isospec::apply(g, unit_vector(th, ph)));
            return std::array<double, 2>{t, p};
        };
        const auto A = at(0.0, 0.0), B = at(gamma, 0.0);
        std::vector<double> xa(N), xb(N);
        double ma = 0.0, mb = 0.0;
        for (int i = 0; i < N; ++i) {
            xa[i] = evaluate(e.replicates[i], A[0], A[1]);
            xb[i] = evaluate(e.replicates[i], B[0], B[1]);
            ma += xa[i] / N;
            mb += xb[i] / N;
        }
        double c = 0.0;
        std::vector<double> prod(N);
        for (int i = 0; i < N; ++i) {
            prod[i] = (xa[i] - ma) * (xb[i] - mb);
            c += prod[i] / N;
        }
        double v = 0.0;
        for (double x : prod) v += (x - c) * (x - c) / (N - 1);
        cov.push_back(c);
        se.push_back(std::sqrt(v / N));
    }
    const double mean = std::accumulate(cov.begin(), cov.end(), 0.0) / cov.size();
    AngularPowerSpectrum f;
    f.f.assign(7, 1.0);
    const double theory = covariance_eval(f, std::cos(gamma));
    double spread = 0.0, off = 0.0;
    for (std::size_t i = 0; i < cov.size(); ++i) {
        spread = std::max(spread, std::abs(cov[i] - mean) / se[i]);
        off = std::max(off, std::abs(cov[i] - theory) / se[i]);
    }
    // Power spectrum invariance under rotation of every replicate.
    std::vector<HarmonicCoeffs> rotated;
    for (const HarmonicCoeffs& c : e.replicates) rotated.push_back(rotate_coefficients(c, sample_haar_rotation(rng)));
    CoeffEnsemble er;
    er.replicates = std::move(rotated);
    const AngularPowerSpectrum a = power_spectrum_estimate(e), b = power_spectrum_estimate(er);
    double rot = 0.0;
    for (int l = 0; l <= e.lmax(); ++l) rot = std::max(rot, std::abs(a.f[l] - b.f[l]));
    report(9, spread <= kIsotropySE && off <= kIsotropySE && rot <= kTolRotation,
           "two-point covariance at 10 pairs (gamma=0.9): max spread/SE=" + fmt("%.2f", spread) + " max|C-theory|/SE=" + fmt("%.2f", off) +
               " rotated power spectrum diff=" + fmt("%.1e", rot));
}

// --- 10 -------------------------------------------------------------------------

void criterion_poisson() {
    const SpectralMeasure lb = laplace_beltrami_measure(1.0);
    double bound = 0.0;
    std::string vals;
    for (int l = 0; l <= 2; ++l) {
        const PoissonResult r = poisson_formula_spectrum(lb, l);
        bound = std::max(bound, r.tail_bound);
        vals += " f" + std::to_string(l) + "=" + fmt("%.9f", r.value) + " (claimed " + fmt("%.6f", 1.0 / std::pow(l * (l + 1.0) + 1.0, 2)) + ")";
    }
    const fs::path dir = fs::temp_directory_path() / "isospec_acceptance_verify";
    fs::remove_all(dir);
    std::vector<std::string> args{"isospec", "verify", "--level", "full", "--out", dir.string(), "--quiet"};
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    const int code = run_cli(static_cast<int>(argv.size()), argv.data());
    bool recorded = false;
    try {
        const json rep = json::parse(read_text(dir / "report.json"));
        for (const json& f : rep.at("findings"))
            if (f.at("name") == "poisson_formula_vs_laplace_beltrami") recorded = true;
    } catch (const std::exception&) {
    }
    fs::remove_all(dir);
    report(10, bound <= kTolTail && recorded && code == kExitOk,
           "tail bound max=" + fmt("%.1e", bound) + vals + std::string("; finding recorded in full verify report: ") +
               (recorded ? "yes" : "no") + ", verify exit=" + std::to_string(code));
}

}  // namespace

int main() {
    criterion_wigner();
    criterion_haar();
    criterion_sht();
    criterion_models();
    criterion_cumulants();
    criterion_inversion();
    criterion_gaussian_null();
    const CoeffEnsemble e = criterion_target();
    criterion_isotropy(e);
    criterion_poisson();
    std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
