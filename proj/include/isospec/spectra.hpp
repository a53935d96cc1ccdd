#pragma once

#include <array>
#include <compare>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "isospec/coeffs.hpp"
#include "isospec/cumulants.hpp"

namespace isospec {

inline constexpr int kMinPolyOrder = 3;
inline constexpr int kMaxPolyOrder = 5;

// Degrees l_1 <= ... <= l_p together with the internal diagonals
// l^1..l^{p-3} that couple consecutive triangles (l^a, l_{a+2}, l^{a+1}),
// where l^0 = l_1 and l^{p-2} = l_p.
struct SpectrumKey {
    std::vector<int> l;
    std::vector<int> diag;

    auto operator<=>(const SpectrumKey&) const = default;
    bool operator==(const SpectrumKey&) const = default;
    std::string str() const;
};

struct SpectrumEntry {
    double value = 0.0;
    double se = 0.0;    // standard error (0 for exact tables)
    double imag = 0.0;  // imaginary residue of the defining sum
};

// Why a key is rejected, or an empty string when it is admissible.
std::string key_problem(int p, const SpectrumKey& key);
inline bool key_admissible(int p, const SpectrumKey& key) { return key_problem(p, key).empty(); }

// Table of an order-p polyspectrum on its principal domain.
class PolySpectrum {
public:
    explicit PolySpectrum(int p);

    int order() const noexcept { return p_; }

    // Stores an entry; throws InvalidArgument for keys outside the domain.
    void set(const SpectrumKey& key, double value, double se = 0.0, double imag = 0.0);

    // Value at key, or 0 when the key is absent.
    double value(const SpectrumKey& key) const;
    const SpectrumEntry* find(const SpectrumKey& key) const;

    const std::map<SpectrumKey, SpectrumEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    int max_degree() const;

private:
    int p_;
    std::map<SpectrumKey, SpectrumEntry> entries_;
};

// Sorted, parity- and triangle-admissible keys with all degrees <= lmax.
// For p >= 4 keys whose coupling is odd across a tied outer pair
// (l_1 = l_2 with odd l^1, or l_{p-1} = l_p with odd l^{p-3}) are left out:
// the permutation symmetry of cumulants forces those values to vanish.
std::vector<SpectrumKey> principal_domain(int p, int lmax);

// Weight of S_p(l | diag) in Cum_p(Z_{l_1}^{m_1}, ..., Z_{l_p}^{m_p}); the same
// weight maps cumulants back to S_p. Zero unless sum(m) = 0 and every
// triangle admits its orders.
double coupling_weight(const std::vector<int>& l, const std::vector<int>& diag, const std::vector<int>& m);

// Cumulant implied by S for degrees exactly in the given order (l must be
// sorted ascending) and the matching orders.
cplx coupled_cumulant(const PolySpectrum& s, const std::vector<int>& l, const std::vector<int>& m);

// Cumulant of the coefficient array implied by S for arbitrary (l_i, m_i);
// the pairs are put in canonical order first, so the result is exactly
// symmetric under simultaneous permutations.
cplx cumulants_from_polyspectrum(const PolySpectrum& s, const std::vector<int>& l, const std::vector<int>& m);

// Admissible table closest in spirit to s: the implied cumulants are
// symmetrized over permutations of tied degrees and mapped back. Tables in
// the image of this projection satisfy exact mutual inversion.
PolySpectrum admissible_projection(const PolySpectrum& s, int lmax);

using CumulantFunction = std::function<cplx(const std::vector<int>& l, const std::vector<int>& m)>;

// S_p on the principal domain up to lmax from a cumulant table; entries keep
// the imaginary residue of the sum.
PolySpectrum polyspectrum_from_cumulants(int p, const CumulantFunction& cum, int lmax);

// Replicate ensemble of coefficient arrays.
struct CoeffEnsemble {
    std::vector<HarmonicCoeffs> replicates;
    std::uint64_t master_seed = 0;
    std::string lineage;

    int lmax() const;
    int size() const noexcept { return static_cast<int>(replicates.size()); }
};

// f_l = (1/N) sum_reps (1/(2l+1)) sum_m |Z_l^m|^2.
AngularPowerSpectrum power_spectrum_estimate(const CoeffEnsemble& e);

struct EstimateOptions {
    int threads = 1;
    // Delete-a-group jackknife with this many groups; 0 means leave-one-out.
    int jackknife_groups = 0;
    // Only keys accepted by the filter are estimated (all when empty).
    std::function<bool(const SpectrumKey&)> key_filter;
};

// Plug-in estimate of S_p on the principal domain up to lmax with jackknife
// standard errors. Order +m and -m terms are combined, so the estimate is
// real by construction.
PolySpectrum polyspectrum_estimate(int p, const CoeffEnsemble& e, int lmax, const EstimateOptions& opts = {});

// B_3(l1 l2 l3) / sqrt(f_l1 f_l2 f_l3) per key.
std::map<SpectrumKey, double> bicoherence(const PolySpectrum& b, const AngularPowerSpectrum& f);

// Rotation-invariant bispectral basis function in the reduced coordinates:
// L_3 at the north pole, L_2 = (theta2, 0), L_1 = (theta1, phi1).
cplx bispectrum_basis(int l1, int l2, int l3, double theta1, double phi1, double theta2);

// Third-order cumulant of the field at the reduced configuration, summed over
// all ordered degree triples up to lmax.
double bicovariance_series(const PolySpectrum& b, double theta1, double phi1, double theta2, int lmax);

// Same quantity named by the triangle of locations: angle_23 is the arc
// L_2-L_3, angle_13 the arc L_1-L_3 and surface_angle the angle at L_3.
double bicovariance_triangle(const PolySpectrum& b, double angle_23, double angle_13, double surface_angle, int lmax);

using Location = std::array<double, 2>;  // (theta, phi)

// Third-order cumulant Cum_3(X(L1), X(L2), X(L3)) evaluated from the
// harmonic representation directly.
double bicovariance_at(const PolySpectrum& b, const Location& L1, const Location& L2, const Location& L3, int lmax);

// (4 pi)^{3/2} / sqrt(prod(2 l_j + 1)) sum_m 3j * Y Y Y.
cplx invariant_I3(int l1, int l2, int l3, const Location& L1, const Location& L2, const Location& L3);

// (4 pi / (2l+1)) sum_m Y_l^m(L1)^* Y_l^m(L2) = P_l(L1 . L2).
double invariant_I2(int l, const Location& L1, const Location& L2);

}  // namespace isospec
