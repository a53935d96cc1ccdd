#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "isospec/coeffs.hpp"
#include "isospec/spectra.hpp"
#include "isospec/wigner.hpp"

namespace isospec {

enum class M0Law { gaussian, centered_exponential, centered_gamma };

// Law of the real m = 0 entry of one row before scaling to variance f_l.
struct M0Distribution {
    M0Law law = M0Law::gaussian;
    double rate = 1.0;   // exponential and gamma
    double shape = 1.0;  // gamma

    // Cumulants of the law standardized to unit variance.
    double standardized_kappa3() const;
    double standardized_kappa4() const;
    std::string name() const;
};

// Uncorrelated base array: per-degree variance f_l, the m = 0 entry drawn
// from a (possibly non-Gaussian) law, m > 0 entries complex Gaussian with
// E|Z|^2 = f_l.
struct BaseArraySpec {
    AngularPowerSpectrum f;
    std::vector<M0Distribution> m0;  // one per degree

    int lmax() const noexcept { return f.lmax(); }
    double kappa2(int l) const;
    double kappa3(int l) const;
    double kappa4(int l) const;
    void validate() const;
};

struct SimulationConfig {
    std::variant<BaseArraySpec, AngularPowerSpectrum> spec;
    int n_replicates = 1;
    std::uint64_t master_seed = 0;
    int lmax = 0;
    int threads = 1;

    void validate() const;
};

HarmonicCoeffs gaussian_coefficients(const AngularPowerSpectrum& f, Rng& rng);
HarmonicCoeffs base_array(const BaseArraySpec& spec, Rng& rng);

// Rotates the array by one Haar-random rotation.
HarmonicCoeffs isotropize(const HarmonicCoeffs& c, Rng& rng);

// Target B_3 (p = 3) or T_4 (p = 4) of the Haar-rotated base array on the
// full principal domain up to spec.lmax().
PolySpectrum theoretical_polyspectra(const BaseArraySpec& spec, int p);

// Random stream of replicate i, derived from (master_seed, i) only.
Rng replicate_rng(std::uint64_t master_seed, std::uint64_t index);

CoeffEnsemble run_ensemble(const SimulationConfig& cfg);

}  // namespace isospec
