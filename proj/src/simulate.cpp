#include "isospec/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "isospec/errors.hpp"

namespace isospec {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_spectrum(const char* who, const AngularPowerSpectrum& f) {
    if (f.f.empty()) throw ConfigError(std::string(who) + ": empty spectrum");
    for (std::size_t l = 0; l < f.f.size(); ++l)
        if (!(f.f[l] >= 0.0) || !std::isfinite(f.f[l]))
            throw ConfigError(std::string(who) + ": spectrum value at degree " + std::to_string(l) +
                              " must be finite and nonnegative");
}

// Standardized draw (mean 0, variance 1) from the m = 0 law.
double standardized_draw(const M0Distribution& d, Rng& rng) {
    switch (d.law) {
        case M0Law::gaussian:
            return std::normal_distribution<double>(0.0, 1.0)(rng);
        case M0Law::centered_exponential: {
            const double e = std::exponential_distribution<double>(d.rate)(rng);
            return d.rate * e - 1.0;
        }
        case M0Law::centered_gamma: {
            const double g = std::gamma_distribution<double>(d.shape, 1.0 / d.rate)(rng);
            return (g * d.rate - d.shape) / std::sqrt(d.shape);
        }
    }
    return 0.0;
}

}  // namespace

double M0Distribution::standardized_kappa3() const {
    switch (law) {
        case M0Law::gaussian: return 0.0;
        case M0Law::centered_exponential: return 2.0;
        case M0Law::centered_gamma: return 2.0 / std::sqrt(shape);
    }
    return 0.0;
}

double M0Distribution::standardized_kappa4() const {
    switch (law) {
        case M0Law::gaussian: return 0.0;
        case M0Law::centered_exponential: return 6.0;
        case M0Law::centered_gamma: return 6.0 / shape;
    }
    return 0.0;
}

std::string M0Distribution::name() const {
    switch (law) {
        case M0Law::gaussian: return "gaussian";
        case M0Law::centered_exponential: return "centered_exponential";
        case M0Law::centered_gamma: return "centered_gamma";
    }
    return "unknown";
}

double BaseArraySpec::kappa2(int l) const { return f.f.at(static_cast<std::size_t>(l)); }

double BaseArraySpec::kappa3(int l) const {
    return std::pow(kappa2(l), 1.5) * m0.at(static_cast<std::size_t>(l)).standardized_kappa3();
}

double BaseArraySpec::kappa4(int l) const {
    const double v = kappa2(l);
    return v * v * m0.at(static_cast<std::size_t>(l)).standardized_kappa4();
}

void BaseArraySpec::validate() const {
    check_spectrum("base array", f);
    if (m0.size() != f.f.size())
        throw ConfigError("base array: m0 law list has " + std::to_string(m0.size()) + " entries, expected " +
                          std::to_string(f.f.size()));
    for (std::size_t l = 0; l < m0.size(); ++l) {
        const M0Distribution& d = m0[l];
        if (d.law != M0Law::gaussian && !(d.rate > 0.0))
            throw ConfigError("base array: rate at degree " + std::to_string(l) + " must be positive");
        if (d.law == M0Law::centered_gamma && !(d.shape > 0.0))
            throw ConfigError("base array: shape at degree " + std::to_string(l) + " must be positive");
    }
}

void SimulationConfig::validate() const {
    if (n_replicates < 1) throw ConfigError("simulation: n_replicates must be at least 1");
    if (lmax < 0) throw ConfigError("simulation: lmax must be nonnegative");
    if (threads < 1) throw ConfigError("simulation: threads must be at least 1");
    std::visit(overloaded{[&](const BaseArraySpec& s) {
                              s.validate();
                              if (s.lmax() < lmax) throw ConfigError("simulation: base array shorter than lmax");
                          },
                          [&](const AngularPowerSpectrum& f) {
                              check_spectrum("simulation", f);
                              if (f.lmax() < lmax) throw ConfigError("simulation: spectrum shorter than lmax");
                          }},
               spec);
}

HarmonicCoeffs gaussian_coefficients(const AngularPowerSpectrum& f, Rng& rng) {
    check_spectrum("gaussian_coefficients", f);
    const int lmax = f.lmax();
    HarmonicCoeffs c(lmax);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int l = 0; l <= lmax; ++l) {
        const double fl = f.f[static_cast<std::size_t>(l)];
        const double sd0 = std::sqrt(fl);
        const double sd = std::sqrt(fl / 2.0);
        c.set(l, 0, cplx(sd0 * normal(rng), 0.0));
        for (int m = 1; m <= l; ++m) {
            const double re = sd * normal(rng);
            const double im = sd * normal(rng);
            c.set(l, m, cplx(re, im));
        }
    }
    return c;
}

HarmonicCoeffs base_array(const BaseArraySpec& spec, Rng& rng) {
    spec.validate();
    const int lmax = spec.lmax();
    HarmonicCoeffs c(lmax);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int l = 0; l <= lmax; ++l) {
        const double fl = spec.f.f[static_cast<std::size_t>(l)];
        c.set(l, 0, cplx(std::sqrt(fl) * standardized_draw(spec.m0[static_cast<std::size_t>(l)], rng), 0.0));
        const double sd = std::sqrt(fl / 2.0);
        for (int m = 1; m <= l; ++m) {
            const double re = sd * normal(rng);
            const double im = sd * normal(rng);
            c.set(l, m, cplx(re, im));
        }
    }
    return c;
}

HarmonicCoeffs isotropize(const HarmonicCoeffs& c, Rng& rng) {
    return rotate_coefficients(c, sample_haar_rotation(rng));
}

PolySpectrum theoretical_polyspectra(const BaseArraySpec& spec, int p) {
    spec.validate();
    if (p != 3 && p != 4) throw InvalidArgument("theoretical_polyspectra: order must be 3 or 4");
    PolySpectrum out(p);
    for (const SpectrumKey& key : principal_domain(p, spec.lmax())) {
        const int l = key.l.front();
        const bool diagonal = std::all_of(key.l.begin(), key.l.end(), [&](int v) { return v == l; });
        double value = 0.0;
        if (diagonal) {
            if (p == 3) {
                value = wigner_3j_zero(l, l, l) * spec.kappa3(l);
            } else {
                const int d = key.diag.front();
                const double t = wigner_3j_zero(l, l, d);
                value = std::sqrt(2.0 * d + 1.0) * t * t * spec.kappa4(l);
            }
        }
        out.set(key, value);
    }
    return out;
}

Rng replicate_rng(std::uint64_t master_seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed & 0xffffffffu), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(index & 0xffffffffu), static_cast<std::uint32_t>(index >> 32)};
    return Rng(seq);
}

CoeffEnsemble run_ensemble(const SimulationConfig& cfg) {
    cfg.validate();
    CoeffEnsemble out;
    out.master_seed = cfg.master_seed;
    out.lineage = "seed=" + std::to_string(cfg.master_seed) + ";replicates=" + std::to_string(cfg.n_replicates);
    out.replicates.resize(static_cast<std::size_t>(cfg.n_replicates));

    // Truncate the law to the configured band limit.
    std::variant<BaseArraySpec, AngularPowerSpectrum> spec = cfg.spec;
    std::visit(overloaded{[&](BaseArraySpec& s) {
                              s.f.f.resize(static_cast<std::size_t>(cfg.lmax + 1));
                              s.m0.resize(static_cast<std::size_t>(cfg.lmax + 1));
                          },
                          [&](AngularPowerSpectrum& f) { f.f.resize(static_cast<std::size_t>(cfg.lmax + 1)); }},
               spec);

    auto make = [&](std::size_t i) {
        Rng rng = replicate_rng(cfg.master_seed, i);
        out.replicates[i] = std::visit(overloaded{[&](const BaseArraySpec& s) { return isotropize(base_array(s, rng), rng); },
                                                  [&](const AngularPowerSpectrum& f) { return gaussian_coefficients(f, rng); }},
                                       spec);
    };
    const int nthreads = std::max(1, std::min(cfg.threads, cfg.n_replicates));
    if (nthreads == 1) {
        for (std::size_t i = 0; i < out.replicates.size(); ++i) make(i);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t)
            pool.emplace_back([&, t] {
                for (std::size_t i = static_cast<std::size_t>(t); i < out.replicates.size(); i += static_cast<std::size_t>(nthreads))
                    make(i);
            });
        for (auto& th : pool) th.join();
    }
    return out;
}

}  // namespace isospec
