#include "isospec/spectra.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "isospec/errors.hpp"
#include "isospec/harmonics.hpp"
#include "isospec/wigner.hpp"

namespace isospec {

namespace {

constexpr double kPi = std::numbers::pi;

void check_order(const char* who, int p) {
    if (p < kMinPolyOrder || p > kMaxPolyOrder)
        throw InvalidArgument(std::string(who) + ": order " + std::to_string(p) + " outside [" +
                              std::to_string(kMinPolyOrder) + ", " + std::to_string(kMaxPolyOrder) + "]");
}

// Memoized 3j blocks keyed by (l1, l2, l3) over (m1, m2); m3 = -m1 - m2.
class ThreeJTable {
public:
    double operator()(int l1, int l2, int l3, int m1, int m2, int m3) {
        if (m1 + m2 + m3 != 0) return 0.0;
        if (std::abs(m1) > l1 || std::abs(m2) > l2 || std::abs(m3) > l3) return 0.0;
        const std::vector<double>& block = get(l1, l2, l3);
        if (block.empty()) return 0.0;
        return block[static_cast<std::size_t>((m1 + l1) * (2 * l2 + 1) + (m2 + l2))];
    }

private:
    const std::vector<double>& get(int l1, int l2, int l3) {
        const std::uint64_t key = (static_cast<std::uint64_t>(l1) << 40) | (static_cast<std::uint64_t>(l2) << 20) |
                                  static_cast<std::uint64_t>(l3);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        std::vector<double> block;
        if (triangle_ok(l1, l2, l3)) {
            block.assign(static_cast<std::size_t>((2 * l1 + 1) * (2 * l2 + 1)), 0.0);
            for (int m1 = -l1; m1 <= l1; ++m1)
                for (int m2 = -l2; m2 <= l2; ++m2) {
                    const int m3 = -m1 - m2;
                    if (std::abs(m3) > l3) continue;
                    block[static_cast<std::size_t>((m1 + l1) * (2 * l2 + 1) + (m2 + l2))] =
                        wigner_3j(l1, l2, l3, m1, m2, m3);
                }
        }
        return cache_.emplace(key, std::move(block)).first->second;
    }

    std::unordered_map<std::uint64_t, std::vector<double>> cache_;
};

// Weight of the coupling chain (see coupling_weight) with a pluggable 3j source.
template <class ThreeJ>
double chain_weight(const std::vector<int>& l, const std::vector<int>& diag, const std::vector<int>& m, ThreeJ&& threej) {
    const int p = static_cast<int>(l.size());
    int msum = 0;
    for (int v : m) msum += v;
    if (msum != 0) return 0.0;
    double w = 1.0;
    int M = -m[0];  // order attached to l^0 = l_1
    int Lprev = l[0];
    int sign_exp = 0;
    for (int a = 0; a <= p - 3; ++a) {
        const bool last = (a == p - 3);
        const int Lnext = last ? l[p - 1] : diag[a];
        const int Mnext = last ? m[p - 1] : M - m[a + 1];
        if (std::abs(Mnext) > Lnext) return 0.0;
        const double t = threej(Lprev, l[a + 1], Lnext, -M, m[a + 1], Mnext);
        if (t == 0.0) return 0.0;
        w *= t;
        if (!last) {
            sign_exp += Mnext;
            w *= std::sqrt(2.0 * Lnext + 1.0);
        }
        Lprev = Lnext;
        M = Mnext;
    }
    return (sign_exp % 2 == 0) ? w : -w;
}

double plain_3j(int l1, int l2, int l3, int m1, int m2, int m3) { return wigner_3j(l1, l2, l3, m1, m2, m3); }

// Calls f(diag) for every admissible diagonal chain of the (sorted) degrees.
template <class F>
void for_each_diag(const std::vector<int>& l, F&& f) {
    const int p = static_cast<int>(l.size());
    std::vector<int> diag(static_cast<std::size_t>(std::max(0, p - 3)));
    auto rec = [&](auto&& self, int a, int Lprev) -> void {
        if (a == p - 3) {
            if (triangle_ok(Lprev, l[p - 2], l[p - 1])) f(diag);
            return;
        }
        const int lo = std::abs(Lprev - l[a + 1]);
        const int hi = Lprev + l[a + 1];
        for (int d = lo; d <= hi; ++d) {
            diag[a] = d;
            self(self, a + 1, d);
        }
    };
    rec(rec, 0, l[0]);
}

// Calls f(m) for every order tuple with |m_i| <= l_i and zero sum.
template <class F>
void for_each_zero_sum(const std::vector<int>& l, F&& f) {
    const int p = static_cast<int>(l.size());
    std::vector<int> m(p, 0);
    std::vector<int> tail_cap(p + 1, 0);  // sum of l over positions >= i
    for (int i = p - 1; i >= 0; --i) tail_cap[i] = tail_cap[i + 1] + l[i];
    auto rec = [&](auto&& self, int i, int partial) -> void {
        if (i == p - 1) {
            const int last = -partial;
            if (std::abs(last) <= l[p - 1]) {
                m[p - 1] = last;
                f(m);
            }
            return;
        }
        for (int v = -l[i]; v <= l[i]; ++v) {
            const int s = partial + v;
            if (std::abs(s) > tail_cap[i + 1]) continue;
            m[i] = v;
            self(self, i + 1, s);
        }
    };
    rec(rec, 0, 0);
}

bool tie_parity_violation(const SpectrumKey& key) {
    const int p = static_cast<int>(key.l.size());
    if (p < 4) return false;
    if (key.l[0] == key.l[1] && key.diag.front() % 2 != 0) return true;
    if (key.l[p - 2] == key.l[p - 1] && key.diag.back() % 2 != 0) return true;
    return false;
}

struct FlatPartitions {
    std::vector<double> coeff;
    std::vector<int> start;  // offsets into masks, size terms+1
    std::vector<std::uint32_t> masks;
};

FlatPartitions flatten_partitions(int p) {
    FlatPartitions fp;
    fp.start.push_back(0);
    for (const Partition& part : partitions(p)) {
        const int b = static_cast<int>(part.blocks.size());
        double c = 1.0;
        for (int j = 2; j < b; ++j) c *= j;
        fp.coeff.push_back((b % 2 == 1) ? c : -c);
        for (std::uint32_t mk : part.masks()) fp.masks.push_back(mk);
        fp.start.push_back(static_cast<int>(fp.masks.size()));
    }
    return fp;
}

inline cplx flat_cumulant(const FlatPartitions& fp, const cplx* mom) {
    cplx total(0.0, 0.0);
    const std::size_t terms = fp.coeff.size();
    for (std::size_t t = 0; t < terms; ++t) {
        cplx prod = mom[fp.masks[static_cast<std::size_t>(fp.start[t])]];
        for (int k = fp.start[t] + 1; k < fp.start[t + 1]; ++k) prod *= mom[fp.masks[static_cast<std::size_t>(k)]];
        total += fp.coeff[t] * prod;
    }
    return total;
}

// Precomputed Y_l^m at one location for m >= 0.
class YTable {
public:
    YTable(int lmax, const Location& loc) : leg_(lmax, loc[0]), phi_(loc[1]) {}
    cplx operator()(int l, int m) const {
        const int am = std::abs(m);
        const cplx v = leg_(l, am) * std::polar(1.0, am * phi_);
        if (m >= 0) return v;
        return (am % 2 == 0) ? std::conj(v) : -std::conj(v);
    }

private:
    NormalizedLegendre leg_;
    double phi_;
};

double key_value_sorted(const PolySpectrum& b, int l1, int l2, int l3) {
    std::array<int, 3> s{l1, l2, l3};
    std::sort(s.begin(), s.end());
    return b.value(SpectrumKey{{s[0], s[1], s[2]}, {}});
}

}  // namespace

std::string SpectrumKey::str() const {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < l.size(); ++i) os << (i ? "," : "") << l[i];
    if (!diag.empty()) {
        os << "|";
        for (std::size_t i = 0; i < diag.size(); ++i) os << (i ? "," : "") << diag[i];
    }
    os << ")";
    return os.str();
}

std::string key_problem(int p, const SpectrumKey& key) {
    if (p < kMinPolyOrder || p > kMaxPolyOrder) return "unsupported order " + std::to_string(p);
    if (static_cast<int>(key.l.size()) != p) return "key " + key.str() + " does not have " + std::to_string(p) + " degrees";
    if (static_cast<int>(key.diag.size()) != p - 3)
        return "key " + key.str() + " does not have " + std::to_string(p - 3) + " diagonals";
    for (int v : key.l)
        if (v < 0) return "key " + key.str() + " has a negative degree";
    for (int v : key.diag)
        if (v < 0) return "key " + key.str() + " has a negative diagonal";
    if (!std::is_sorted(key.l.begin(), key.l.end())) return "key " + key.str() + " degrees are not ascending";
    if (std::accumulate(key.l.begin(), key.l.end(), 0) % 2 != 0) return "key " + key.str() + " has an odd degree sum";
    int Lprev = key.l[0];
    for (int a = 0; a <= p - 3; ++a) {
        const int Lnext = (a == p - 3) ? key.l[p - 1] : key.diag[a];
        if (!triangle_ok(Lprev, key.l[a + 1], Lnext)) return "key " + key.str() + " violates a triangle inequality";
        Lprev = Lnext;
    }
    if (tie_parity_violation(key)) return "key " + key.str() + " couples a tied pair through an odd diagonal";
    return {};
}

PolySpectrum::PolySpectrum(int p) : p_(p) { check_order("PolySpectrum", p); }

void PolySpectrum::set(const SpectrumKey& key, double value, double se, double imag) {
    const std::string problem = key_problem(p_, key);
    if (!problem.empty()) throw InvalidArgument("PolySpectrum::set: " + problem);
    entries_[key] = SpectrumEntry{value, se, imag};
}

double PolySpectrum::value(const SpectrumKey& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? 0.0 : it->second.value;
}

const SpectrumEntry* PolySpectrum::find(const SpectrumKey& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

int PolySpectrum::max_degree() const {
    int out = -1;
    for (const auto& [key, entry] : entries_) out = std::max(out, key.l.back());
    return out;
}

std::vector<SpectrumKey> principal_domain(int p, int lmax) {
    check_order("principal_domain", p);
    if (lmax < 0) throw InvalidArgument("principal_domain: negative lmax");
    std::vector<SpectrumKey> out;
    std::vector<int> l(p, 0);
    auto rec = [&](auto&& self, int i, int lo) -> void {
        if (i == p) {
            if (std::accumulate(l.begin(), l.end(), 0) % 2 != 0) return;
            for_each_diag(l, [&](const std::vector<int>& diag) {
                SpectrumKey key{l, diag};
                if (!tie_parity_violation(key)) out.push_back(std::move(key));
            });
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

double coupling_weight(const std::vector<int>& l, const std::vector<int>& diag, const std::vector<int>& m) {
    const int p = static_cast<int>(l.size());
    check_order("coupling_weight", p);
    if (static_cast<int>(m.size()) != p || static_cast<int>(diag.size()) != p - 3)
        throw InvalidArgument("coupling_weight: inconsistent tuple sizes");
    for (int i = 0; i < p; ++i)
        if (l[i] < 0 || std::abs(m[i]) > l[i]) throw InvalidArgument("coupling_weight: order exceeds degree");
    return chain_weight(l, diag, m, plain_3j);
}

cplx coupled_cumulant(const PolySpectrum& s, const std::vector<int>& l, const std::vector<int>& m) {
    const int p = s.order();
    if (static_cast<int>(l.size()) != p || static_cast<int>(m.size()) != p)
        throw InvalidArgument("coupled_cumulant: expected " + std::to_string(p) + " degrees and orders");
    if (!std::is_sorted(l.begin(), l.end())) throw InvalidArgument("coupled_cumulant: degrees must be ascending");
    for (int i = 0; i < p; ++i)
        if (l[i] < 0 || std::abs(m[i]) > l[i]) throw InvalidArgument("coupled_cumulant: order exceeds degree");
    if (std::accumulate(m.begin(), m.end(), 0) != 0) return {0.0, 0.0};
    if (std::accumulate(l.begin(), l.end(), 0) % 2 != 0) return {0.0, 0.0};
    double total = 0.0;
    for_each_diag(l, [&](const std::vector<int>& diag) {
        const SpectrumEntry* e = s.find(SpectrumKey{l, diag});
        if (e == nullptr || e->value == 0.0) return;
        total += chain_weight(l, diag, m, plain_3j) * e->value;
    });
    return {total, 0.0};
}

cplx cumulants_from_polyspectrum(const PolySpectrum& s, const std::vector<int>& l, const std::vector<int>& m) {
    const int p = s.order();
    if (static_cast<int>(l.size()) != p || static_cast<int>(m.size()) != p)
        throw InvalidArgument("cumulants_from_polyspectrum: expected " + std::to_string(p) + " degrees and orders");
    std::vector<std::pair<int, int>> pairs(p);
    for (int i = 0; i < p; ++i) {
        if (l[i] < 0 || std::abs(m[i]) > l[i])
            throw InvalidArgument("cumulants_from_polyspectrum: order " + std::to_string(m[i]) + " exceeds degree " +
                                  std::to_string(l[i]));
        pairs[i] = {l[i], m[i]};
    }
    std::sort(pairs.begin(), pairs.end());
    std::vector<int> ls(p), ms(p);
    for (int i = 0; i < p; ++i) {
        ls[i] = pairs[i].first;
        ms[i] = pairs[i].second;
    }
    return coupled_cumulant(s, ls, ms);
}

PolySpectrum polyspectrum_from_cumulants(int p, const CumulantFunction& cum, int lmax) {
    check_order("polyspectrum_from_cumulants", p);
    PolySpectrum out(p);
    ThreeJTable tj;
    const std::vector<SpectrumKey> keys = principal_domain(p, lmax);
    std::size_t i = 0;
    while (i < keys.size()) {
        std::size_t j = i;
        while (j < keys.size() && keys[j].l == keys[i].l) ++j;
        const std::vector<int>& l = keys[i].l;
        std::vector<cplx> sums(j - i, cplx(0.0, 0.0));
        for_each_zero_sum(l, [&](const std::vector<int>& m) {
            std::vector<double> w(j - i);
            bool any = false;
            for (std::size_t k = i; k < j; ++k) {
                w[k - i] = chain_weight(l, keys[k].diag, m, tj);
                any = any || w[k - i] != 0.0;
            }
            if (!any) return;
            const cplx c = cum(l, m);
            if (c == cplx(0.0, 0.0)) return;
            for (std::size_t k = 0; k < w.size(); ++k) sums[k] += w[k] * c;
        });
        for (std::size_t k = i; k < j; ++k) {
            const cplx v = sums[k - i];
            if (v != cplx(0.0, 0.0)) out.set(keys[k], v.real(), 0.0, v.imag());
        }
        i = j;
    }
    return out;
}

int CoeffEnsemble::lmax() const {
    if (replicates.empty()) return -1;
    return replicates.front().lmax();
}

AngularPowerSpectrum power_spectrum_estimate(const CoeffEnsemble& e) {
    if (e.replicates.empty()) throw InvalidArgument("power_spectrum_estimate: empty ensemble");
    const int lmax = e.lmax();
    AngularPowerSpectrum out;
    out.f.assign(static_cast<std::size_t>(lmax + 1), 0.0);
    for (const HarmonicCoeffs& c : e.replicates) {
        if (c.lmax() != lmax) throw InvalidArgument("power_spectrum_estimate: replicates have different lmax");
        for (int l = 0; l <= lmax; ++l) {
            double s = 0.0;
            const cplx* b = c.block(l);
            for (int k = 0; k < 2 * l + 1; ++k) s += std::norm(b[k]);
            out.f[static_cast<std::size_t>(l)] += s / (2.0 * l + 1.0);
        }
    }
    for (double& v : out.f) v /= static_cast<double>(e.size());
    return out;
}

PolySpectrum polyspectrum_estimate(int p, const CoeffEnsemble& e, int lmax, const EstimateOptions& opts) {
    check_order("polyspectrum_estimate", p);
    const int N = e.size();
    if (N < p + 1)
        throw InvalidArgument("polyspectrum_estimate: order " + std::to_string(p) + " needs at least " +
                              std::to_string(p + 1) + " replicates, got " + std::to_string(N));
    if (lmax < 0 || lmax > e.lmax())
        throw InvalidArgument("polyspectrum_estimate: lmax " + std::to_string(lmax) + " outside ensemble band limit");
    for (const HarmonicCoeffs& c : e.replicates)
        if (c.lmax() != e.lmax()) throw InvalidArgument("polyspectrum_estimate: replicates have different lmax");
    const int G = (opts.jackknife_groups <= 0 || opts.jackknife_groups >= N) ? N : opts.jackknife_groups;
    if (G < 2) throw InvalidArgument("polyspectrum_estimate: jackknife needs at least 2 groups");

    // Centered columns for (l, m >= 0).
    const auto col_index = [](int l, int m) { return static_cast<std::size_t>(l * (l + 1) / 2 + m); };
    std::vector<std::vector<cplx>> cols(col_index(lmax, lmax) + 1, std::vector<cplx>(static_cast<std::size_t>(N)));
    for (int l = 0; l <= lmax; ++l)
        for (int m = 0; m <= l; ++m) {
            std::vector<cplx>& col = cols[col_index(l, m)];
            cplx mean(0.0, 0.0);
            for (int n = 0; n < N; ++n) {
                col[static_cast<std::size_t>(n)] = e.replicates[static_cast<std::size_t>(n)](l, m);
                mean += col[static_cast<std::size_t>(n)];
            }
            mean /= static_cast<double>(N);
            for (cplx& v : col) v -= mean;
        }

    std::vector<int> group_of(static_cast<std::size_t>(N));
    std::vector<int> group_size(static_cast<std::size_t>(G), 0);
    for (int n = 0; n < N; ++n) {
        const int g = static_cast<int>(static_cast<long long>(n) * G / N);
        group_of[static_cast<std::size_t>(n)] = g;
        ++group_size[static_cast<std::size_t>(g)];
    }

    // Keys grouped by degree tuple.
    std::vector<std::pair<std::vector<int>, std::vector<SpectrumKey>>> work;
    for (SpectrumKey& key : principal_domain(p, lmax)) {
        if (opts.key_filter && !opts.key_filter(key)) continue;
        if (work.empty() || work.back().first != key.l) work.emplace_back(key.l, std::vector<SpectrumKey>{});
        work.back().second.push_back(std::move(key));
    }

    const FlatPartitions fp = flatten_partitions(p);
    const std::uint32_t nmask = 1u << p;
    std::vector<std::vector<std::pair<SpectrumKey, SpectrumEntry>>> results(work.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        ThreeJTable tj;
        std::vector<cplx> prods(static_cast<std::size_t>(N) * nmask);
        std::vector<cplx> gsum(G == N ? 0 : static_cast<std::size_t>(G) * nmask);
        std::vector<cplx> total(nmask), mom(nmask);
        std::vector<double> re_kappa(static_cast<std::size_t>(G));
        std::vector<const cplx*> src(static_cast<std::size_t>(p));
        std::vector<int> flip(static_cast<std::size_t>(p));  // 0: as is, 1: conj, 2: -conj
        std::vector<cplx> x(static_cast<std::size_t>(p));
        while (true) {
            const std::size_t t = next.fetch_add(1);
            if (t >= work.size()) break;
            const std::vector<int>& l = work[t].first;
            const std::vector<SpectrumKey>& keys = work[t].second;
            const std::size_t nk = keys.size();
            std::vector<double> full(nk, 0.0);
            std::vector<double> loo(nk * static_cast<std::size_t>(G), 0.0);
            std::vector<double> w(nk);

            for_each_zero_sum(l, [&](const std::vector<int>& m) {
                // Keep one representative of each {m, -m} pair.
                int first_nonzero = 0;
                for (int v : m)
                    if (v != 0) {
                        first_nonzero = v;
                        break;
                    }
                if (first_nonzero < 0) return;
                const double factor = (first_nonzero == 0) ? 1.0 : 2.0;
                bool any = false;
                for (std::size_t k = 0; k < nk; ++k) {
                    w[k] = factor * chain_weight(l, keys[k].diag, m, tj);
                    any = any || w[k] != 0.0;
                }
                if (!any) return;

                for (int i = 0; i < p; ++i) {
                    src[static_cast<std::size_t>(i)] = cols[col_index(l[i], std::abs(m[i]))].data();
                    flip[static_cast<std::size_t>(i)] = m[i] >= 0 ? 0 : (m[i] % 2 == 0 ? 1 : 2);
                }
                std::fill(total.begin(), total.end(), cplx(0.0, 0.0));
                if (G != N) std::fill(gsum.begin(), gsum.end(), cplx(0.0, 0.0));
                for (int n = 0; n < N; ++n) {
                    for (int i = 0; i < p; ++i) {
                        const cplx v = src[static_cast<std::size_t>(i)][n];
                        const int f = flip[static_cast<std::size_t>(i)];
                        x[static_cast<std::size_t>(i)] = f == 0 ? v : (f == 1 ? std::conj(v) : -std::conj(v));
                    }
                    cplx* pr = prods.data() + static_cast<std::size_t>(n) * nmask;
                    pr[0] = cplx(1.0, 0.0);
                    for (std::uint32_t mk = 1; mk < nmask; ++mk) {
                        pr[mk] = pr[mk & (mk - 1)] * x[static_cast<std::size_t>(__builtin_ctz(mk))];
                        total[mk] += pr[mk];
                    }
                    if (G != N) {
                        cplx* gs = gsum.data() + static_cast<std::size_t>(group_of[static_cast<std::size_t>(n)]) * nmask;
                        for (std::uint32_t mk = 1; mk < nmask; ++mk) gs[mk] += pr[mk];
                    }
                }
                const cplx* groups = (G == N) ? prods.data() : gsum.data();
                for (std::uint32_t mk = 1; mk < nmask; ++mk) mom[mk] = total[mk] / static_cast<double>(N);
                const double kfull = flat_cumulant(fp, mom.data()).real();
                for (int g = 0; g < G; ++g) {
                    const cplx* gs = groups + static_cast<std::size_t>(g) * nmask;
                    const double inv = 1.0 / static_cast<double>(N - group_size[static_cast<std::size_t>(g)]);
                    for (std::uint32_t mk = 1; mk < nmask; ++mk) mom[mk] = (total[mk] - gs[mk]) * inv;
                    re_kappa[static_cast<std::size_t>(g)] = flat_cumulant(fp, mom.data()).real();
                }
                for (std::size_t k = 0; k < nk; ++k) {
                    if (w[k] == 0.0) continue;
                    full[k] += w[k] * kfull;
                    double* dst = loo.data() + k * static_cast<std::size_t>(G);
                    for (int g = 0; g < G; ++g) dst[g] += w[k] * re_kappa[static_cast<std::size_t>(g)];
                }
            });

            auto& out = results[t];
            out.reserve(nk);
            for (std::size_t k = 0; k < nk; ++k) {
                const double* v = loo.data() + k * static_cast<std::size_t>(G);
                double mean = 0.0;
                for (int g = 0; g < G; ++g) mean += v[g];
                mean /= G;
                double ss = 0.0;
                for (int g = 0; g < G; ++g) ss += (v[g] - mean) * (v[g] - mean);
                const double se = std::sqrt(ss * (G - 1.0) / G);
                out.emplace_back(keys[k], SpectrumEntry{full[k], se, 0.0});
            }
        }
    };

    const int nthreads = std::max(1, std::min<int>(opts.threads, static_cast<int>(work.size())));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    PolySpectrum out(p);
    for (const auto& bucket : results)
        for (const auto& [key, entry] : bucket) out.set(key, entry.value, entry.se, entry.imag);
    return out;
}

std::map<SpectrumKey, double> bicoherence(const PolySpectrum& b, const AngularPowerSpectrum& f) {
    if (b.order() != 3) throw InvalidArgument("bicoherence: expects an order-3 spectrum");
    std::map<SpectrumKey, double> out;
    for (const auto& [key, entry] : b.entries()) {
        double denom = 1.0;
        for (int l : key.l) {
            if (l > f.lmax()) throw InvalidArgument("bicoherence: spectrum missing degree " + std::to_string(l));
            const double fl = f.f[static_cast<std::size_t>(l)];
            if (!(fl > 0.0)) throw InvalidArgument("bicoherence: zero spectrum at degree " + std::to_string(l));
            denom *= fl;
        }
        out[key] = entry.value / std::sqrt(denom);
    }
    return out;
}

cplx bispectrum_basis(int l1, int l2, int l3, double theta1, double phi1, double theta2) {
    if (l1 < 0 || l2 < 0 || l3 < 0) throw InvalidArgument("bispectrum_basis: negative degree");
    if (!triangle_ok(l1, l2, l3)) return {0.0, 0.0};
    const YTable y1(l1, {theta1, phi1});
    const YTable y2(l2, {theta2, 0.0});
    cplx total(0.0, 0.0);
    const int mm = std::min(l1, l2);
    for (int m = -mm; m <= mm; ++m) {
        const double t = wigner_3j(l1, l2, l3, m, -m, 0);
        if (t != 0.0) total += t * y1(l1, m) * y2(l2, -m);
    }
    return std::sqrt((2.0 * l3 + 1.0) / (4.0 * kPi)) * total;
}

double bicovariance_series(const PolySpectrum& b, double theta1, double phi1, double theta2, int lmax) {
    if (b.order() != 3) throw InvalidArgument("bicovariance_series: expects an order-3 spectrum");
    if (lmax < 0) throw InvalidArgument("bicovariance_series: negative lmax");
    const YTable y1(lmax, {theta1, phi1});
    const YTable y2(lmax, {theta2, 0.0});
    ThreeJTable tj;
    double total = 0.0;
    for (int l1 = 0; l1 <= lmax; ++l1)
        for (int l2 = 0; l2 <= lmax; ++l2)
            for (int l3 = std::abs(l1 - l2); l3 <= std::min(lmax, l1 + l2); ++l3) {
                if ((l1 + l2 + l3) % 2 != 0) continue;
                const double bv = key_value_sorted(b, l1, l2, l3);
                if (bv == 0.0) continue;
                double basis = 0.0;
                const int mm = std::min(l1, l2);
                for (int m = -mm; m <= mm; ++m) {
                    const double t = tj(l1, l2, l3, m, -m, 0);
                    if (t != 0.0) basis += t * (y1(l1, m) * y2(l2, -m)).real();
                }
                total += bv * std::sqrt((2.0 * l3 + 1.0) / (4.0 * kPi)) * basis;
            }
    return total;
}

double bicovariance_triangle(const PolySpectrum& b, double angle_23, double angle_13, double surface_angle, int lmax) {
    return bicovariance_series(b, angle_13, surface_angle, angle_23, lmax);
}

double bicovariance_at(const PolySpectrum& b, const Location& L1, const Location& L2, const Location& L3, int lmax) {
    if (b.order() != 3) throw InvalidArgument("bicovariance_at: expects an order-3 spectrum");
    const YTable y1(lmax, L1), y2(lmax, L2), y3(lmax, L3);
    ThreeJTable tj;
    double total = 0.0;
    for (int l1 = 0; l1 <= lmax; ++l1)
        for (int l2 = 0; l2 <= lmax; ++l2)
            for (int l3 = std::abs(l1 - l2); l3 <= std::min(lmax, l1 + l2); ++l3) {
                if ((l1 + l2 + l3) % 2 != 0) continue;
                const double bv = key_value_sorted(b, l1, l2, l3);
                if (bv == 0.0) continue;
                cplx s(0.0, 0.0);
                for (int m1 = -l1; m1 <= l1; ++m1)
                    for (int m2 = -l2; m2 <= l2; ++m2) {
                        const int m3 = -m1 - m2;
                        if (std::abs(m3) > l3) continue;
                        const double t = tj(l1, l2, l3, m1, m2, m3);
                        if (t != 0.0) s += t * y1(l1, m1) * y2(l2, m2) * y3(l3, m3);
                    }
                total += bv * s.real();
            }
    return total;
}

cplx invariant_I3(int l1, int l2, int l3, const Location& L1, const Location& L2, const Location& L3) {
    if (l1 < 0 || l2 < 0 || l3 < 0) throw InvalidArgument("invariant_I3: negative degree");
    if (!triangle_ok(l1, l2, l3)) return {0.0, 0.0};
    const int lm = std::max({l1, l2, l3});
    const YTable y1(lm, L1), y2(lm, L2), y3(lm, L3);
    cplx s(0.0, 0.0);
    for (int m1 = -l1; m1 <= l1; ++m1)
        for (int m2 = -l2; m2 <= l2; ++m2) {
            const int m3 = -m1 - m2;
            if (std::abs(m3) > l3) continue;
            const double t = wigner_3j(l1, l2, l3, m1, m2, m3);
            if (t != 0.0) s += t * y1(l1, m1) * y2(l2, m2) * y3(l3, m3);
        }
    return std::pow(4.0 * kPi, 1.5) / std::sqrt((2.0 * l1 + 1.0) * (2.0 * l2 + 1.0) * (2.0 * l3 + 1.0)) * s;
}

double invariant_I2(int l, const Location& L1, const Location& L2) {
    if (l < 0) throw InvalidArgument("invariant_I2: negative degree");
    const YTable y1(l, L1), y2(l, L2);
    cplx s(0.0, 0.0);
    for (int m = -l; m <= l; ++m) s += std::conj(y1(l, m)) * y2(l, m);
    return 4.0 * kPi / (2.0 * l + 1.0) * s.real();
}

}  // namespace isospec

namespace isospec {

PolySpectrum admissible_projection(const PolySpectrum& s, int lmax) {
    const int p = s.order();
    auto sym = [&](const std::vector<int>& l, const std::vector<int>& m) -> cplx {
        // l is ascending; average over permutations of orders within tied runs.
        std::vector<int> idx(p);
        std::iota(idx.begin(), idx.end(), 0);
        cplx total(0.0, 0.0);
        int count = 0;
        std::vector<int> mp(p);
        do {
            bool within_ties = true;
            for (int i = 0; i < p && within_ties; ++i) within_ties = l[idx[i]] == l[i];
            if (!within_ties) continue;
            for (int i = 0; i < p; ++i) mp[i] = m[idx[i]];
            total += coupled_cumulant(s, l, mp);
            ++count;
        } while (std::next_permutation(idx.begin(), idx.end()));
        return total / static_cast<double>(count);
    };
    return polyspectrum_from_cumulants(p, sym, lmax);
}

}  // namespace isospec
