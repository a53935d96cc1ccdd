#include "isospec/cumulants.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "isospec/errors.hpp"

namespace isospec {

namespace {

std::vector<Partition> enumerate_partitions(int n) {
    std::vector<Partition> out;
    // Restricted growth strings a[0] = 0, a[i] <= 1 + max(a[0..i-1]).
    std::vector<int> a(n, 0);
    while (true) {
        const int nblocks = 1 + *std::max_element(a.begin(), a.end());
        Partition p;
        p.blocks.assign(nblocks, {});
        for (int i = 0; i < n; ++i) p.blocks[a[i]].push_back(i);
        out.push_back(std::move(p));
        int i = n - 1;
        while (i > 0) {
            const int prefix_max = *std::max_element(a.begin(), a.begin() + i);
            if (a[i] <= prefix_max) break;
            --i;
        }
        if (i == 0) break;
        ++a[i];
        for (int j = i + 1; j < n; ++j) a[j] = 0;
    }
    std::stable_sort(out.begin(), out.end(), [](const Partition& x, const Partition& y) {
        if (x.blocks.size() != y.blocks.size()) return x.blocks.size() < y.blocks.size();
        return x.blocks < y.blocks;
    });
    return out;
}

struct PartitionTerms {
    std::vector<std::vector<std::uint32_t>> masks;
    std::vector<double> moment_coeff;  // (-1)^{k-1} (k-1)!
};

const PartitionTerms& partition_terms(int n) {
    static const std::array<PartitionTerms, kMaxPartitionSize + 1> table = [] {
        std::array<PartitionTerms, kMaxPartitionSize + 1> t;
        for (int k = 1; k <= kMaxPartitionSize; ++k) {
            for (const Partition& p : partitions(k)) {
                t[k].masks.push_back(p.masks());
                const int b = static_cast<int>(p.blocks.size());
                double f = 1.0;
                for (int j = 2; j < b; ++j) f *= j;
                t[k].moment_coeff.push_back((b % 2 == 1) ? f : -f);
            }
        }
        return t;
    }();
    return table[n];
}

void check_size(const char* who, int n) {
    if (n < 1 || n > kMaxPartitionSize)
        throw InvalidArgument(std::string(who) + ": size " + std::to_string(n) + " outside [1, " +
                              std::to_string(kMaxPartitionSize) + "]");
}

std::vector<cplx> dense_from_table(const char* who, const SubsetTable& table, int n) {
    std::vector<cplx> dense(std::size_t{1} << n, cplx(0.0, 0.0));
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        const auto it = table.find(mask);
        if (it == table.end())
            throw InvalidArgument(std::string(who) + ": missing value for subset mask " + std::to_string(mask));
        dense[mask] = it->second;
    }
    return dense;
}

}  // namespace

std::vector<std::uint32_t> Partition::masks() const {
    std::vector<std::uint32_t> out;
    out.reserve(blocks.size());
    for (const auto& b : blocks) {
        std::uint32_t m = 0;
        for (int i : b) m |= (1u << i);
        out.push_back(m);
    }
    return out;
}

const std::vector<Partition>& partitions(int n) {
    check_size("partitions", n);
    static const std::array<std::vector<Partition>, kMaxPartitionSize + 1> table = [] {
        std::array<std::vector<Partition>, kMaxPartitionSize + 1> t;
        for (int k = 1; k <= kMaxPartitionSize; ++k) t[k] = enumerate_partitions(k);
        return t;
    }();
    return table[n];
}

cplx cumulant_from_moment_array(std::span<const cplx> values, int n) {
    check_size("cumulant_from_moment_array", n);
    if (values.size() < (std::size_t{1} << n))
        throw InvalidArgument("cumulant_from_moment_array: table shorter than 2^n");
    const PartitionTerms& terms = partition_terms(n);
    cplx total(0.0, 0.0);
    for (std::size_t k = 0; k < terms.masks.size(); ++k) {
        cplx prod(terms.moment_coeff[k], 0.0);
        for (std::uint32_t m : terms.masks[k]) prod *= values[m];
        total += prod;
    }
    return total;
}

cplx cumulant_from_moments(const SubsetTable& moments, int n) {
    check_size("cumulant_from_moments", n);
    const std::vector<cplx> dense = dense_from_table("cumulant_from_moments", moments, n);
    return cumulant_from_moment_array(dense, n);
}

cplx moment_from_cumulants(const SubsetTable& cumulants, int n) {
    check_size("moment_from_cumulants", n);
    const std::vector<cplx> dense = dense_from_table("moment_from_cumulants", cumulants, n);
    const PartitionTerms& terms = partition_terms(n);
    cplx total(0.0, 0.0);
    for (const auto& blocks : terms.masks) {
        cplx prod(1.0, 0.0);
        for (std::uint32_t m : blocks) prod *= dense[m];
        total += prod;
    }
    return total;
}

cplx sample_joint_cumulant(const JointSample& sample, const std::vector<int>& indices) {
    const int p = static_cast<int>(indices.size());
    if (p < 1 || p > kMaxSampleCumulantOrder)
        throw InvalidArgument("sample_joint_cumulant: order " + std::to_string(p) + " outside [1, " +
                              std::to_string(kMaxSampleCumulantOrder) + "]");
    const int n = sample.n_reps();
    if (n <= p)
        throw InvalidArgument("sample_joint_cumulant: need more than " + std::to_string(p) + " replicates, got " +
                              std::to_string(n));
    for (int c : indices)
        if (c < 0 || c >= sample.n_vars()) throw InvalidArgument("sample_joint_cumulant: column index out of range");
    std::vector<int> cols(indices);
    std::sort(cols.begin(), cols.end());  // canonical order makes the result permutation invariant
    const std::uint32_t full = (1u << p);
    std::vector<cplx> sums(full, cplx(0.0, 0.0));
    std::vector<cplx> prod(full);
    for (int r = 0; r < n; ++r) {
        prod[0] = cplx(1.0, 0.0);
        for (std::uint32_t mask = 1; mask < full; ++mask) {
            const int low = __builtin_ctz(mask);
            prod[mask] = prod[mask & (mask - 1)] * sample.values(r, cols[low]);
            sums[mask] += prod[mask];
        }
    }
    for (auto& s : sums) s /= static_cast<double>(n);
    return cumulant_from_moment_array(sums, p);
}

}  // namespace isospec
