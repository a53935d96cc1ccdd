#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "isospec/coeffs.hpp"

namespace isospec {

// Set partition of {0..n-1}; blocks are ascending and ordered by first element.
struct Partition {
    std::vector<std::vector<int>> blocks;
    // Bitmask of each block (bit i <-> index i).
    std::vector<std::uint32_t> masks() const;
};

inline constexpr int kMaxPartitionSize = 8;
inline constexpr int kMaxSampleCumulantOrder = 6;

// All Bell(n) partitions of {0..n-1}, ordered by block count and then
// lexicographically by block list.
const std::vector<Partition>& partitions(int n);

// Table of per-subset values keyed by bitmask over {0..n-1}.
using SubsetTable = std::map<std::uint32_t, cplx>;

// Joint cumulant of n variables from the joint moments of all nonempty subsets.
cplx cumulant_from_moments(const SubsetTable& moments, int n);

// Joint moment of n variables from the joint cumulants of all nonempty subsets.
cplx moment_from_cumulants(const SubsetTable& cumulants, int n);

// Dense variant: values[mask] for mask = 1 .. 2^n - 1 (values[0] unused).
cplx cumulant_from_moment_array(std::span<const cplx> values, int n);

struct JointSample {
    Eigen::MatrixXcd values;  // N replicates x p variables
    int n_vars() const { return static_cast<int>(values.cols()); }
    int n_reps() const { return static_cast<int>(values.rows()); }
};

// Plug-in joint cumulant of the listed columns (repetitions allowed); no
// conjugation is applied.
cplx sample_joint_cumulant(const JointSample& sample, const std::vector<int>& indices);

}  // namespace isospec
