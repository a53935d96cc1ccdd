#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace isospec {

struct CheckResult {
    std::string name;
    bool passed = false;
    double residual = 0.0;
    double tolerance = 0.0;
    std::string note;
};

enum class VerifyLevel { quick, full };

using ThreeJFunction = std::function<double(int, int, int, int, int, int)>;

struct VerifyOptions {
    VerifyLevel level = VerifyLevel::quick;
    // 3j source used by the symbol-level checks; defaults to wigner_3j.
    ThreeJFunction threej;
    int threads = 1;
    unsigned long long seed = 20240601;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    nlohmann::json findings = nlohmann::json::array();
    bool all_passed() const;
};

VerifyReport run_verification(const VerifyOptions& opts);

// 3j with the sign flipped whenever m1 == 1; used to exercise the harness.
double corrupted_wigner_3j(int l1, int l2, int l3, int m1, int m2, int m3);

}  // namespace isospec
