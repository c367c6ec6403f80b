#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "activeid/tools/config.hpp"

namespace activeid::tools {

enum class VerifyLevel { Fast, Full };

VerifyLevel verify_level_from_string(const std::string& s);

struct CheckResult {
    std::string name;
    bool        passed    = false;
    double      measured  = 0.0;
    double      threshold = 0.0;
    std::string detail;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    bool                     passed() const;
};

// Theory checks with machine-readable results. Fast divides trial counts by 10.
VerifyReport verify_suite(VerifyLevel level, std::uint64_t seed, const VerifyTolerances& tol = {});

// name,passed,measured,threshold,detail
void write_verify_csv(std::ostream& os, const VerifyReport& report);

}  // namespace activeid::tools
