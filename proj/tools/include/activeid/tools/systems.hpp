#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "activeid/lds.hpp"
#include "activeid/types.hpp"

namespace activeid::tools {

struct InputMatrixSpec {
    enum class Kind { Identity, Random, Explicit };
    Kind          kind = Kind::Identity;
    int           p    = 0;  // Random only; 0 means p = d
    std::uint64_t seed = 0;
    Matrix        matrix;    // Explicit only
};

// System families used in the experiments. `blocks` is only read for BlockDiag,
// `lambda` for UnitaryDiag, `A` for Explicit.
struct SystemSpec {
    enum class Kind { Jordan, UnitaryDiag, RandomStable, BlockDiag, Explicit };
    Kind                    kind = Kind::Jordan;
    int                     d    = 1;
    double                  rho  = 0.9;
    Vector                  lambda;
    std::uint64_t           seed = 0;
    std::vector<SystemSpec> blocks;
    Matrix                  A;
    InputMatrixSpec         B;

    std::string describe() const;
};

std::string     to_string(SystemSpec::Kind kind);
SystemSpec::Kind system_kind_from_string(const std::string& s);

// Dynamics only; throws ConfigError for rho >= 1 or malformed specs.
Matrix gen_dynamics(const SystemSpec& spec, std::uint64_t seed);
Matrix gen_input_matrix(const InputMatrixSpec& spec, int d, std::uint64_t seed);
// The seed is mixed with each spec's own seed so one experiment seed can drive
// several random families.
LinSys gen_system(const SystemSpec& spec, std::uint64_t seed);

}  // namespace activeid::tools
