#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "activeid/active.hpp"
#include "activeid/design.hpp"
#include "activeid/lds.hpp"
#include "activeid/tools/systems.hpp"

namespace activeid::tools {

enum class Policy { Active, Oracle, IsoNoise, OptNoise };

std::string to_string(Policy p);
Policy      policy_from_string(const std::string& s);

// Pass thresholds of the verification suite. Defaults are the acceptance tolerances.
struct VerifyTolerances {
    double parseval       = 1e-10;  // relative
    double gamma_oracle   = 1e-6;   // relative, frequency formula vs time average
    double optinput       = 1e-6;   // relative, scalar design vs brute force
    double colored_noise  = 0.01;   // relative, noise design vs closed form
    double noise_gap      = 0.5;    // periodic / noise objective ratio must reach this times d
    double tail_sigmas    = 3.0;    // binomial standard deviations of slack in the tail-bound check
    double rate           = 0.2;    // relative deviation from 1/sqrt(T) scaling
    double jordan_noise     = 0.5;    // active median error <= this times the isotropic-noise median
    double jordan_oracle    = 2.0;    // active median error <= this times the oracle median
    double power_sigmas   = 3.0;
    double gradient       = 1e-4;   // relative, analytic vs central difference
};

struct OutputPaths {
    std::string raw_csv    = "raw.csv";
    std::string report_csv = "report.csv";
    std::string svg        = "errors.svg";
    std::string meta_json  = "meta.json";
    bool        plot       = true;
};

struct ExperimentConfig {
    std::uint64_t         seed    = 0;
    int                   trials  = 50;
    int                   threads = 1;
    std::vector<Policy>   policies{Policy::Active, Policy::Oracle, Policy::IsoNoise, Policy::OptNoise};
    SystemSpec            system;
    double                sigma = 1.0;  // process noise standard deviation
    std::optional<double> gamma2;       // defaults to p
    ActiveConfig          algorithm;    // gamma2 is filled in by resolve()
    NoiseDesignOptions    noise_design;

    long        simulate_T     = 1000;
    std::string simulate_input = "noise";  // noise | design
    int         design_k       = 0;        // 0 means k0

    VerifyTolerances verify;
    OutputPaths      output;

    std::string canonical;  // normalized TOML text, hashed into reports

    void        validate() const;
    std::string hash() const;  // 16 hex digits
    NoiseModel  noise() const { return NoiseModel{sigma, 0.0}; }
    // ActiveConfig with the budget resolved for input dimension p.
    ActiveConfig active_config(int p) const;
};

// Throws ConfigError on syntax errors, unknown keys and invalid values.
ExperimentConfig parse_config(std::string_view toml_text, std::string_view source = "config");
ExperimentConfig load_config(const std::string& path);

}  // namespace activeid::tools
