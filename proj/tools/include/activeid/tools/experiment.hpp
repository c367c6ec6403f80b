#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "activeid/active.hpp"
#include "activeid/tools/config.hpp"

namespace activeid::tools {

struct RawRow {
    int         trial = 0;
    std::string policy;
    EpochRecord record;
};

struct PercentileRow {
    std::string policy;
    int         epoch  = 0;
    long        T      = 0;
    int         n      = 0;  // successful trials
    double      p10    = 0.0;
    double      median = 0.0;
    double      p90    = 0.0;
};

struct Report {
    std::vector<PercentileRow> rows;  // sorted by (policy, epoch)
    std::string                config_hash;
    std::string                version;
    int                        failed_trials = 0;
    std::vector<std::string>   failures;       // "policy trial: message"
    double                     wall_seconds = 0.0;
};

struct ExperimentResult {
    std::vector<RawRow> raw;  // sorted by (policy, trial, epoch)
    Report              report;
};

// Shared by all trials of an experiment.
struct TrialContext {
    const LinSys&           sys;
    const ExperimentConfig& config;
    Matrix                  opt_noise_cov;  // empty unless the opt_noise policy is requested
};

// One trial of one policy. The default runner dispatches to run_active, run_oracle
// and run_noise_baseline; tests substitute their own to exercise failure handling.
using TrialRunner = std::function<RunRecord(Policy, const TrialContext&, std::uint64_t trial_seed)>;

RunRecord run_trial(Policy policy, const TrialContext& ctx, std::uint64_t seed);

// Exploration covariance of the opt_noise policy: the best noise design for the
// true system over the run's horizon, truncated where the Gramians stop changing.
Matrix opt_noise_cov(const LinSys& sys, const ExperimentConfig& config);

// Every policy sees the same trial seeds, hence the same process noise.
ExperimentResult run_experiment(const ExperimentConfig& config, const TrialRunner& runner = run_trial);

// Linear interpolation between order statistics (q in [0, 1]).
double percentile(std::vector<double> values, double q);
Report aggregate(const std::vector<RawRow>& raw);

void   write_raw_csv(std::ostream& os, const std::vector<RawRow>& raw);
void   write_report_csv(std::ostream& os, const Report& report);
Report read_report_csv(std::istream& is);
// Wall time and failures; not part of the deterministic outputs.
std::string report_meta_json(const Report& report, const ExperimentConfig& config);

std::string version_string();

}  // namespace activeid::tools
