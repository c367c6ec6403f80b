#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "activeid/design.hpp"
#include "activeid/estimate.hpp"
#include "activeid/lds.hpp"

namespace activeid {

struct ActiveConfig {
    long                  T0     = 100;
    int                   k0     = 20;
    double                delta  = 0.1;
    double                gamma2 = 1.0;
    PlanMode              mode   = PlanMode::Greedy;
    std::optional<double> sigma_u2;        // exploration variance after warmup; default gamma2 / (2p)
    int                   epochs = 6;      // including the warmup epoch
    int                   k_cap  = 1280;   // stop doubling the period here
    bool                  joint  = false;  // estimate B as well instead of using the true one
    bool                  keep_trajectory = false;
    GammaBarForm          gamma_bar_form  = GammaBarForm::Trajectory;
    DesignOptions         design;

    void validate() const;
};

// Cumulative sample counts at the end of each epoch: T0, 4 T0, 13 T0, ...
std::vector<long> epoch_checkpoints(const ActiveConfig& config);
// Period played in epoch i (i = 0 is the warmup).
int epoch_period(const ActiveConfig& config, int epoch);

struct EpochRecord {
    int    epoch          = 0;
    long   T              = 0;    // cumulative samples
    int    k              = 0;    // period of the input played in this epoch (0 for noise baselines)
    double eps            = 0.0;  // plug-in confidence radius (infinite if it could not be formed)
    double spectral_error = 0.0;  // ||A_hat - A_*||_2
    double power          = 0.0;  // realized (1/T_i) sum ||u_t||^2 over the epoch
    double objective      = 0.0;  // designed objective of the played input on the planning system (NaN if none)
    double objective_true = 0.0;  // same input and past covariates evaluated on A_*
    double sigma_u2       = 0.0;
    int    support_size   = 0;
    bool   fallback       = false;  // unstable estimate or empty support: noise only
    bool   ridge          = false;
};

struct RunRecord {
    std::string               policy;
    std::uint64_t             seed = 0;
    std::vector<EpochRecord>  epochs;
    Matrix                    A_hat;  // final estimate
    std::optional<Matrix>     B_hat;
    std::optional<Trajectory> trajectory;  // whole run when requested
};

// The active epoch loop on the true system `sys` (used only to simulate and to score).
RunRecord run_active(const LinSys& sys, const NoiseModel& noise, const ActiveConfig& config, std::uint64_t seed);
// Same loop, but every design is computed on the true (A_*, B_*).
RunRecord run_oracle(const LinSys& sys, const NoiseModel& noise, const ActiveConfig& config, std::uint64_t seed);
// u_t ~ N(0, input_cov) throughout, with estimates at the given cumulative checkpoints.
RunRecord run_noise_baseline(const LinSys& sys, const NoiseModel& noise, const Matrix& input_cov,
                             const std::vector<long>& checkpoints, std::uint64_t seed, bool joint = false,
                             bool keep_trajectory = false);

// Symmetric square root of a PSD matrix (negative eigenvalues clamped to zero).
Matrix psd_sqrt(const Matrix& S);

}  // namespace activeid
