#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "activeid/freq.hpp"
#include "activeid/types.hpp"

namespace activeid {

// Everything the input designer needs:
//   maximize lambda_min(horizon_weight * gamma_tilde(A_hat, B, U) + past_cov)
//   over period-k inputs of average power <= gamma2 supported on `support`.
struct DesignProblem {
    Matrix           A_hat;
    Matrix           B;
    double           gamma2         = 1.0;
    int              k              = 2;
    std::vector<int> support;  // frequency indices in 1..k
    Matrix           past_cov;
    double           horizon_weight = 1.0;
    bool             zero_mean      = true;  // forbid the DC bin l = k

    int  d() const { return static_cast<int>(A_hat.rows()); }
    int  p() const { return static_cast<int>(B.cols()); }
    void validate() const;
};

// 1..k
std::vector<int> all_frequencies(int k);

struct DesignOptions {
    int    max_iters    = 400;
    int    restarts     = 1;
    double tie_tol      = 1e-8;   // eigenvalues this close to lambda_min share the subgradient
    double stall_tol    = 1e-9;   // stop when the incumbent gains less than this ...
    int    stall_window = 50;     // ... over this many iterations
    int    polish_iters = 300;    // rank-one refinement after rounding
};

struct DesignResult {
    PeriodicInput       input;
    double              objective       = 0.0;  // lambda_min achieved by `input`
    double              lifted_objective = 0.0; // value of the Gram-block relaxation
    double              truncation_loss = 0.0;  // max(0, lifted_objective - objective)
    double              gap_bound       = 0.0;  // certified suboptimality of the lifted solution
    int                 iterations      = 0;
    std::vector<double> trace;                  // incumbent lifted objective per iteration
    bool                degenerate      = false;// objective did not rise above lambda_min(past_cov)
};

// Throws FeasibilityError naming the first violated constraint.
void check_feasible(const DesignProblem& problem, const PeriodicInput& input, double tol = 1e-9);

double objective(const DesignProblem& problem, const PeriodicInput& input);

// Local E-optimal design by Frank-Wolfe ascent over per-frequency Gram blocks.
DesignResult opt_input(const DesignProblem& problem, std::uint64_t seed, const DesignOptions& options = {});

// {w on the unit sphere : w^T Q w <= threshold}
struct DirectionEllipsoid {
    Matrix Q;
    double threshold = 0.0;

    bool contains(const Vector& w, double tol = 1e-12) const;
};

// Shared inputs of the frequency-gating step.
struct GatingContext {
    Matrix A_hat;
    Matrix B;
    Matrix traj_cov;  // sum_t x_t x_t^T
    int    k      = 2;
    double gamma2 = 1.0;
    double eps    = 0.0;
    long   T      = 0;  // samples collected so far
    long   T0     = 0;  // warmup length
};

// (4 ||(e^{j theta_l} I - A)^{-1}||)^{-1} <= eps ?
bool frequency_certified(const Matrix& A, int ell, int k, double eps);

// Directions that may realize the minimum eigenvalue. std::nullopt means no
// frequency passes the certification test for this eps.
std::optional<DirectionEllipsoid> direction_set(const GatingContext& ctx);

// max_{w in set} w^T K w for symmetric K.
double max_quadratic_over(const DirectionEllipsoid& set, const Matrix& K);

struct EligibleSet {
    std::vector<int> support;
    bool             all_frequencies = false;  // the global check passed
};

// Frequencies the design may use given the estimation radius eps.
EligibleSet eligible_frequencies(const GatingContext& ctx, std::uint64_t seed, const DesignOptions& options = {});

enum class PlanMode { FiniteTime, Asymptotic, Greedy };

std::string to_string(PlanMode mode);
PlanMode    plan_mode_from_string(const std::string& s);

struct UpdateRequest {
    GatingContext           gate;
    PlanMode                mode   = PlanMode::Greedy;
    double                  sigma2 = 1.0;              // process noise variance, for the asymptotic surrogate
    std::optional<double>   sigma_u2;                  // defaults to gamma2 / (2p)
    DesignOptions           options;
};

struct UpdateResult {
    PeriodicInput           input;
    double                  sigma_u2          = 0.0;
    std::vector<int>        support;
    bool                    all_frequencies   = false;
    bool                    fallback_unstable = false;  // A_hat unstable: no sinusoid played
    std::optional<DesignProblem> problem;
    std::optional<DesignResult>  design;
};

UpdateResult update_inputs(const UpdateRequest& request, std::uint64_t seed);

struct NoiseDesign {
    Matrix cov;          // p x p, trace <= gamma2
    double objective = 0.0;
    double gap       = 0.0;
    int    iterations = 0;
};

struct NoiseDesignOptions {
    int    max_iters = 20000;
    double gap_tol   = 1e-6;  // relative to gamma2
};

// Best exploration-noise covariance:
//   maximize lambda_min(sigma2 Gamma_K(A) + sum_{s<K} A^s B Sigma B^T (A^s)^T), Sigma >= 0, tr Sigma <= gamma2.
NoiseDesign optimal_noise_cov(const Matrix& A, const Matrix& B, double gamma2, double sigma2, long K,
                              const NoiseDesignOptions& options = {});
// Objective of optimal_noise_cov at a given covariance.
double noise_objective(const Matrix& A, const Matrix& B, const Matrix& cov, double sigma2, long K);

// H_k(A, B, U, I) = sum_{l in I} G_l U_l U_l^H G_l^H (real part; no 1/k^2 factor).
Matrix hk_matrix(const Matrix& A, const Matrix& B, const PeriodicInput& input, const std::vector<int>& support);

// Directional derivative of w^T H_k(A, B, U, I) w along Delta.
double hk_directional_derivative(const Matrix& A, const Matrix& B, const PeriodicInput& input,
                                 const std::vector<int>& support, const Vector& w, const Matrix& delta);

// max_u lambda_min(sigma2 Gamma_K + gamma2 Gamma_k^u) over period-k inputs with a DC bin allowed.
// k = 0 picks the smallest power of two >= max(K, 64), capped at 1024.
double lower_bound_rate(const Matrix& A, const Matrix& B, double sigma2, double gamma2, long K, int k = 0,
                        std::uint64_t seed = 0, const DesignOptions& options = {});

// Estimation radius under which every frequency of the grid is certified
// (reporting only; never used as a gate).
double epsilon_s(const GatingContext& ctx, long epoch_length, std::uint64_t seed,
                 const DesignOptions& options = {});

}  // namespace activeid
