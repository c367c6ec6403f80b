#pragma once

#include <optional>

#include "activeid/lds.hpp"
#include "activeid/types.hpp"

namespace activeid {

struct Estimate {
    Matrix                A_hat;
    std::optional<Matrix> B_hat;          // joint mode only
    double                residual_norm = 0.0;
    Matrix                cov;            // sum_t x_t x_t^T, or the stacked (x, u) Gram in joint mode
    bool                  ridge = false;  // regularized because the Gram was (near) singular
};

// What to do when the regressors do not span the parameter space.
enum class RankPolicy { Throw, Ridge };

// Sufficient statistics of x_{t+1} ~ A x_t (+ B u_t). Segments can be added
// one epoch at a time; solving uses all data seen so far.
class LsAccumulator {
   public:
    // joint = false: regress x_{t+1} - B u_t on x_t with B known.
    LsAccumulator(int d, int p, bool joint);

    void add(const Trajectory& segment, const Matrix& B_known);
    void add(const Trajectory& segment);  // joint mode

    long samples() const { return n_; }
    Estimate solve(RankPolicy policy = RankPolicy::Throw) const;

   private:
    void push(const Matrix& states, const Matrix& inputs, const Matrix* B_known);

    int    d_, p_;
    bool   joint_;
    Matrix zz_;  // regressor Gram
    Matrix yz_;  // target / regressor cross moments
    double yy_ = 0.0;
    long   n_  = 0;
};

// A_hat = argmin_A sum_t ||x_{t+1} - A x_t - B u_t||^2 with B known.
Estimate least_squares(const Trajectory& traj, const Matrix& B, RankPolicy policy = RankPolicy::Throw);
// Regress x_{t+1} on [x_t; u_t] and return both blocks.
Estimate least_squares_joint(const Trajectory& traj, RankPolicy policy = RankPolicy::Throw);

enum class GammaBarForm {
    Trajectory,  // 4 (1/T sum x^u x^u^T + tr(sigma2 Gamma_T + sigma_u2 Gamma_T^B)(1 + log 2/delta) I)
    Uniform,     // 16 beta^2 gamma2 / (1 - rho)^2 (1 + T) I + 4 tr(sigma2 Gamma_T + gamma2/p Gamma_T^B)(1 + log 2/delta) I
};

// Plug-in ingredients of the confidence radius.
struct RadiusInputs {
    Matrix A;  // plug-in dynamics, usually the current estimate
    Matrix B;
    int    k        = 2;
    double sigma2   = 1.0;
    double sigma_u2 = 0.0;
    double gamma2   = 1.0;
    Matrix gamma_tilde;                    // steady-state covariates of the deterministic input; empty = none
    std::optional<Matrix> deterministic_cov;  // sum_{t<=T} x^u_t x^u_t^T; defaults to T * gamma_tilde
    long   T     = 1;
    double delta = 0.1;
    GammaBarForm form = GammaBarForm::Trajectory;
};

Matrix gamma_bar(const RadiusInputs& in);

// eps = sigma ||cov^{-1/2}|| sqrt(16 log(5^d / delta) + 8 log det(Gamma_bar (Gamma^eta_k + gamma_tilde)^{-1} + I))
// Throws StabilityError for an unstable plug-in system.
double epsilon_bound(const Estimate& estimate, const RadiusInputs& in);

}  // namespace activeid
