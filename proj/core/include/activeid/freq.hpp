#pragma once

#include <optional>
#include <vector>

#include "activeid/lds.hpp"
#include "activeid/types.hpp"

namespace activeid {

// theta_l = 2 pi l / k. Frequency indices run over l = 1..k; l = k is the DC bin.
inline double grid_angle(int ell, int k) { return 2.0 * kPi * ell / k; }

// A period-k input stored by its DFT coefficients
//   U_l = sum_{t=1}^{k} u_t e^{-j theta_l t},   u_t = (1/k) sum_{l=1}^{k} U_l e^{j theta_l t}.
// Column l-1 of coeffs() holds U_l. gamma2() is the nominal power budget, used as
// the normalizer of Gamma_k^u; power() is the realized average power.
class PeriodicInput {
   public:
    PeriodicInput() = default;
    // All-zero input of period k and dimension p.
    PeriodicInput(int k, int p, double gamma2);
    // Coefficients as a p x k complex matrix.
    PeriodicInput(CMatrix coeffs, double gamma2);

    int            k() const { return static_cast<int>(coeffs_.cols()); }
    int            p() const { return static_cast<int>(coeffs_.rows()); }
    double         gamma2() const { return gamma2_; }
    const CMatrix& coeffs() const { return coeffs_; }
    auto           coeff(int ell) const { return coeffs_.col(ell - 1); }
    void           set_coeff(int ell, const CVector& value);
    void           set_gamma2(double g) { gamma2_ = g; }

    // (1/k) sum_t ||u_t||^2 = (1/k^2) sum_l ||U_l||^2
    double power() const;
    // max_l ||U_l - conj(U_{k-l})||, zero for a real signal.
    double conjugate_asymmetry() const;
    bool   has_zero_mean(double tol = 1e-12) const;

    // Real p x k signal; column t-1 holds u_t. Throws FeasibilityError if the
    // inverse transform leaves an imaginary part above 1e-10.
    Matrix to_time_domain() const;
    static PeriodicInput from_time_domain(const Matrix& u, double gamma2);

    // u_t for any integer t (u_0 = u_k).
    Vector at(long t) const;
    SignalFn signal() const;

    // Time shift by s steps: U_l -> U_l e^{j theta_l s}.
    PeriodicInput shifted(long s) const;

    // Real sinusoid on frequency l along `direction` with average power `power`.
    static PeriodicInput single_frequency(int k, int ell, const Vector& direction, double power, double gamma2);

   private:
    CMatrix coeffs_;
    double  gamma2_ = 0.0;
};

// G(e^{j theta}) = (e^{j theta} I - A)^{-1} B, via an LU solve.
CMatrix transfer(const Matrix& A, const Matrix& B, double theta);
// (e^{j theta} I - A)^{-1}
CMatrix resolvent(const Matrix& A, double theta);

// Unnormalized steady-state covariates (1/k^2) sum_l G_l U_l U_l^H G_l^H, i.e. the
// per-period average of x_t x_t^T in steady state (gamma^2 Gamma_k^u).
Matrix gamma_tilde(const Matrix& A, const Matrix& B, const PeriodicInput& input);
// Gamma_k^u = gamma_tilde / input.gamma2(). Throws NormalizationError if gamma2 <= 0.
Matrix gamma_k_u(const Matrix& A, const Matrix& B, const PeriodicInput& input);

// Time-domain counterpart of gamma_k_u: run the noiseless system from x0 = 0 for
// warmup_periods * k steps, then average x_t x_t^T / gamma2 over avg_periods * k steps.
Matrix gamma_k_u_time_oracle(const Matrix& A, const Matrix& B, const PeriodicInput& input, long warmup_periods,
                             long avg_periods);

struct SteadyStateSplit {
    Matrix ss;               // d x k, column t holds x_t^ss for t = 0..k-1
    Vector transient_coeff;  // x0 - x0^ss

    // x_t^u = x_t^ss + A^t (x0 - x0^ss)
    Vector state_at(const Matrix& A, long t) const;
};

SteadyStateSplit steady_state_split(const Matrix& A, const Matrix& B, const PeriodicInput& input, const Vector& x0);

struct SettleResult {
    long   steps;         // end of the first settled k-window (a multiple of k, >= k)
    long   window_start;  // steps - k
    double analytic;      // analytic transient bound on the window start
};

// Empirical settling time of the noiseless response to `input` from x0: the first
// window t = T'+1..T'+k (T' a multiple of k) whose centered energy along w is within
// zeta * k of k w^T gamma_tilde w. Without `w`, every eigenvector of gamma_tilde is probed.
SettleResult settle_time(const Matrix& A, const Matrix& B, const PeriodicInput& input, const Vector& x0,
                         double zeta, const std::optional<Vector>& w = std::nullopt);

// Analytic settling bound on the window start for direction w (unit vector).
double settle_time_bound(const Matrix& A, const Matrix& B, const PeriodicInput& input, const Vector& x0,
                         double zeta, const Vector& w);

}  // namespace activeid
