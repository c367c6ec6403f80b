#pragma once

#include <cstdint>
#include <functional>

#include "activeid/rng.hpp"
#include "activeid/types.hpp"

namespace activeid {

// x_{t+1} = A x_t + B u_t + eta_t with A d-by-d and B d-by-p.
class LinSys {
   public:
    LinSys(Matrix A, Matrix B);

    const Matrix& A() const { return A_; }
    const Matrix& B() const { return B_; }
    int           d() const { return static_cast<int>(A_.rows()); }
    int           p() const { return static_cast<int>(B_.cols()); }

   private:
    Matrix A_;
    Matrix B_;
};

// A LinSys whose dynamics are known to satisfy rho(A) < 1.
class StableSys {
   public:
    explicit StableSys(LinSys sys);

    const LinSys& sys() const { return sys_; }
    double        rho() const { return rho_; }

   private:
    LinSys sys_;
    double rho_;
};

// Process noise eta_t ~ N(0, sigma_proc^2 I), exploration noise ~ N(0, sigma_input^2 I).
struct NoiseModel {
    double sigma_proc  = 1.0;
    double sigma_input = 0.0;

    void validate() const;
};

// States are stored column-wise: states.col(t) = x_t for t = 0..T, inputs.col(t) = u_t and
// process_noise.col(t) = eta_t for t = 0..T-1.
struct Trajectory {
    Matrix        states;
    Matrix        inputs;
    Matrix        process_noise;
    std::uint64_t seed = 0;

    long steps() const { return static_cast<long>(inputs.cols()); }
};

// Deterministic part of an input: u_t = signal(t). An empty function means zero input.
using SignalFn = std::function<Vector(long t)>;

// Process and exploration noise streams of one run. Keeping the object alive
// across calls continues both streams, so a run split into epochs draws the
// same numbers as an unsplit one.
class NoiseStreams {
   public:
    explicit NoiseStreams(std::uint64_t seed);

    RandomStream& process() { return process_; }
    RandomStream& input() { return input_; }
    std::uint64_t seed() const { return seed_; }

   private:
    std::uint64_t seed_;
    RandomStream  process_;
    RandomStream  input_;
};

double spectral_radius(const Matrix& A);

struct BetaBound {
    double rho;      // spectral radius
    double rho_bar;  // (1 + rho) / 2
    double beta;     // ||A^k|| <= beta * rho_bar^k
};

// Transient constant beta(A) from the resolvent on the circle of radius rho_bar:
// beta = max(1, rho_bar * max_theta ||(rho_bar e^{j theta} I - A)^{-1}||). The maximum is taken
// over `grid` angles and refined locally around the best grid point.
BetaBound beta_bound(const Matrix& A, int grid = 512);

// Horizon t at which beta^2 rho_bar^{2t} < tol, used to truncate infinite Gramian sums.
long truncation_horizon(const Matrix& A, double tol = 1e-10);

// sum_{s<t} A^s (A^s)^T
Matrix gram_noise(const Matrix& A, long t);
// sum_{s<t} A^s B B^T (A^s)^T
Matrix gram_input(const Matrix& A, const Matrix& B, long t);
// sigma2 * gram_noise + sigma_u2 * gram_input
Matrix gram_eta(const Matrix& A, const Matrix& B, double sigma2, double sigma_u2, long t);

Trajectory simulate(const LinSys& sys, const NoiseModel& noise, const SignalFn& signal, long T,
                    const Vector& x0, std::uint64_t seed);

// Simulation driver underlying `simulate`. The exploration noise added to the
// input is `input_factor * z` with z ~ N(0, I_p); pass sigma_u * I for isotropic
// noise or a square root of a covariance for colored noise. The signal is
// evaluated at t0, t0 + 1, ... so epochs can continue a periodic signal.
Trajectory simulate_segment(const LinSys& sys, double sigma_proc, const Matrix& input_factor,
                            const SignalFn& signal, long T, const Vector& x0,
                            NoiseStreams& streams, long t0 = 0);

}  // namespace activeid
