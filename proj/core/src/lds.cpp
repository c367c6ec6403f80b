#include "activeid/lds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "activeid/errors.hpp"

namespace activeid {

LinSys::LinSys(Matrix A, Matrix B) : A_(std::move(A)), B_(std::move(B)) {
    if (A_.rows() < 1 || A_.rows() != A_.cols()) {
        throw DimensionError("LinSys: A must be square with d >= 1, got " + std::to_string(A_.rows()) + "x" +
                             std::to_string(A_.cols()));
    }
    if (B_.rows() != A_.rows() || B_.cols() < 1) {
        throw DimensionError("LinSys: B must be d x p with p >= 1, got " + std::to_string(B_.rows()) + "x" +
                             std::to_string(B_.cols()));
    }
}

StableSys::StableSys(LinSys sys) : sys_(std::move(sys)), rho_(spectral_radius(sys_.A())) {
    if (!(rho_ < 1.0)) {
        throw StabilityError("StableSys: spectral radius " + std::to_string(rho_) + " >= 1");
    }
}

void NoiseModel::validate() const {
    if (!(sigma_proc >= 0.0) || !(sigma_input >= 0.0)) {
        throw ConfigError("NoiseModel: standard deviations must be nonnegative");
    }
}

NoiseStreams::NoiseStreams(std::uint64_t seed)
    : seed_(seed), process_(seed, streams::kProcessNoise), input_(seed, streams::kInputNoise) {}

double spectral_radius(const Matrix& A) {
    if (A.rows() != A.cols()) {
        throw DimensionError("spectral_radius: matrix is not square");
    }
    if (A.size() == 0) return 0.0;
    // Triangular matrices (Jordan blocks in particular) read off the diagonal
    // exactly; a general eigensolver loses accuracy on defective eigenvalues.
    if (A.isUpperTriangular(0.0) || A.isLowerTriangular(0.0)) {
        return A.diagonal().cwiseAbs().maxCoeff();
    }
    Eigen::EigenSolver<Matrix> es(A, false);
    if (es.info() != Eigen::Success) {
        throw Error("spectral_radius: eigensolver failed");
    }
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

double resolvent_norm(const Matrix& A, double radius, double theta) {
    CMatrix M = -A.cast<Complex>();
    M.diagonal().array() += std::polar(radius, theta);
    // ||M^{-1}|| = 1 / sigma_min(M)
    Eigen::JacobiSVD<CMatrix> svd(M);
    return 1.0 / svd.singularValues()(svd.singularValues().size() - 1);
}

}  // namespace

BetaBound beta_bound(const Matrix& A, int grid) {
    const double rho = spectral_radius(A);
    if (!(rho < 1.0)) {
        throw StabilityError("beta_bound: spectral radius " + std::to_string(rho) + " >= 1");
    }
    const double rho_bar = 0.5 + 0.5 * rho;
    grid                 = std::max(grid, 8);

    double best_theta = 0.0;
    double best       = 0.0;
    for (int i = 0; i < grid; ++i) {
        const double theta = 2.0 * kPi * i / grid;
        const double v     = resolvent_norm(A, rho_bar, theta);
        if (v > best) {
            best       = v;
            best_theta = theta;
        }
    }
    // Golden-section refinement on the bracket around the best grid angle.
    const double h   = 2.0 * kPi / grid;
    double       lo  = best_theta - h;
    double       hi  = best_theta + h;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double       x1  = hi - phi * (hi - lo);
    double       x2  = lo + phi * (hi - lo);
    double       f1  = resolvent_norm(A, rho_bar, x1);
    double       f2  = resolvent_norm(A, rho_bar, x2);
    for (int it = 0; it < 60; ++it) {
        if (f1 > f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = resolvent_norm(A, rho_bar, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = resolvent_norm(A, rho_bar, x2);
        }
    }
    best = std::max({best, f1, f2});

    BetaBound out{rho, rho_bar, std::max(1.0, rho_bar * best)};

    // Post-check ||A^k|| <= beta rho_bar^k for k <= 100.
    Matrix P = Matrix::Identity(A.rows(), A.cols());
    double scale = 1.0;
    for (int k = 0; k <= 100; ++k) {
        const double n = P.operatorNorm();
        if (n > out.beta * scale * (1.0 + 1e-9)) {
            out.beta = n / scale;
        }
        P = P * A;
        scale *= rho_bar;
    }
    return out;
}

long truncation_horizon(const Matrix& A, double tol) {
    const BetaBound b = beta_bound(A);
    if (b.rho_bar <= 0.0) return 1;
    // beta^2 rho_bar^{2t} < tol  <=>  t > log(tol / beta^2) / (2 log rho_bar)
    const double t = std::log(tol / (b.beta * b.beta)) / (2.0 * std::log(b.rho_bar));
    return std::max<long>(1, static_cast<long>(std::ceil(t)) + 1);
}

Matrix gram_noise(const Matrix& A, long t) {
    if (A.rows() != A.cols()) throw DimensionError("gram_noise: A not square");
    if (t < 1) throw DimensionError("gram_noise: horizon must be >= 1");
    Matrix G = Matrix::Zero(A.rows(), A.cols());
    Matrix P = Matrix::Identity(A.rows(), A.cols());
    for (long s = 0; s < t; ++s) {
        G.noalias() += P * P.transpose();
        P = A * P;
    }
    return 0.5 * (G + G.transpose());
}

Matrix gram_input(const Matrix& A, const Matrix& B, long t) {
    if (A.rows() != A.cols() || B.rows() != A.rows()) throw DimensionError("gram_input: dimension mismatch");
    if (t < 1) throw DimensionError("gram_input: horizon must be >= 1");
    Matrix G  = Matrix::Zero(A.rows(), A.rows());
    Matrix PB = B;
    for (long s = 0; s < t; ++s) {
        G.noalias() += PB * PB.transpose();
        PB = A * PB;
    }
    return 0.5 * (G + G.transpose());
}

Matrix gram_eta(const Matrix& A, const Matrix& B, double sigma2, double sigma_u2, long t) {
    Matrix G = Matrix::Zero(A.rows(), A.rows());
    if (sigma2 != 0.0) G += sigma2 * gram_noise(A, t);
    if (sigma_u2 != 0.0) G += sigma_u2 * gram_input(A, B, t);
    if (sigma2 == 0.0 && sigma_u2 == 0.0) {
        // still validate dimensions
        (void)gram_input(A, B, t);
    }
    return G;
}

Trajectory simulate_segment(const LinSys& sys, double sigma_proc, const Matrix& input_factor,
                            const SignalFn& signal, long T, const Vector& x0, NoiseStreams& streams, long t0) {
    const int d = sys.d();
    const int p = sys.p();
    if (T < 1) throw DimensionError("simulate: T must be >= 1");
    if (x0.size() != d) throw DimensionError("simulate: x0 has wrong dimension");
    if (input_factor.rows() != p || input_factor.cols() != p) {
        throw DimensionError("simulate: input noise factor must be p x p");
    }

    Trajectory traj;
    traj.seed = streams.seed();
    traj.states.resize(d, T + 1);
    traj.inputs.resize(p, T);
    traj.process_noise.resize(d, T);
    traj.states.col(0) = x0;

    Vector eta(d);
    Vector z(p);
    for (long t = 0; t < T; ++t) {
        // Both streams advance by a fixed count per step whatever the noise levels,
        // so runs with different inputs stay aligned on the process-noise draws.
        for (int i = 0; i < d; ++i) eta(i) = streams.process().gaussian();
        for (int i = 0; i < p; ++i) z(i) = streams.input().gaussian();
        eta *= sigma_proc;

        Vector u = input_factor * z;
        if (signal) {
            Vector s = signal(t0 + t);
            if (s.size() != p) throw DimensionError("simulate: signal dimension does not match p");
            u += s;
        }
        traj.inputs.col(t)        = u;
        traj.process_noise.col(t) = eta;
        traj.states.col(t + 1)    = sys.A() * traj.states.col(t) + sys.B() * u + eta;
    }
    return traj;
}

Trajectory simulate(const LinSys& sys, const NoiseModel& noise, const SignalFn& signal, long T, const Vector& x0,
                    std::uint64_t seed) {
    noise.validate();
    NoiseStreams streams(seed);
    const Matrix factor = noise.sigma_input * Matrix::Identity(sys.p(), sys.p());
    return simulate_segment(sys, noise.sigma_proc, factor, signal, T, x0, streams, 0);
}

}  // namespace activeid
