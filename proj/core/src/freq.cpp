#include "activeid/freq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "activeid/errors.hpp"

namespace activeid {
namespace {

void require_stable(const Matrix& A, const char* where) {
    const double rho = spectral_radius(A);
    if (!(rho < 1.0)) {
        throw StabilityError(std::string(where) + ": spectral radius " + std::to_string(rho) + " >= 1");
    }
}

// twiddle[m] = e^{j 2 pi m / k}
std::vector<Complex> twiddles(int k) {
    std::vector<Complex> w(static_cast<std::size_t>(k));
    for (int m = 0; m < k; ++m) w[static_cast<std::size_t>(m)] = std::polar(1.0, grid_angle(m, k));
    return w;
}

Matrix hermitian_to_real(const CMatrix& H, const char* where) {
    const double scale = std::max(1.0, H.real().cwiseAbs().maxCoeff());
    if (H.imag().cwiseAbs().maxCoeff() > 1e-9 * scale) {
        throw FeasibilityError(std::string(where) +
                               ": imaginary residue above 1e-9, input is not conjugate symmetric");
    }
    Matrix R = H.real();
    return 0.5 * (R + R.transpose());
}

}  // namespace

PeriodicInput::PeriodicInput(int k, int p, double gamma2) : coeffs_(CMatrix::Zero(p, k)), gamma2_(gamma2) {
    if (k < 1 || p < 1) throw DimensionError("PeriodicInput: k and p must be positive");
}

PeriodicInput::PeriodicInput(CMatrix coeffs, double gamma2) : coeffs_(std::move(coeffs)), gamma2_(gamma2) {
    if (coeffs_.cols() < 1 || coeffs_.rows() < 1) throw DimensionError("PeriodicInput: empty coefficient matrix");
}

void PeriodicInput::set_coeff(int ell, const CVector& value) {
    if (ell < 1 || ell > k()) throw DimensionError("PeriodicInput: frequency index out of range");
    if (value.size() != p()) throw DimensionError("PeriodicInput: coefficient has wrong dimension");
    coeffs_.col(ell - 1) = value;
}

double PeriodicInput::power() const {
    const double kk = static_cast<double>(k());
    return coeffs_.squaredNorm() / (kk * kk);
}

double PeriodicInput::conjugate_asymmetry() const {
    const int k_ = k();
    double    worst = 0.0;
    for (int ell = 1; ell <= k_; ++ell) {
        const int mirror = (ell == k_) ? k_ : k_ - ell;
        worst = std::max(worst, (coeff(ell) - coeff(mirror).conjugate()).norm());
    }
    return worst;
}

bool PeriodicInput::has_zero_mean(double tol) const {
    return coeff(k()).norm() <= tol * std::max(1.0, static_cast<double>(k()));
}

Matrix PeriodicInput::to_time_domain() const {
    const int  k_ = k();
    const auto w  = twiddles(k_);
    CMatrix    u  = CMatrix::Zero(p(), k_);
    for (int t = 1; t <= k_; ++t) {
        for (int ell = 1; ell <= k_; ++ell) {
            const auto m = static_cast<std::size_t>((static_cast<long>(ell) * t) % k_);
            u.col(t - 1) += coeffs_.col(ell - 1) * w[m];
        }
    }
    u /= static_cast<double>(k_);
    const double scale = std::max(1.0, u.real().cwiseAbs().maxCoeff());
    if (u.imag().cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw FeasibilityError("PeriodicInput: coefficients are not conjugate symmetric (imaginary signal)");
    }
    return u.real();
}

PeriodicInput PeriodicInput::from_time_domain(const Matrix& u, double gamma2) {
    const int k_ = static_cast<int>(u.cols());
    if (k_ < 1 || u.rows() < 1) throw DimensionError("from_time_domain: empty signal");
    const auto w = twiddles(k_);
    CMatrix    U = CMatrix::Zero(u.rows(), k_);
    for (int ell = 1; ell <= k_; ++ell) {
        for (int t = 1; t <= k_; ++t) {
            const auto m = static_cast<std::size_t>((static_cast<long>(ell) * t) % k_);
            U.col(ell - 1) += u.col(t - 1).cast<Complex>() * std::conj(w[m]);
        }
    }
    return PeriodicInput(std::move(U), gamma2);
}

Vector PeriodicInput::at(long t) const {
    const Matrix u  = to_time_domain();
    const long   k_ = k();
    const long   c  = (((t - 1) % k_) + k_) % k_;
    return u.col(c);
}

SignalFn PeriodicInput::signal() const {
    Matrix u = to_time_domain();
    return [u = std::move(u)](long t) -> Vector {
        const long k_ = u.cols();
        const long c  = (((t - 1) % k_) + k_) % k_;
        return u.col(c);
    };
}

PeriodicInput PeriodicInput::shifted(long s) const {
    PeriodicInput out = *this;
    const int     k_  = k();
    for (int ell = 1; ell <= k_; ++ell) {
        const long m = ((static_cast<long>(ell) * s) % k_ + k_) % k_;
        out.coeffs_.col(ell - 1) *= std::polar(1.0, grid_angle(static_cast<int>(m), k_));
    }
    return out;
}

PeriodicInput PeriodicInput::single_frequency(int k, int ell, const Vector& direction, double power,
                                              double gamma2) {
    if (ell < 1 || ell > k) throw DimensionError("single_frequency: frequency index out of range");
    if (power < 0.0) throw DimensionError("single_frequency: negative power");
    const double norm = direction.norm();
    if (norm == 0.0) throw DimensionError("single_frequency: zero direction");
    const Vector  dir = direction / norm;
    PeriodicInput out(k, static_cast<int>(dir.size()), gamma2);
    const bool    self_conjugate = (ell == k) || (2 * ell == k);
    if (self_conjugate) {
        // u_t = a cos(theta t) dir, a^2 = power; U_l = k a dir
        out.set_coeff(ell, (k * std::sqrt(power) * dir).cast<Complex>());
    } else {
        // u_t = a cos(theta t) dir, a^2 / 2 = power; U_l = U_{k-l} = k a / 2 dir
        const CVector c = (0.5 * k * std::sqrt(2.0 * power) * dir).cast<Complex>();
        out.set_coeff(ell, c);
        out.set_coeff(k - ell, c);
    }
    return out;
}

CMatrix resolvent(const Matrix& A, double theta) {
    if (A.rows() != A.cols()) throw DimensionError("resolvent: A not square");
    CMatrix M = -A.cast<Complex>();
    M.diagonal().array() += std::polar(1.0, theta);
    Eigen::FullPivLU<CMatrix> lu(M);
    if (!lu.isInvertible()) throw SingularError("resolvent: e^{j theta} is an eigenvalue of A");
    return lu.inverse();
}

CMatrix transfer(const Matrix& A, const Matrix& B, double theta) {
    if (A.rows() != A.cols() || B.rows() != A.rows()) throw DimensionError("transfer: dimension mismatch");
    CMatrix M = -A.cast<Complex>();
    M.diagonal().array() += std::polar(1.0, theta);
    Eigen::FullPivLU<CMatrix> lu(M);
    if (!lu.isInvertible()) throw SingularError("transfer: e^{j theta} is an eigenvalue of A");
    return lu.solve(B.cast<Complex>());
}

Matrix gamma_tilde(const Matrix& A, const Matrix& B, const PeriodicInput& input) {
    if (A.rows() != A.cols() || B.rows() != A.rows()) throw DimensionError("gamma_tilde: dimension mismatch");
    if (B.cols() != input.p()) throw DimensionError("gamma_tilde: input dimension does not match B");
    require_stable(A, "gamma_tilde");
    const int d  = static_cast<int>(A.rows());
    const int k  = input.k();
    CMatrix   H  = CMatrix::Zero(d, d);
    const CMatrix Bc = B.cast<Complex>();
    for (int ell = 1; ell <= k; ++ell) {
        const auto U = input.coeff(ell);
        if (U.squaredNorm() == 0.0) continue;
        CMatrix M = -A.cast<Complex>();
        M.diagonal().array() += std::polar(1.0, grid_angle(ell, k));
        const CVector X = M.partialPivLu().solve(Bc * U);
        H.noalias() += X * X.adjoint();
    }
    H /= static_cast<double>(k) * static_cast<double>(k);
    return hermitian_to_real(H, "gamma_tilde");
}

Matrix gamma_k_u(const Matrix& A, const Matrix& B, const PeriodicInput& input) {
    if (!(input.gamma2() > 0.0)) {
        throw NormalizationError("gamma_k_u: input power normalizer gamma2 must be positive; use gamma_tilde");
    }
    return gamma_tilde(A, B, input) / input.gamma2();
}

Matrix gamma_k_u_time_oracle(const Matrix& A, const Matrix& B, const PeriodicInput& input, long warmup_periods,
                             long avg_periods) {
    if (!(input.gamma2() > 0.0)) throw NormalizationError("gamma_k_u_time_oracle: gamma2 must be positive");
    if (warmup_periods < 0 || avg_periods < 1) throw DimensionError("gamma_k_u_time_oracle: bad period counts");
    const Matrix u = input.to_time_domain();
    const long   k = input.k();
    const int    d = static_cast<int>(A.rows());
    Vector       x = Vector::Zero(d);
    auto         u_at = [&](long t) { return u.col((((t - 1) % k) + k) % k); };
    const long   warm = warmup_periods * k;
    for (long t = 0; t < warm; ++t) x = A * x + B * u_at(t);
    Matrix    acc = Matrix::Zero(d, d);
    const long n  = avg_periods * k;
    for (long t = warm; t < warm + n; ++t) {
        x = A * x + B * u_at(t);
        acc.noalias() += x * x.transpose();
    }
    return acc / (static_cast<double>(n) * input.gamma2());
}

Vector SteadyStateSplit::state_at(const Matrix& A, long t) const {
    Vector tr = transient_coeff;
    for (long s = 0; s < t; ++s) tr = A * tr;
    return ss.col(t % ss.cols()) + tr;
}

SteadyStateSplit steady_state_split(const Matrix& A, const Matrix& B, const PeriodicInput& input,
                                    const Vector& x0) {
    if (x0.size() != A.rows()) throw DimensionError("steady_state_split: x0 has wrong dimension");
    require_stable(A, "steady_state_split");
    const int  d = static_cast<int>(A.rows());
    const int  k = input.k();
    const auto w = twiddles(k);
    CMatrix    xs = CMatrix::Zero(d, k);
    for (int ell = 1; ell <= k; ++ell) {
        const auto U = input.coeff(ell);
        if (U.squaredNorm() == 0.0) continue;
        const CVector X = transfer(A, B, grid_angle(ell, k)) * U;
        for (int t = 0; t < k; ++t) {
            const auto m = static_cast<std::size_t>((static_cast<long>(ell) * t) % k);
            xs.col(t) += X * w[m];
        }
    }
    xs /= static_cast<double>(k);
    const double scale = std::max(1.0, xs.real().cwiseAbs().maxCoeff());
    if (xs.imag().cwiseAbs().maxCoeff() > 1e-9 * scale) {
        throw FeasibilityError("steady_state_split: steady state is not real; input not conjugate symmetric");
    }
    SteadyStateSplit out;
    out.ss              = xs.real();
    out.transient_coeff = x0 - out.ss.col(0);
    return out;
}

double settle_time_bound(const Matrix& A, const Matrix& B, const PeriodicInput& input, const Vector& x0,
                         double zeta, const Vector& w) {
    if (!(zeta > 0.0)) throw DimensionError("settle_time_bound: zeta must be positive");
    const BetaBound        bb    = beta_bound(A);
    const SteadyStateSplit split = steady_state_split(A, B, input, x0);
    const double           gap   = split.transient_coeff.norm();
    if (gap == 0.0) return 0.0;
    const double k      = input.k();
    const double rb     = bb.rho_bar;
    if (rb <= 0.0) return 0.0;
    const double wgw    = w.dot(gamma_tilde(A, B, input) * w);
    const double first  = std::log(k * zeta * (1.0 - rb * rb) / (2.0 * gap * gap * bb.beta * bb.beta)) /
                         (2.0 * std::log(rb));
    double second = 0.0;
    if (wgw > 0.0) {
        second = std::log(k * zeta * std::sqrt(1.0 - rb * rb) / (4.0 * gap * bb.beta * std::sqrt(k * wgw))) /
                 std::log(rb);
    }
    return std::max({0.0, first, second});
}

SettleResult settle_time(const Matrix& A, const Matrix& B, const PeriodicInput& input, const Vector& x0,
                         double zeta, const std::optional<Vector>& w) {
    if (!(zeta > 0.0)) throw DimensionError("settle_time: zeta must be positive");
    if (x0.size() != A.rows()) throw DimensionError("settle_time: x0 has wrong dimension");
    const double rho = spectral_radius(A);
    if (!(rho < 1.0)) throw StabilityError("settle_time: unstable system never settles");

    const long   k     = input.k();
    const Matrix gt    = gamma_tilde(A, B, input);
    std::vector<Vector> probes;
    if (w) {
        probes.push_back(*w / w->norm());
    } else {
        Eigen::SelfAdjointEigenSolver<Matrix> es(gt);
        for (int i = 0; i < gt.rows(); ++i) probes.push_back(es.eigenvectors().col(i));
    }

    constexpr long kCap = 1000000;
    const Matrix   u    = input.to_time_domain();
    // states[t] = x_t of the noiseless response, extended lazily.
    Matrix states(A.rows(), 1);
    states.col(0) = x0;
    long known    = 0;
    auto extend   = [&](long upto) {
        if (upto <= known) return;
        states.conservativeResize(Eigen::NoChange, upto + 1);
        for (long t = known; t < upto; ++t) {
            const long c         = (((t - 1) % k) + k) % k;
            states.col(t + 1)    = A * states.col(t) + B * u.col(c);
        }
        known = upto;
    };
    // Window t = start+1 .. start+k settled along every probe direction.
    auto settled = [&](long start) {
        extend(start + k);
        for (const Vector& v : probes) {
            const Vector proj = (v.transpose() * states.middleCols(start + 1, k)).transpose();
            const double mean = proj.mean();
            const double energy = (proj.array() - mean).square().sum();
            if (std::abs(energy - k * v.dot(gt * v)) > zeta * k) return false;
        }
        return true;
    };
    // Check two consecutive windows so a transient crossing zero does not stop the search early.
    auto ok = [&](long m) { return settled((m - 1) * k) && settled(m * k); };

    long hi = 1;
    while (!ok(hi)) {
        if (hi * k > kCap) throw StabilityError("settle_time: no settling within 1e6 steps");
        hi *= 2;
    }
    long lo = hi / 2;  // ok(lo) is false unless hi == 1
    if (hi == 1) lo = 0;
    while (hi - lo > 1) {
        const long mid = lo + (hi - lo) / 2;
        if (ok(mid)) hi = mid;
        else lo = mid;
    }

    SettleResult out;
    out.steps        = hi * k;
    out.window_start = out.steps - k;
    out.analytic     = 0.0;
    for (const Vector& v : probes) {
        out.analytic = std::max(out.analytic, settle_time_bound(A, B, input, x0, zeta, v));
    }
    return out;
}

}  // namespace activeid
