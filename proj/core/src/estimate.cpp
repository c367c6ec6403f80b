#include "activeid/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "activeid/errors.hpp"

namespace activeid {

LsAccumulator::LsAccumulator(int d, int p, bool joint) : d_(d), p_(p), joint_(joint) {
    if (d < 1 || p < 1) throw DimensionError("LsAccumulator: dimensions must be positive");
    const int m = joint ? d + p : d;
    zz_         = Matrix::Zero(m, m);
    yz_         = Matrix::Zero(d, m);
}

void LsAccumulator::push(const Matrix& states, const Matrix& inputs, const Matrix* B_known) {
    const long T = inputs.cols();
    if (states.rows() != d_ || inputs.rows() != p_ || states.cols() != T + 1) {
        throw DimensionError("least squares: trajectory shape does not match (d, p)");
    }
    Matrix Z, Y;
    if (joint_) {
        Z.resize(d_ + p_, T);
        Z.topRows(d_)    = states.leftCols(T);
        Z.bottomRows(p_) = inputs;
        Y                = states.rightCols(T);
    } else {
        Z = states.leftCols(T);
        Y = states.rightCols(T) - *B_known * inputs;
    }
    zz_.noalias() += Z * Z.transpose();
    yz_.noalias() += Y * Z.transpose();
    yy_ += Y.squaredNorm();
    n_ += T;
}

void LsAccumulator::add(const Trajectory& seg, const Matrix& B) {
    if (joint_) throw DimensionError("LsAccumulator: joint accumulator takes no B");
    if (B.rows() != d_ || B.cols() != p_) throw DimensionError("least squares: B has wrong shape");
    push(seg.states, seg.inputs, &B);
}

void LsAccumulator::add(const Trajectory& seg) {
    if (!joint_) throw DimensionError("LsAccumulator: known-B accumulator needs B");
    push(seg.states, seg.inputs, nullptr);
}

Estimate LsAccumulator::solve(RankPolicy policy) const {
    const int    m   = static_cast<int>(zz_.rows());
    const Matrix G   = 0.5 * (zz_ + zz_.transpose());
    const double tr  = G.trace();

    Eigen::SelfAdjointEigenSolver<Matrix> es(G);
    const double lmax = std::max(es.eigenvalues()(m - 1), 0.0);
    int          deficient = 0;
    for (int i = 0; i < m; ++i) deficient += (es.eigenvalues()(i) <= 1e-12 * lmax) ? 1 : 0;
    if (tr <= 0.0) deficient = m;

    Estimate out;
    out.cov = G;
    Matrix Greg = G;
    if (deficient > 0) {
        if (policy == RankPolicy::Throw || tr <= 0.0) {
            const Matrix basis = es.eigenvectors().leftCols(deficient);
            std::string  block = "state";
            if (joint_) {
                const double in_u = basis.bottomRows(p_).squaredNorm();
                const double in_x = basis.topRows(d_).squaredNorm();
                if (in_x <= 1e-9 * deficient) block = "input";
                else if (in_u > 1e-9 * deficient) block = "state+input";
            }
            throw RankError("least squares: regressors rank deficient (" + std::to_string(deficient) +
                                " unexcited directions in the " + block + " block)",
                            basis, block);
        }
        Greg.diagonal().array() += 1e-8 * tr / m;
        out.ridge = true;
    }
    // Normal equations Theta G = yz solved through a rank-revealing QR of G.
    const Matrix theta = Greg.colPivHouseholderQr().solve(yz_.transpose()).transpose();
    if (!theta.allFinite()) throw RankError("least squares: non-finite estimate", Matrix(), "state");

    out.A_hat = theta.leftCols(d_);
    if (joint_) out.B_hat = theta.rightCols(p_);
    const double rss  = yy_ - 2.0 * (theta * yz_.transpose()).trace() + (theta * G * theta.transpose()).trace();
    out.residual_norm = std::sqrt(std::max(0.0, rss));
    return out;
}

Estimate least_squares(const Trajectory& traj, const Matrix& B, RankPolicy policy) {
    LsAccumulator acc(static_cast<int>(traj.states.rows()), static_cast<int>(B.cols()), false);
    acc.add(traj, B);
    Estimate e = acc.solve(policy);
    // recompute the residual directly; the moment form loses digits near zero
    const long T      = traj.steps();
    const Matrix R    = traj.states.rightCols(T) - e.A_hat * traj.states.leftCols(T) - B * traj.inputs;
    e.residual_norm   = R.norm();
    return e;
}

Estimate least_squares_joint(const Trajectory& traj, RankPolicy policy) {
    LsAccumulator acc(static_cast<int>(traj.states.rows()), static_cast<int>(traj.inputs.rows()), true);
    acc.add(traj);
    Estimate   e = acc.solve(policy);
    const long T = traj.steps();
    const Matrix R = traj.states.rightCols(T) - e.A_hat * traj.states.leftCols(T) - *e.B_hat * traj.inputs;
    e.residual_norm = R.norm();
    return e;
}

namespace {

double logdet_spd(const Matrix& S) {
    Eigen::LLT<Matrix> llt(S);
    if (llt.info() != Eigen::Success) throw SingularError("log det: matrix not positive definite");
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

Matrix gamma_bar(const RadiusInputs& in) {
    const int d = static_cast<int>(in.A.rows());
    if (in.B.rows() != d) throw DimensionError("gamma_bar: B has wrong shape");
    if (in.T < 1) throw DimensionError("gamma_bar: T must be positive");
    if (!(in.delta > 0.0 && in.delta < 1.0)) throw DimensionError("gamma_bar: delta must lie in (0, 1)");
    const BetaBound bb = beta_bound(in.A);
    // Gramians beyond the truncation horizon are constant to 1e-10.
    const long   Th   = std::min(in.T, std::max<long>(1, truncation_horizon(in.A)));
    const double logt = 1.0 + std::log(2.0 / in.delta);
    const Matrix I    = Matrix::Identity(d, d);
    if (in.form == GammaBarForm::Uniform) {
        const double p     = static_cast<double>(in.B.cols());
        const double noise = (in.sigma2 * gram_noise(in.A, Th) + (in.gamma2 / p) * gram_input(in.A, in.B, Th)).trace();
        const double lead  = 16.0 * bb.beta * bb.beta * in.gamma2 / ((1.0 - bb.rho) * (1.0 - bb.rho)) * (1.0 + in.T);
        return (lead + 4.0 * noise * logt) * I;
    }
    Matrix det = Matrix::Zero(d, d);
    if (in.deterministic_cov) det = *in.deterministic_cov;
    else if (in.gamma_tilde.size() != 0) det = static_cast<double>(in.T) * in.gamma_tilde;
    const double noise = gram_eta(in.A, in.B, in.sigma2, in.sigma_u2, Th).trace();
    return 4.0 * (det / static_cast<double>(in.T) + noise * logt * I);
}

double epsilon_bound(const Estimate& est, const RadiusInputs& in) {
    const int d = static_cast<int>(in.A.rows());
    if (est.cov.rows() < d) throw DimensionError("epsilon_bound: estimate covariance too small");
    if (!(spectral_radius(in.A) < 1.0)) throw StabilityError("epsilon_bound: plug-in system is unstable");
    const double sigma = std::sqrt(std::max(in.sigma2, 0.0));
    if (sigma == 0.0) return 0.0;

    const Matrix cov = est.cov.topLeftCorner(d, d);
    const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (cov + cov.transpose()), Eigen::EigenvaluesOnly)
                            .eigenvalues()(0);
    if (!(lmin > 0.0)) throw SingularError("epsilon_bound: covariates are singular");

    Matrix M = gram_eta(in.A, in.B, in.sigma2, in.sigma_u2, in.k);
    if (in.gamma_tilde.size() != 0) M += in.gamma_tilde;
    M                 = 0.5 * (M + M.transpose());
    const Matrix Gb   = gamma_bar(in);
    // det(Gb M^{-1} + I) = det(Gb + M) / det(M)
    const double ld   = logdet_spd(Gb + M) - logdet_spd(M);
    const double term = 16.0 * (d * std::log(5.0) - std::log(in.delta)) + 8.0 * ld;
    return sigma / std::sqrt(lmin) * std::sqrt(term);
}

}  // namespace activeid
