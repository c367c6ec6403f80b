#pragma once

// Independent reference computations used only by the tests.

#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "activeid/rng.hpp"

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline double scalar_gain(double a, double theta) {
    // 1 / |e^{j theta} - a|^2
    return 1.0 / (1.0 + a * a - 2.0 * a * std::cos(theta));
}

inline double min_eig(const MatrixXd& S) {
    return Eigen::SelfAdjointEigenSolver<MatrixXd>(0.5 * (S + S.transpose())).eigenvalues()(0);
}

inline double max_eig(const MatrixXd& S) {
    const auto ev = Eigen::SelfAdjointEigenSolver<MatrixXd>(0.5 * (S + S.transpose())).eigenvalues();
    return ev(ev.size() - 1);
}

inline double spec_norm(const MatrixXd& M) { return Eigen::JacobiSVD<MatrixXd>(M).singularValues()(0); }

// Closed-form colored-noise optimum for A = diag(lambda), B = I, sigma = 0.
inline double diag_noise_optimum(const VectorXd& lambda, double gamma2, long K) {
    double s = 0.0;
    for (int i = 0; i < lambda.size(); ++i) {
        const double l2 = lambda(i) * lambda(i);
        s += (l2 == 0.0) ? 1.0 : (1.0 - l2) / (1.0 - std::pow(l2, static_cast<double>(K)));
    }
    return gamma2 / s;
}

inline MatrixXd gaussian(activeid::RandomStream& r, int rows, int cols) {
    MatrixXd M(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) M(i, j) = r.gaussian();
    return M;
}

// Random matrix rescaled to spectral radius rho.
inline MatrixXd random_stable(activeid::RandomStream& r, int d, double rho) {
    MatrixXd A = gaussian(r, d, d);
    const double cur = Eigen::EigenSolver<MatrixXd>(A, false).eigenvalues().cwiseAbs().maxCoeff();
    return A * (rho / cur);
}

}  // namespace oracle
