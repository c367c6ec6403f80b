#include "activeid/tools/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "activeid/active.hpp"
#include "activeid/design.hpp"
#include "activeid/errors.hpp"
#include "activeid/estimate.hpp"
#include "activeid/freq.hpp"
#include "activeid/rng.hpp"

namespace activeid::tools {
namespace {

Matrix gaussian(RandomStream& r, int rows, int cols) {
    Matrix M(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) M(i, j) = r.gaussian();
    return M;
}

Matrix random_stable(RandomStream& r, int d, double rho) {
    const Matrix G   = gaussian(r, d, d);
    const double cur = spectral_radius(G);
    return cur > 0.0 ? Matrix(G * (rho / cur)) : G;
}

PeriodicInput random_input(RandomStream& r, int k, int p) {
    Matrix u = gaussian(r, p, k);
    u.colwise() -= u.rowwise().mean();
    return PeriodicInput::from_time_domain(u, 1.0);
}

double lmin(const Matrix& S) {
    return Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly).eigenvalues()(0);
}

double spec(const Matrix& M) { return Eigen::JacobiSVD<Matrix>(M).singularValues()(0); }

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return 0.5 * (v[n / 2] + v[(n - 1) / 2]);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

CheckResult at_most(std::string name, double measured, double threshold, std::string detail = {}) {
    return {std::move(name), measured <= threshold, measured, threshold, std::move(detail)};
}

CheckResult at_least(std::string name, double measured, double threshold, std::string detail = {}) {
    return {std::move(name), measured >= threshold, measured, threshold, std::move(detail)};
}

int scaled(int n, VerifyLevel level, int floor = 1) {
    return level == VerifyLevel::Full ? n : std::max(floor, n / 10);
}

CheckResult parseval(VerifyLevel, std::uint64_t seed, const VerifyTolerances& tol) {
    RandomStream r(seed, "verify-parseval");
    double       worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const int    k  = 2 + static_cast<int>(r.uniform() * 63);
        const int    p  = 1 + i % 3;
        const Matrix u  = gaussian(r, p, k);
        const auto   in = PeriodicInput::from_time_domain(u, 1.0);
        const double td = u.squaredNorm() / k;
        worst           = std::max(worst, std::abs(td - in.power()) / td);
    }
    return at_most("parseval", worst, tol.parseval, "max relative error over 50 random inputs");
}

CheckResult gamma_oracle(VerifyLevel level, std::uint64_t seed, const VerifyTolerances& tol) {
    RandomStream r(seed, "verify-gamma");
    const int    n     = scaled(50, level, 5);
    double       worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const int    d  = 1 + i % 6;
        const int    p  = 1 + i % 3;
        const int    k  = 2 + static_cast<int>(r.uniform() * 63);
        const Matrix A  = random_stable(r, d, 0.3 + 0.65 * r.uniform());
        const Matrix B  = gaussian(r, d, p);
        const auto   in = random_input(r, k, p);
        const Matrix G  = gamma_k_u(A, B, in);
        const double sc = std::max(1e-300, spec(gamma_tilde(A, B, in)));
        const long   ss = settle_time(A, B, in, Vector::Zero(d), 1e-10 * sc).steps;
        const Matrix Tm = gamma_k_u_time_oracle(A, B, in, ss / k + 1, 1);
        worst           = std::max(worst, (Tm - G).norm() / G.norm());
    }
    return at_most("gamma_oracle", worst, tol.gamma_oracle, "frequency formula vs settled time average, " + std::to_string(n) + " systems");
}

CheckResult scalar_optinput(VerifyLevel, std::uint64_t seed, const VerifyTolerances& tol) {
    const double  a = 0.9;
    const int     k = 20;
    DesignProblem pr;
    pr.A_hat          = Matrix::Constant(1, 1, a);
    pr.B              = Matrix::Identity(1, 1);
    pr.gamma2         = 1.0;
    pr.k              = k;
    pr.support        = all_frequencies(k);
    pr.past_cov       = Matrix::Zero(1, 1);
    pr.horizon_weight = 1.0;
    double brute      = 0.0;
    for (int ell = 1; ell < k; ++ell) {
        const double th = 2.0 * kPi * ell / k;
        brute           = std::max(brute, 1.0 / (1.0 + a * a - 2.0 * a * std::cos(th)));
    }
    const DesignResult res = opt_input(pr, seed);
    return at_most("scalar_optinput", std::abs(res.objective - brute) / brute, tol.optinput,
                   fmt("objective %.9g, brute force %.9g", res.objective, brute));
}

CheckResult colored_noise(VerifyLevel level, std::uint64_t seed, const VerifyTolerances& tol) {
    RandomStream r(seed, "verify-colored");
    const int    n     = scaled(10, level);
    const long   K     = 50;
    double       worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const int d   = 1 + i % 5;
        Vector    lam = Vector::Zero(d);
        for (int j = 0; j < d; ++j) lam(j) = 0.95 * r.uniform();
        double s = 0.0;
        for (int j = 0; j < d; ++j) {
            const double l2 = lam(j) * lam(j);
            s += (1.0 - l2) / (1.0 - std::pow(l2, static_cast<double>(K)));
        }
        const double closed = 1.0 / s;
        const auto   nd     = optimal_noise_cov(lam.asDiagonal(), Matrix::Identity(d, d), 1.0, 0.0, K);
        worst               = std::max(worst, std::abs(nd.objective - closed) / closed);
    }
    return at_most("colored_noise", worst, tol.colored_noise, std::to_string(n) + " diagonal spectra, K = 50");
}

CheckResult noise_gap(VerifyLevel, std::uint64_t seed, const VerifyTolerances& tol) {
    const int    d   = 8;
    const double lam = 1.0 - 1.0 / d;
    const Matrix A   = lam * Matrix::Identity(d, d);
    const Matrix B   = Matrix::Identity(d, d);
    const long   K   = truncation_horizon(A);
    const double nz  = optimal_noise_cov(A, B, 1.0, 0.0, K).objective;
    const double per = lower_bound_rate(A, B, 0.0, 1.0, K, 0, seed);
    return at_least("noise_gap", per / nz, tol.noise_gap * d, fmt("periodic %.6g vs noise %.6g", per, nz));
}

// Monte-Carlo failure frequency of the covariate lower bound for a single-frequency
// input, starting on the steady-state orbit so no settling is needed.
CheckResult tail_bound(const std::string& name, const Matrix& A, const Matrix& B, int periods, int trials,
                       std::uint64_t seed, const VerifyTolerances& tol) {
    const int    d  = static_cast<int>(A.rows());
    const int    k  = 10;
    const double g2 = 1.0;
    const auto   in = PeriodicInput::single_frequency(k, 1, Vector::Ones(B.cols()), g2, g2);
    const Matrix Gt = gamma_tilde(A, B, in);
    const auto   sp = steady_state_split(A, B, in, Vector::Zero(d));
    // probe along the weakest excited direction
    Eigen::SelfAdjointEigenSolver<Matrix> es(Gt);
    const Vector w     = es.eigenvectors().col(0);
    const long   T     = static_cast<long>(periods) * k;
    const double level = 2.0 / 81.0 * k * periods * w.dot(Gt * w);
    int          fails = 0;
    for (int i = 0; i < trials; ++i) {
        const auto tr = simulate(LinSys(A, B), NoiseModel{1.0, 0.0}, in.signal(), T, sp.ss.col(0), trial_seed(seed, i));
        double     s  = 0.0;
        for (long t = 1; t <= T; ++t) s += std::pow(w.dot(tr.states.col(t)), 2);
        if (s <= level) ++fails;
    }
    const double bound = std::exp(-2.0 / 81.0 * periods);
    const double sd    = std::sqrt(bound * (1.0 - bound) / trials);
    return at_most(name, static_cast<double>(fails) / trials, bound + tol.tail_sigmas * sd,
                   fmt("%g failures, bound %.4g", fails, bound));
}

std::vector<CheckResult> tail_bounds(VerifyLevel level, std::uint64_t seed, const VerifyTolerances& tol) {
    const int n = scaled(2000, level);
    Matrix    A2(2, 2);
    A2 << 0.5, 0.3, 0.0, 0.7;
    const Matrix B2 = (Matrix(2, 1) << 1.0, 0.5).finished();
    return {tail_bound("tail_bound_scalar_100", Matrix::Constant(1, 1, 0.5), Matrix::Identity(1, 1), 100, n,
                       RandomStream::derive_key(seed, "tail", 1), tol),
            tail_bound("tail_bound_scalar_200", Matrix::Constant(1, 1, 0.5), Matrix::Identity(1, 1), 200, n,
                       RandomStream::derive_key(seed, "tail", 2), tol),
            tail_bound("tail_bound_d2_200", A2, B2, 200, n, RandomStream::derive_key(seed, "tail", 3), tol)};
}

std::vector<CheckResult> rate(VerifyLevel level, std::uint64_t seed, const VerifyTolerances& tol) {
    Matrix A(2, 2);
    A << 0.8, 0.4, 0.0, 0.5;
    const Matrix B     = (Matrix(2, 1) << 0.0, 1.0).finished();
    const int    k     = 16;
    const double sigma = 0.3;
    // medians of fewer than ~100 draws are too noisy for a 20% band
    const int    n     = scaled(200, level, 100);
    const Matrix N     = sigma * sigma * gram_noise(A, k);

    DesignProblem pr;
    pr.A_hat          = A;
    pr.B              = B;
    pr.gamma2         = 1.0;
    pr.k              = k;
    pr.support        = all_frequencies(k);
    pr.past_cov       = N;
    pr.horizon_weight = 1.0;
    const PeriodicInput designed = opt_input(pr, seed).input;
    const PeriodicInput poor     = PeriodicInput::single_frequency(k, k / 2, Vector::Ones(1), 1.0, 1.0);

    const std::vector<long> Ts{512, 2048, 8192};
    auto constants = [&](const PeriodicInput& in, std::uint64_t s) {
        const auto                       sp = steady_state_split(A, B, in, Vector::Zero(2));
        std::vector<std::vector<double>> errs(Ts.size());
        for (int i = 0; i < n; ++i) {
            const auto tr = simulate(LinSys(A, B), NoiseModel{sigma, 0.0}, in.signal(), Ts.back(), sp.ss.col(0), trial_seed(s, i));
            for (std::size_t j = 0; j < Ts.size(); ++j) {
                Trajectory head;
                head.states = tr.states.leftCols(Ts[j] + 1);
                head.inputs = tr.inputs.leftCols(Ts[j]);
                errs[j].push_back(spec(least_squares(head, B).A_hat - A));
            }
        }
        std::vector<double> c;
        for (std::size_t j = 0; j < Ts.size(); ++j) c.push_back(median(errs[j]) * std::sqrt(static_cast<double>(Ts[j])));
        return c;
    };
    const auto   cp   = constants(poor, RandomStream::derive_key(seed, "rate", 1));
    const auto   cd   = constants(designed, RandomStream::derive_key(seed, "rate", 2));
    double       dev  = 0.0;
    for (const auto* c : {&cp, &cd})
        for (std::size_t j = 0; j + 1 < c->size(); ++j) dev = std::max(dev, std::abs((*c)[j + 1] / (*c)[j] - 1.0));
    const double gain = lmin(N + gamma_tilde(A, B, designed)) / lmin(N + gamma_tilde(A, B, poor));
    return {at_most("rate_sqrt_T", dev, tol.rate, fmt("c(T) poor %.4g %.4g %.4g", cp[0], cp[1], cp[2]) +
                                                    fmt(", designed %.4g %.4g %.4g", cd[0], cd[1], cd[2])),
            at_least("rate_information_gain", gain, 2.0, "lambda_min ratio of designed to poor input"),
            at_most("rate_constant_drops", cd.back() / cp.back(), 1.0, "designed / poor error constant at T = 8192")};
}

std::vector<CheckResult> replication(VerifyLevel level, std::uint64_t seed, const VerifyTolerances& tol) {
    Matrix A = 0.9 * Matrix::Identity(4, 4);
    for (int i = 0; i < 3; ++i) A(i, i + 1) = 1.0;
    const LinSys sys(A, Matrix::Identity(4, 4));
    ActiveConfig c;
    c.gamma2 = 4.0;
    // five-trial medians flip the 0.5 ratio on some seeds
    const int           n = scaled(50, level, 10);
    std::vector<double> act, orc, iso;
    for (int i = 0; i < n; ++i) {
        const std::uint64_t s = trial_seed(seed, i);
        act.push_back(run_active(sys, NoiseModel{1.0, 0.0}, c, s).epochs.back().spectral_error);
        orc.push_back(run_oracle(sys, NoiseModel{1.0, 0.0}, c, s).epochs.back().spectral_error);
        iso.push_back(run_noise_baseline(sys, NoiseModel{1.0, 0.0}, Matrix::Identity(4, 4), epoch_checkpoints(c), s)
                          .epochs.back()
                          .spectral_error);
    }
    const double ma = median(act), mo = median(orc), mi = median(iso);
    const std::string det = fmt("medians active %.4g oracle %.4g iso %.4g", ma, mo, mi);
    return {at_most("jordan_vs_noise", ma / mi, tol.jordan_noise, det), at_most("jordan_vs_oracle", ma / mo, tol.jordan_oracle, det)};
}

std::vector<CheckResult> bookkeeping(VerifyLevel level, std::uint64_t seed, const VerifyTolerances& tol) {
    const LinSys sys(Matrix::Constant(2, 2, 0.3) + 0.4 * Matrix::Identity(2, 2), Matrix::Identity(2, 2));
    ActiveConfig c;
    c.gamma2          = 2.0;
    c.epochs          = 5;
    c.keep_trajectory = true;
    const int n       = scaled(50, level, 10);
    const auto cps    = epoch_checkpoints(c);

    bool   sizes_ok = true;
    for (int i = 0; i < c.epochs; ++i) {
        long p3 = 1;
        for (int j = 0; j <= i; ++j) p3 *= 3;
        sizes_ok = sizes_ok && cps[i] == c.T0 * (p3 - 1) / 2 && epoch_period(c, i) == std::min(c.k0 << i, c.k_cap);
    }
    // per epoch, power averaged over its complete aligned windows
    std::vector<std::vector<double>> power(c.epochs);
    for (int t = 0; t < n; ++t) {
        const auto rec = run_active(sys, NoiseModel{1.0, 0.0}, c, trial_seed(seed, t));
        for (int i = 0; i < c.epochs; ++i) {
            sizes_ok      = sizes_ok && rec.epochs[i].T == cps[i] && rec.epochs[i].k == epoch_period(c, i);
            const long a  = i == 0 ? 0 : cps[i - 1];
            const long k  = epoch_period(c, i);
            const long nw = (cps[i] - a) / k;
            power[i].push_back(rec.trajectory->inputs.middleCols(a, nw * k).squaredNorm() / static_cast<double>(nw * k));
        }
    }
    double worst = -INFINITY;
    for (const auto& v : power) {
        double m = 0.0, s2 = 0.0;
        for (double x : v) m += x;
        m /= n;
        for (double x : v) s2 += (x - m) * (x - m);
        const double se = std::sqrt(s2 / (n - 1) / n);
        worst           = std::max(worst, (m - c.gamma2) / std::max(se, 1e-300));
    }
    return {at_least("epoch_schedule", sizes_ok ? 1.0 : 0.0, 1.0, "T_i = (T0/2)(3^(i+1) - 1), k_i = 2^i k0"),
            at_most("power_budget", worst, tol.power_sigmas, "worst (mean - gamma2) / standard error over epochs")};
}

CheckResult gradient(VerifyLevel, std::uint64_t seed, const VerifyTolerances& tol) {
    RandomStream r(seed, "verify-gradient");
    double       worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const int    d = 2 + rep % 3, p = 1 + rep % 2, k = 12;
        const Matrix A = random_stable(r, d, 0.7);
        const Matrix B = gaussian(r, d, p);
        CMatrix      U = CMatrix::Zero(p, k);
        for (int ell = 1; ell < k / 2; ++ell) {
            CVector c(p);
            for (int i = 0; i < p; ++i) c(i) = Complex(r.gaussian(), r.gaussian());
            U.col(ell - 1)     = c;
            U.col(k - ell - 1) = c.conjugate();
        }
        const PeriodicInput in(U, 1.0);
        const auto          sup = all_frequencies(k);
        Vector              w   = gaussian(r, d, 1);
        w.normalize();
        const Matrix D  = gaussian(r, d, d);
        const double h  = 1e-6;
        const double fd = (w.dot(hk_matrix(A + h * D, B, in, sup) * w) - w.dot(hk_matrix(A - h * D, B, in, sup) * w)) / (2 * h);
        const double an = hk_directional_derivative(A, B, in, sup, w, D);
        worst           = std::max(worst, std::abs(fd - an) / std::max(1e-12, std::abs(an)));
    }
    return at_most("gradient", worst, tol.gradient, "20 random instances, central difference h = 1e-6");
}

}  // namespace

VerifyLevel verify_level_from_string(const std::string& s) {
    if (s == "fast") return VerifyLevel::Fast;
    if (s == "full") return VerifyLevel::Full;
    throw ConfigError("level must be 'fast' or 'full', got '" + s + "'");
}

bool VerifyReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

VerifyReport verify_suite(VerifyLevel level, std::uint64_t seed, const VerifyTolerances& tol) {
    VerifyReport rep;
    auto         add = [&](std::vector<CheckResult> v) {
        for (auto& c : v) rep.checks.push_back(std::move(c));
    };
    add({parseval(level, seed, tol)});
    add({gamma_oracle(level, seed, tol)});
    add({scalar_optinput(level, seed, tol)});
    add({colored_noise(level, seed, tol)});
    add({noise_gap(level, seed, tol)});
    add(tail_bounds(level, seed, tol));
    add(rate(level, seed, tol));
    add(replication(level, seed, tol));
    add(bookkeeping(level, seed, tol));
    add({gradient(level, seed, tol)});
    return rep;
}

void write_verify_csv(std::ostream& os, const VerifyReport& rep) {
    os << "# schema=1\n";
    os << "name,passed,measured,threshold,detail\n";
    for (const auto& c : rep.checks) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6g,%.6g", c.measured, c.threshold);
        std::string detail = c.detail;
        std::replace(detail.begin(), detail.end(), '"', '\'');
        os << c.name << ',' << (c.passed ? "pass" : "fail") << ',' << buf << ",\"" << detail << "\"\n";
    }
}

}  // namespace activeid::tools
