#include <cmath>
#include <complex>

#include "doctest.h"

#include "activeid/errors.hpp"
#include "activeid/freq.hpp"
#include "activeid/lds.hpp"
#include "oracles.hpp"

using namespace activeid;

namespace {

using cd = std::complex<double>;

// Random real signal built in the time domain, so its DFT is conjugate symmetric by construction.
PeriodicInput random_input(RandomStream& rng, int k, int p, bool zero_mean = true) {
    Matrix u = oracle::gaussian(rng, p, k);
    if (zero_mean) u.colwise() -= u.rowwise().mean();
    return PeriodicInput::from_time_domain(u, 1.0);
}

// Brute-force DFT straight from the definition.
CMatrix naive_dft(const Matrix& u) {
    const int k = static_cast<int>(u.cols());
    CMatrix   U = CMatrix::Zero(u.rows(), k);
    for (int ell = 1; ell <= k; ++ell)
        for (int t = 1; t <= k; ++t)
            U.col(ell - 1) += u.col(t - 1).cast<cd>() * std::polar(1.0, -2.0 * kPi * ell * t / k);
    return U;
}

}  // namespace

TEST_CASE("transfer examples") {
    const double theta = 0.7;
    const CMatrix G0 = transfer(Matrix::Zero(2, 2), Matrix::Identity(2, 2), theta);
    CHECK((G0 - std::polar(1.0, -theta) * CMatrix::Identity(2, 2)).norm() < 1e-14);

    const CMatrix g = transfer(Matrix::Constant(1, 1, 0.9), Matrix::Identity(1, 1), 0.0);
    CHECK(std::abs(g(0, 0) - cd(10.0, 0.0)) < 1e-12);

    Matrix A = Matrix::Zero(2, 2);
    A(0, 0)  = 0.5;
    const CMatrix Gpi = transfer(A, Matrix::Identity(2, 2), kPi);
    CHECK(std::abs(Gpi(0, 0) - cd(-2.0 / 3.0, 0.0)) < 1e-12);
    CHECK(std::abs(Gpi(1, 1) - cd(-1.0, 0.0)) < 1e-12);
    CHECK(std::abs(Gpi(0, 1)) < 1e-14);

    CHECK_THROWS_AS(transfer(Matrix::Identity(2, 2), Matrix::Identity(2, 2), 0.0), SingularError);
    CHECK_THROWS_AS(transfer(Matrix::Zero(2, 2), Matrix::Identity(3, 1), 0.0), DimensionError);
}

TEST_CASE("transfer agrees with the explicit inverse on random systems") {
    RandomStream rng(11, "test");
    for (int rep = 0; rep < 20; ++rep) {
        const int    d = 1 + rep % 5;
        const Matrix A = oracle::random_stable(rng, d, 0.95);
        const Matrix B = oracle::gaussian(rng, d, 2);
        const double th = rng.uniform() * 2.0 * kPi;
        const CMatrix M = std::polar(1.0, th) * CMatrix::Identity(d, d) - A.cast<cd>();
        const CMatrix ref = M.inverse() * B.cast<cd>();
        CHECK((transfer(A, B, th) - ref).norm() <= 1e-10 * ref.norm());
    }
}

TEST_CASE("time domain conversion") {
    SUBCASE("zero coefficients") {
        const PeriodicInput in(8, 3, 1.0);
        CHECK(in.to_time_domain().isZero(0.0));
        CHECK(in.power() == 0.0);
    }
    SUBCASE("two-point cosine") {
        CMatrix U = CMatrix::Zero(1, 4);
        U(0, 0) = 2.0;
        U(0, 2) = 2.0;
        const Matrix u = PeriodicInput(U, 1.0).to_time_domain();
        for (int t = 1; t <= 4; ++t) CHECK(u(0, t - 1) == doctest::Approx(std::cos(kPi * t / 2.0)).epsilon(1e-12));
    }
    SUBCASE("random round trip and DFT convention") {
        RandomStream rng(3, "test");
        for (int rep = 0; rep < 10; ++rep) {
            const Matrix u  = oracle::gaussian(rng, 2, 16);
            const auto   in = PeriodicInput::from_time_domain(u, 1.0);
            CHECK((in.coeffs() - naive_dft(u)).cwiseAbs().maxCoeff() < 1e-10);
            CHECK((in.to_time_domain() - u).cwiseAbs().maxCoeff() < 1e-10);
            CHECK(in.conjugate_asymmetry() < 1e-10);
        }
    }
    SUBCASE("non-symmetric coefficients are rejected") {
        CMatrix U = CMatrix::Zero(1, 4);
        U(0, 0) = cd(1.0, 0.0);
        CHECK_THROWS_AS(PeriodicInput(U, 1.0).to_time_domain(), FeasibilityError);
    }
    SUBCASE("at() is periodic") {
        RandomStream rng(5, "test");
        const auto   in = random_input(rng, 6, 2);
        const Matrix u  = in.to_time_domain();
        for (long t = -7; t <= 20; ++t) {
            const long c = ((t - 1) % 6 + 6) % 6;
            CHECK((in.at(t) - u.col(c)).norm() < 1e-12);
        }
    }
}

TEST_CASE("Parseval holds for random inputs") {
    RandomStream rng(4, "test");
    for (int rep = 0; rep < 25; ++rep) {
        const int    k  = 2 + rep;
        const auto   in = random_input(rng, k, 1 + rep % 3, rep % 2 == 0);
        const Matrix u  = in.to_time_domain();
        const double td = u.squaredNorm() / k;
        CHECK(std::abs(td - in.power()) <= 1e-10 * std::max(1.0, td));
        CHECK(std::abs(u.squaredNorm() - in.coeffs().squaredNorm() / k) <= 1e-10 * std::max(1.0, td * k));
        if (rep % 2 == 0) CHECK(in.has_zero_mean(1e-9));
    }
}

TEST_CASE("gamma_k_u examples") {
    SUBCASE("A = 0 cosine along e1") {
        const int    k = 20;
        const double g2 = 2.5;
        Matrix       u = Matrix::Zero(2, k);
        for (int t = 1; t <= k; ++t) u(0, t - 1) = std::sqrt(2.0 * g2) * std::cos(2.0 * kPi * t / k);
        const auto   in = PeriodicInput::from_time_domain(u, g2);
        const Matrix A  = Matrix::Zero(2, 2);
        const Matrix B  = Matrix::Identity(2, 2);
        Matrix       e11 = Matrix::Zero(2, 2);
        e11(0, 0) = 1.0;
        CHECK((gamma_k_u(A, B, in) - e11).norm() < 1e-10);
        CHECK((gamma_k_u_time_oracle(A, B, in, 1, 1) - e11).norm() < 1e-10);
    }
    SUBCASE("zero input") {
        RandomStream rng(6, "test");
        const Matrix A = oracle::random_stable(rng, 3, 0.8);
        const Matrix B = oracle::gaussian(rng, 3, 2);
        const PeriodicInput zero(10, 2, 1.0);
        CHECK(gamma_tilde(A, B, zero).isZero(0.0));
        CHECK_THROWS_AS(gamma_k_u(A, B, PeriodicInput(10, 2, 0.0)), NormalizationError);
    }
    SUBCASE("scalar a = 0.9 at the first frequency") {
        const int    k     = 20;
        const double g2    = 1.7;
        const auto   in    = PeriodicInput::single_frequency(k, 1, Vector::Ones(1), g2, g2);
        const double value = gamma_k_u(Matrix::Constant(1, 1, 0.9), Matrix::Identity(1, 1), in)(0, 0);
        const double ref   = oracle::scalar_gain(0.9, 2.0 * kPi / k);
        CHECK(ref == doctest::Approx(10.19).epsilon(1e-3));
        CHECK(value == doctest::Approx(ref).epsilon(1e-12));
        const long   warm = settle_time(Matrix::Constant(1, 1, 0.9), Matrix::Identity(1, 1), in, Vector::Zero(1), 1e-9).steps;
        const double td   = gamma_k_u_time_oracle(Matrix::Constant(1, 1, 0.9), Matrix::Identity(1, 1), in, warm / k + 20, 2)(0, 0);
        CHECK(td == doctest::Approx(ref).epsilon(1e-6));
    }
}

TEST_CASE("gamma_k_u matches the time-domain oracle on random systems") {
    RandomStream rng(7, "test");
    for (int rep = 0; rep < 20; ++rep) {
        const int    d  = 1 + rep % 4;
        const int    p  = 1 + rep % 2;
        const int    k  = 4 + 3 * (rep % 5);
        const Matrix A  = oracle::random_stable(rng, d, 0.5 + 0.02 * rep);
        const Matrix B  = oracle::gaussian(rng, d, p);
        const auto   in = random_input(rng, k, p);
        const Matrix G  = gamma_k_u(A, B, in);
        CHECK((G - G.transpose()).norm() < 1e-12);
        CHECK(oracle::min_eig(G) >= -1e-12);
        // settle to far below the tolerance, then average over whole periods
        const double scale  = std::max(1e-12, oracle::max_eig(gamma_tilde(A, B, in)));
        const auto   settle = settle_time(A, B, in, Vector::Zero(d), 1e-9 * scale);
        const Matrix T1     = gamma_k_u_time_oracle(A, B, in, settle.steps / k + 30, 1);
        CHECK((T1 - G).norm() <= 1e-6 * G.norm());
        const Matrix T2 = gamma_k_u_time_oracle(A, B, in, settle.steps / k + 30, 2);
        CHECK((T2 - T1).norm() <= 1e-10 * std::max(1.0, T1.norm()));
    }
}

TEST_CASE("gamma_k_u is shift invariant") {
    RandomStream rng(8, "test");
    for (int rep = 0; rep < 10; ++rep) {
        const Matrix A  = oracle::random_stable(rng, 3, 0.9);
        const Matrix B  = oracle::gaussian(rng, 3, 2);
        const auto   in = random_input(rng, 12, 2);
        const Matrix G  = gamma_k_u(A, B, in);
        for (long s : {1L, 5L, -3L, 100L}) CHECK((gamma_k_u(A, B, in.shifted(s)) - G).norm() <= 1e-10 * G.norm());
        // shifted() is a genuine time shift
        const auto sh = in.shifted(2);
        CHECK((sh.at(1) - in.at(3)).norm() < 1e-12);
    }
}

TEST_CASE("gamma_k_u is consistent under grid refinement") {
    RandomStream rng(9, "test");
    for (int rep = 0; rep < 10; ++rep) {
        const int    k  = 5 + rep;
        const Matrix A  = oracle::random_stable(rng, 2, 0.85);
        const Matrix B  = oracle::gaussian(rng, 2, 2);
        const auto   in = random_input(rng, k, 2);
        // same physical frequencies on the 2k grid: U'_{2l} = 2 U_l, odd bins empty
        CMatrix U2 = CMatrix::Zero(2, 2 * k);
        for (int ell = 1; ell <= k; ++ell) U2.col(2 * ell - 1) = 2.0 * in.coeff(ell);
        const PeriodicInput fine(U2, in.gamma2());
        CHECK(std::abs(fine.power() - in.power()) < 1e-12);
        const Matrix G = gamma_k_u(A, B, in);
        CHECK((gamma_k_u(A, B, fine) - G).norm() <= 1e-10 * G.norm());
        // and it is the same signal repeated twice
        const Matrix u = in.to_time_domain();
        const Matrix v = fine.to_time_domain();
        CHECK((v.leftCols(k) - u).norm() < 1e-10);
        CHECK((v.rightCols(k) - u).norm() < 1e-10);
    }
}

TEST_CASE("steady_state_split") {
    RandomStream rng(10, "test");
    SUBCASE("reconstruction matches noiseless simulation") {
        for (int rep = 0; rep < 10; ++rep) {
            const int    d  = 2 + rep % 3;
            const Matrix A  = oracle::random_stable(rng, d, 0.9);
            const Matrix B  = oracle::gaussian(rng, d, 2);
            const auto   in = random_input(rng, 7, 2, rep % 2 == 0);
            const Vector x0 = oracle::gaussian(rng, d, 1);
            const auto   sp = steady_state_split(A, B, in, x0);
            const auto   tr = simulate(LinSys(A, B), NoiseModel{0.0, 0.0}, in.signal(), 60, x0, 1);
            for (long t = 0; t <= 60; ++t) {
                const Vector x = tr.states.col(t);
                CHECK((sp.state_at(A, t) - x).norm() <= 1e-9 * std::max(1.0, x.norm()));
            }
        }
    }
    SUBCASE("starting on the orbit leaves no transient") {
        const Matrix A  = oracle::random_stable(rng, 3, 0.8);
        const Matrix B  = oracle::gaussian(rng, 3, 1);
        const auto   in = random_input(rng, 9, 1);
        const auto   sp = steady_state_split(A, B, in, Vector::Zero(3));
        const auto   on = steady_state_split(A, B, in, sp.ss.col(0));
        CHECK(on.transient_coeff.norm() < 1e-12);
        CHECK(settle_time(A, B, in, sp.ss.col(0), 1e-6).steps == 9);
    }
    SUBCASE("A = 0 orbit is B u_{t-1}") {
        const Matrix B  = oracle::gaussian(rng, 2, 2);
        const auto   in = random_input(rng, 5, 2);
        const auto   sp = steady_state_split(Matrix::Zero(2, 2), B, in, Vector::Ones(2));
        for (long t = 0; t < 5; ++t) CHECK((sp.ss.col(t) - B * in.at(t - 1)).norm() < 1e-12);
        CHECK((sp.state_at(Matrix::Zero(2, 2), 1) - B * in.at(0)).norm() < 1e-12);
    }
}

TEST_CASE("settle_time") {
    SUBCASE("A = 0 settles in one period") {
        RandomStream rng(12, "test");
        const auto   in = random_input(rng, 8, 2);
        CHECK(settle_time(Matrix::Zero(2, 2), Matrix::Identity(2, 2), in, Vector::Constant(2, 5.0), 1e-6).steps == 8);
    }
    SUBCASE("empirical window start never exceeds the analytic bound") {
        RandomStream rng(13, "test");
        const Matrix A = Matrix::Constant(1, 1, 0.9);
        const Matrix B = Matrix::Identity(1, 1);
        for (int rep = 0; rep < 20; ++rep) {
            const int    k    = 4 + rep;
            const auto   in   = random_input(rng, k, 1);
            const Vector x0   = Vector::Constant(1, 10.0 * rng.gaussian());
            const double gt   = gamma_tilde(A, B, in)(0, 0);
            const Vector w    = Vector::Ones(1);
            const auto   res  = settle_time(A, B, in, x0, 0.1 * gt, w);
            CHECK(res.steps % k == 0);
            CHECK(res.window_start == res.steps - k);
            CHECK(static_cast<double>(res.window_start) <= res.analytic + 1e-9);
        }
    }
    SUBCASE("errors") {
        RandomStream rng(14, "test");
        const auto   in = random_input(rng, 4, 1);
        CHECK_THROWS_AS(settle_time(Matrix::Constant(1, 1, 1.01), Matrix::Identity(1, 1), in, Vector::Zero(1), 0.1),
                        StabilityError);
        CHECK_THROWS_AS(settle_time(Matrix::Constant(1, 1, 0.5), Matrix::Identity(1, 1), in, Vector::Zero(1), 0.0),
                        DimensionError);
    }
}
