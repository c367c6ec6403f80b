#include <cmath>

#include "doctest.h"

#include "activeid/errors.hpp"
#include "activeid/lds.hpp"
#include "oracles.hpp"

using namespace activeid;

namespace {

Matrix jordan(int d, double lam) {
    Matrix A = lam * Matrix::Identity(d, d);
    for (int i = 0; i + 1 < d; ++i) A(i, i + 1) = 1.0;
    return A;
}

Matrix diag2(double a, double b) {
    Matrix A = Matrix::Zero(2, 2);
    A(0, 0)  = a;
    A(1, 1)  = b;
    return A;
}

}  // namespace

TEST_CASE("spectral_radius examples") {
    CHECK(spectral_radius(Matrix::Zero(2, 2)) == 0.0);
    CHECK(spectral_radius(diag2(0.9, -0.5)) == doctest::Approx(0.9).epsilon(1e-10));
    CHECK(spectral_radius(jordan(2, 0.9)) == doctest::Approx(0.9).epsilon(1e-10));
    Matrix R(2, 2);
    R << 0.0, -0.8, 0.8, 0.0;  // eigenvalues +-0.8j
    CHECK(spectral_radius(R) == doctest::Approx(0.8).epsilon(1e-10));
    CHECK_THROWS_AS(spectral_radius(Matrix::Zero(2, 3)), DimensionError);
}

TEST_CASE("LinSys and StableSys validation") {
    CHECK_THROWS_AS(LinSys(Matrix::Zero(2, 3), Matrix::Zero(2, 1)), DimensionError);
    CHECK_THROWS_AS(LinSys(Matrix::Zero(2, 2), Matrix::Zero(3, 1)), DimensionError);
    CHECK_THROWS_AS(LinSys(Matrix::Zero(2, 2), Matrix::Zero(2, 0)), DimensionError);
    const LinSys ok(Matrix::Zero(2, 2), Matrix::Identity(2, 1));
    CHECK(ok.d() == 2);
    CHECK(ok.p() == 1);
    CHECK_THROWS_AS(StableSys(LinSys(1.1 * Matrix::Identity(2, 2), Matrix::Identity(2, 2))), StabilityError);
    CHECK(StableSys(ok).rho() == 0.0);
    CHECK_THROWS_AS((NoiseModel{-1.0, 0.0}.validate()), ConfigError);
}

TEST_CASE("beta_bound dominates matrix powers") {
    SUBCASE("zero matrix") {
        const BetaBound b = beta_bound(Matrix::Zero(2, 2));
        CHECK(b.beta >= 1.0);
        CHECK(b.rho_bar == doctest::Approx(0.5));
    }
    SUBCASE("scalar 0.9") {
        const BetaBound b = beta_bound(Matrix::Constant(1, 1, 0.9));
        CHECK(b.rho_bar == doctest::Approx(0.95));
        for (int k = 0; k <= 100; ++k) CHECK(std::pow(0.9, k) <= b.beta * std::pow(0.95, k) + 1e-12);
    }
    SUBCASE("Jordan block d=4 against the power-iteration oracle") {
        const Matrix    A = jordan(4, 0.9);
        const BetaBound b = beta_bound(A);
        Matrix          P = Matrix::Identity(4, 4);
        double          sup = 0.0;
        for (int k = 0; k <= 500; ++k) {
            sup = std::max(sup, oracle::spec_norm(P) / std::pow(b.rho_bar, k));
            P   = A * P;
        }
        CHECK(b.beta >= sup * (1.0 - 1e-9));
        // resolvent bound, loose for defective blocks but not absurdly so
        CHECK(b.beta <= 500.0 * sup);
    }
    CHECK_THROWS_AS(beta_bound(Matrix::Identity(2, 2)), StabilityError);
}

TEST_CASE("truncation horizon meets its tolerance") {
    const Matrix    A = jordan(3, 0.8);
    const long      t = truncation_horizon(A);
    const BetaBound b = beta_bound(A);
    CHECK(b.beta * b.beta * std::pow(b.rho_bar, 2.0 * t) < 1e-10);
    CHECK(truncation_horizon(Matrix::Zero(2, 2)) >= 1);
}

TEST_CASE("Gramian examples") {
    CHECK(gram_noise(Matrix::Zero(2, 2), 5).isApprox(Matrix::Identity(2, 2)));
    CHECK(gram_noise(Matrix::Constant(1, 1, 0.5), 3)(0, 0) == doctest::Approx(1.3125));
    CHECK(gram_noise(diag2(0.9, 0.5), 2).isApprox(diag2(1.81, 1.25)));

    CHECK(gram_input(Matrix::Zero(2, 2), Matrix::Identity(2, 2), 7).isApprox(Matrix::Identity(2, 2)));
    const Matrix e1 = Matrix::Identity(2, 1);
    CHECK(gram_input(Matrix::Zero(2, 2), e1, 3).isApprox(e1 * e1.transpose()));
    CHECK(gram_input(Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 2.0), 2)(0, 0) == doctest::Approx(5.0));

    RandomStream rng(1, "test");
    const Matrix A = oracle::random_stable(rng, 3, 0.7);
    const Matrix B = oracle::gaussian(rng, 3, 2);
    CHECK((gram_eta(A, B, 1.0, 0.0, 9) - gram_noise(A, 9)).norm() < 1e-12);
    CHECK((gram_eta(A, B, 0.0, 1.0, 9) - gram_input(A, B, 9)).norm() < 1e-12);
    CHECK(gram_eta(Matrix::Zero(2, 2), Matrix::Identity(2, 2), 2.0, 3.0, 1).isApprox(5.0 * Matrix::Identity(2, 2)));
    CHECK_THROWS_AS(gram_noise(A, 0), DimensionError);
}

TEST_CASE("Gramians are monotone and converge geometrically") {
    RandomStream rng(2, "test");
    for (int rep = 0; rep < 10; ++rep) {
        const int       d = 1 + rep % 4;
        const Matrix    A = oracle::random_stable(rng, d, 0.3 + 0.06 * rep);
        const BetaBound b = beta_bound(A);
        for (long t : {1L, 3L, 10L, 30L}) {
            const Matrix G0 = gram_noise(A, t);
            const Matrix G1 = gram_noise(A, t + 1);
            CHECK(oracle::min_eig(G1 - G0) >= -1e-10);
            CHECK(oracle::min_eig(G0 - Matrix::Identity(d, d)) >= -1e-10);
            const Matrix G2 = gram_noise(A, t + 40);
            const double bound = b.beta * b.beta * std::pow(b.rho_bar, 2.0 * t) / (1.0 - b.rho_bar * b.rho_bar);
            CHECK(oracle::spec_norm(G2 - G0) <= bound * (1.0 + 1e-9) + 1e-12);
        }
    }
}

TEST_CASE("simulate examples") {
    const NoiseModel quiet{0.0, 0.0};
    SUBCASE("A = 0, B = I, u = e1") {
        const LinSys sys(Matrix::Zero(2, 2), Matrix::Identity(2, 2));
        const auto   tr = simulate(sys, quiet, [](long) { return Vector(Vector::Unit(2, 0)); }, 5, Vector::Zero(2), 1);
        for (long t = 1; t <= 5; ++t) CHECK(tr.states.col(t).isApprox(Vector::Unit(2, 0)));
        CHECK(tr.states.cols() == tr.inputs.cols() + 1);
    }
    SUBCASE("scalar geometric sum") {
        const LinSys sys(Matrix::Constant(1, 1, 0.5), Matrix::Identity(1, 1));
        const auto   tr = simulate(sys, quiet, [](long) { return Vector(Vector::Ones(1)); }, 3, Vector::Zero(1), 1);
        CHECK(tr.states(0, 1) == doctest::Approx(1.0));
        CHECK(tr.states(0, 2) == doctest::Approx(1.5));
        CHECK(tr.states(0, 3) == doctest::Approx(1.75));
    }
    SUBCASE("replay is bit exact") {
        RandomStream rng(9, "test");
        const LinSys sys(oracle::random_stable(rng, 3, 0.8), oracle::gaussian(rng, 3, 2));
        const NoiseModel nm{1.0, 0.5};
        const auto       a = simulate(sys, nm, {}, 200, Vector::Zero(3), 42);
        const auto       b = simulate(sys, nm, {}, 200, Vector::Zero(3), 42);
        const auto       c = simulate(sys, nm, {}, 200, Vector::Zero(3), 43);
        CHECK(a.states == b.states);
        CHECK(a.inputs == b.inputs);
        CHECK(a.states != c.states);
    }
    SUBCASE("noiseless zero input gives A^t x0") {
        RandomStream rng(4, "test");
        const Matrix A  = oracle::random_stable(rng, 4, 0.95);
        const Vector x0 = oracle::gaussian(rng, 4, 1);
        const auto   tr = simulate(LinSys(A, Matrix::Identity(4, 1)), quiet, {}, 50, x0, 3);
        Vector       x  = x0;
        for (long t = 0; t <= 50; ++t) {
            CHECK((tr.states.col(t) - x).norm() <= 1e-12 * std::max(1.0, x.norm()));
            x = A * x;
        }
    }
    SUBCASE("signal dimension mismatch") {
        const LinSys sys(Matrix::Zero(2, 2), Matrix::Identity(2, 2));
        CHECK_THROWS_AS(simulate(sys, quiet, [](long) { return Vector(Vector::Ones(3)); }, 3, Vector::Zero(2), 1),
                        DimensionError);
    }
}

TEST_CASE("process and input noise streams are independent of the input signal") {
    const LinSys     sys(Matrix::Constant(1, 1, 0.5), Matrix::Identity(1, 1));
    const NoiseModel nm{1.0, 1.0};
    const auto       a = simulate(sys, nm, {}, 100, Vector::Zero(1), 8);
    const auto       b = simulate(sys, nm, [](long t) { return Vector(Vector::Constant(1, std::sin(0.3 * t))); }, 100,
                                  Vector::Zero(1), 8);
    CHECK(a.process_noise == b.process_noise);
}

TEST_CASE("Monte-Carlo state covariance matches sigma^2 Gamma_t") {
    const Matrix A     = jordan(2, 0.7);
    const LinSys sys(A, Matrix::Identity(2, 2));
    const double sigma = 0.8;
    const long   t     = 12;
    const int    n     = 20000;
    Matrix       acc   = Matrix::Zero(2, 2);
    for (int i = 0; i < n; ++i) {
        const auto tr = simulate(sys, NoiseModel{sigma, 0.0}, {}, t, Vector::Zero(2), trial_seed(77, i));
        acc += tr.states.col(t) * tr.states.col(t).transpose();
    }
    acc /= n;
    const Matrix expect = sigma * sigma * gram_noise(A, t);
    CHECK(oracle::spec_norm(acc - expect) <= 0.05 * oracle::spec_norm(expect));
}
