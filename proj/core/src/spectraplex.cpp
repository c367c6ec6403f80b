#include "spectraplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace activeid::detail {
namespace {

Matrix combine(const std::vector<Atom>& atoms, int d) {
    Matrix X = Matrix::Zero(d, d);
    for (const Atom& a : atoms) X.noalias() += a.weight * a.image;
    return X;
}

// argmax over eta in [0, hi] of a concave function, by golden section plus the endpoint.
template <class F>
std::pair<double, double> line_search(F&& phi, double hi) {
    constexpr double g = 0.6180339887498949;
    double           a = 0.0, b = hi;
    double           c1 = b - g * (b - a), c2 = a + g * (b - a);
    double           f1 = phi(c1), f2 = phi(c2);
    for (int ls = 0; ls < 40; ++ls) {
        if (f1 < f2) {
            a = c1, c1 = c2, f1 = f2, c2 = a + g * (b - a), f2 = phi(c2);
        } else {
            b = c2, c2 = c1, f2 = f1, c1 = b - g * (b - a), f1 = phi(c1);
        }
    }
    double eta = 0.5 * (a + b), best = phi(eta);
    if (const double f = phi(hi); f >= best) eta = hi, best = f;
    return {eta, best};
}

}  // namespace

double min_eigenvalue(const Matrix& S) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

SoftMin soft_min(const Matrix& F, double mu, bool want_weights) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(F, want_weights ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    const Vector& lam = es.eigenvalues();
    const int     d   = static_cast<int>(lam.size());
    double        s   = 0.0;
    Vector        z(d);
    for (int i = 0; i < d; ++i) {
        z(i) = std::exp(-(lam(i) - lam(0)) / mu);
        s += z(i);
    }
    SoftMin out{lam(0) - mu * std::log(s), lam(0), Matrix()};
    if (!want_weights) return out;
    int r = 0;
    for (int i = 0; i < d; ++i) r += (z(i) / s > 1e-14) ? 1 : 0;
    out.Vw.resize(d, r);
    for (int i = 0, c = 0; i < d; ++i) {
        const double w = z(i) / s;
        if (w > 1e-14) out.Vw.col(c++) = es.eigenvectors().col(i) * std::sqrt(w);
    }
    return out;
}

std::vector<CMatrix> SpectraplexResult::blocks(int slots, int p, double budget) const {
    std::vector<CMatrix> P(static_cast<std::size_t>(slots), CMatrix::Zero(p, p));
    for (const Atom& a : atoms) P[static_cast<std::size_t>(a.slot)] += (budget * a.weight) * (a.q * a.q.adjoint());
    return P;
}

SpectraplexResult spectraplex_ascent(const BlockOracle& oracle, const Matrix& base, double budget,
                                     std::vector<Atom> atoms, const SpectraplexOptions& options) {
    const int d = static_cast<int>(base.rows());
    Matrix    X = combine(atoms, d);

    Eigen::SelfAdjointEigenSolver<Matrix> es0(base + X, Eigen::EigenvaluesOnly);
    const double scale  = std::max({std::abs(es0.eigenvalues()(d - 1)), std::abs(es0.eigenvalues()(0)), 1e-300});
    const double logd   = std::log(static_cast<double>(d));
    const double mu_min = 1e-10 * scale;
    double       mu     = (d > 1) ? std::max(mu_min, 0.05 * scale / logd) : mu_min;

    SpectraplexResult res;
    res.atoms     = atoms;
    res.objective = es0.eigenvalues()(0);
    res.gap_bound = std::numeric_limits<double>::infinity();

    int last_mu_change = 0;
    for (int it = 1; it <= options.max_iters; ++it) {
        const SoftMin sm = soft_min(base + X, mu, true);
        const Vertex  v  = oracle.best_vertex(sm.Vw);
        if (v.slot < 0) break;

        auto         inner = [&](const Matrix& M) { return (sm.Vw.transpose() * M * sm.Vw).trace(); };
        const Matrix Xs    = budget * oracle.image(v.slot, v.q);
        const double gap   = std::max(0.0, budget * v.value - inner(X));
        res.gap_bound      = std::min(res.gap_bound, std::max(0.0, sm.value + gap + mu * logd - res.objective));
        if (res.gap_bound <= options.gap_tol) break;

        // Frank-Wolfe step toward the vertex, or a pairwise step moving mass off the worst atom.
        std::size_t away = 0;
        double      low  = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            const double val = inner(atoms[i].image);
            if (val < low) low = val, away = i;
        }
        const Matrix dfw = Xs - X;
        const auto [eta_fw, f_fw] =
            line_search([&](double e) { return soft_min(base + X + e * dfw, mu, false).value; }, 1.0);
        std::pair<double, double> pw{0.0, -std::numeric_limits<double>::infinity()};
        Matrix                    dpw;
        if (!atoms.empty()) {
            dpw = Xs - atoms[away].image;
            pw  = line_search([&](double e) { return soft_min(base + X + e * dpw, mu, false).value; },
                              atoms[away].weight);
        }
        const bool   use_pw = pw.second > f_fw;
        const double f_new  = use_pw ? pw.second : f_fw;
        const double eta    = use_pw ? pw.first : eta_fw;

        bool moved = false;
        if (f_new > sm.value && eta > 0.0) {
            moved = true;
            if (use_pw) {
                atoms[away].weight -= eta;
                X += eta * dpw;
            } else {
                for (Atom& a : atoms) a.weight *= (1.0 - eta);
                X = (1.0 - eta) * X + eta * Xs;
            }
            bool merged = false;
            for (Atom& a : atoms) {
                if (a.slot == v.slot && std::abs(a.q.dot(v.q)) > 1.0 - 1e-12) {
                    a.weight += eta;
                    merged = true;
                    break;
                }
            }
            if (!merged) atoms.push_back({v.slot, v.q, eta, Xs});
            atoms.erase(std::remove_if(atoms.begin(), atoms.end(), [](const Atom& a) { return a.weight <= 1e-15; }),
                        atoms.end());
            if (it % 50 == 0) X = combine(atoms, d);  // limit drift
        }

        const double exact = min_eigenvalue(base + X);
        if (exact > res.objective) {
            res.objective = exact;
            res.atoms     = atoms;
        }
        res.trace.push_back(res.objective);
        res.iterations = it;

        if ((gap <= mu || !moved) && mu > mu_min) {
            mu             = std::max(mu_min, 0.5 * mu);
            last_mu_change = it;
        }
        const int window = options.stall_window;
        if (it - last_mu_change >= window && static_cast<int>(res.trace.size()) > window) {
            const double old = res.trace[res.trace.size() - 1 - static_cast<std::size_t>(window)];
            if (res.objective - old < options.stall_tol) break;
        }
    }
    return res;
}

}  // namespace activeid::detail
