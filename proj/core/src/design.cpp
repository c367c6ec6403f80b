#include "activeid/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "activeid/errors.hpp"
#include "activeid/lds.hpp"
#include "activeid/rng.hpp"
#include "spectraplex.hpp"

namespace activeid {
namespace {

using detail::min_eigenvalue;

double max_eigenvalue(const Matrix& S) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(es.eigenvalues().size() - 1);
}

void require_stable(const Matrix& A, const char* where) {
    const double rho = spectral_radius(A);
    if (!(rho < 1.0)) throw StabilityError(std::string(where) + ": spectral radius " + std::to_string(rho) + " >= 1");
}

bool self_conjugate(int ell, int k) { return ell == k || 2 * ell == k; }

// One design variable: a frequency l together with its mirror k - l. The block P
// (Hermitian, real when self-conjugate) carries power tr P and contributes
// weight * Re(G_l P G_l^H) to the covariates.
struct Slot {
    int     ell;
    bool    self_conj;
    CMatrix G;
};

std::vector<Slot> build_slots(const DesignProblem& pr) {
    std::vector<bool> in(static_cast<std::size_t>(pr.k) + 1, false);
    for (int ell : pr.support) in[static_cast<std::size_t>(ell)] = true;
    std::vector<Slot> slots;
    for (int ell = 1; ell <= pr.k; ++ell) {
        if (!in[static_cast<std::size_t>(ell)]) continue;
        if (ell == pr.k && pr.zero_mean) continue;
        const int mirror = (ell == pr.k) ? pr.k : pr.k - ell;
        if (mirror < ell) continue;  // handled with its partner
        if (!in[static_cast<std::size_t>(mirror)]) continue;  // a lone half of a pair cannot carry a real signal
        Slot s{ell, self_conjugate(ell, pr.k), transfer(pr.A_hat, pr.B, grid_angle(ell, pr.k))};
        if (s.self_conj) s.G = s.G.real().cast<Complex>();
        slots.push_back(std::move(s));
    }
    return slots;
}

class DesignOracle final : public detail::BlockOracle {
   public:
    DesignOracle(const std::vector<Slot>& slots, int p, double weight) : slots_(slots), p_(p), weight_(weight) {}

    int slots() const override { return static_cast<int>(slots_.size()); }
    int block_dim() const override { return p_; }

    detail::Vertex best_vertex(const Matrix& Vw) const override {
        const CMatrix Vc = Vw.cast<Complex>();
        const int     n  = slots();
        std::vector<CMatrix> Z(static_cast<std::size_t>(n));
        std::vector<std::pair<double, int>> bound(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) {
            Z[static_cast<std::size_t>(j)]     = slots_[static_cast<std::size_t>(j)].G.adjoint() * Vc;
            bound[static_cast<std::size_t>(j)] = {Z[static_cast<std::size_t>(j)].squaredNorm(), j};
        }
        // ||Z||_F^2 bounds lambda_max(Z Z^H); visit slots by decreasing bound.
        std::sort(bound.begin(), bound.end(), [](const auto& a, const auto& b) {
            return a.first > b.first || (a.first == b.first && a.second < b.second);
        });
        detail::Vertex best;
        best.value = -1.0;
        for (const auto& [ub, j] : bound) {
            if (ub * weight_ <= best.value * (1.0 + 1e-12)) break;
            const CMatrix& z = Z[static_cast<std::size_t>(j)];
            double         val;
            CVector        q;
            if (z.cols() == 1) {
                val = ub;
                q   = (ub > 0.0) ? CVector(z.col(0) / std::sqrt(ub)) : CVector::Unit(p_, 0);
            } else {
                CMatrix K = z * z.adjoint();
                if (slots_[static_cast<std::size_t>(j)].self_conj) K = K.real().cast<Complex>();
                Eigen::SelfAdjointEigenSolver<CMatrix> es(K);
                val = es.eigenvalues()(p_ - 1);
                q   = es.eigenvectors().col(p_ - 1);
            }
            if (slots_[static_cast<std::size_t>(j)].self_conj) {
                Vector r = q.real();
                if (r.norm() < 1e-8) r = q.imag();
                q = (r / r.norm()).cast<Complex>();
            }
            val *= weight_;
            if (val > best.value) best = {j, q, val};
        }
        return best;
    }

    Matrix image(int slot, const CVector& q) const override {
        const CVector g = slots_[static_cast<std::size_t>(slot)].G * q;
        return weight_ * (g * g.adjoint()).real();
    }

   private:
    const std::vector<Slot>& slots_;
    int                      p_;
    double                   weight_;
};

// Rank-one design: one vector per slot (empty = unused). A pair slot with vector u
// plays U_l = k u / sqrt(2), U_{k-l} = conj(U_l); a self-conjugate slot plays U_l = k u
// with u real. Either way the power is ||u||^2 and the covariates gain Re(G u u^H G^H).
using SlotVectors = std::vector<CVector>;

PeriodicInput to_input(const DesignProblem& pr, const std::vector<Slot>& slots, const SlotVectors& u) {
    PeriodicInput in(pr.k, pr.p(), pr.gamma2);
    const double  k = pr.k;
    for (std::size_t j = 0; j < slots.size(); ++j) {
        if (u[j].size() == 0) continue;
        if (slots[j].self_conj) {
            in.set_coeff(slots[j].ell, CVector((k * u[j].real()).cast<Complex>()));
        } else {
            const CVector c = (k / std::sqrt(2.0)) * u[j];
            in.set_coeff(slots[j].ell, c);
            in.set_coeff(pr.k - slots[j].ell, c.conjugate());
        }
    }
    return in;
}

double total_power(const SlotVectors& u) {
    double s = 0.0;
    for (const CVector& v : u) s += v.squaredNorm();
    return s;
}

void normalize_power(SlotVectors& u, double gamma2) {
    const double pw = total_power(u);
    if (pw <= 0.0) return;
    const double f = std::sqrt(gamma2 / pw);
    for (CVector& v : u) v *= f;
}

Matrix covariates(const std::vector<Slot>& slots, const SlotVectors& u, double weight, int d) {
    Matrix X = Matrix::Zero(d, d);
    for (std::size_t j = 0; j < slots.size(); ++j) {
        if (u[j].size() == 0) continue;
        const CVector z = slots[j].G * u[j];
        X.noalias() += (z * z.adjoint()).real();
    }
    return weight * X;
}

// Rotate a unit vector so that its largest entry is real and positive.
CVector dephase(CVector q) {
    Eigen::Index i;
    q.cwiseAbs().maxCoeff(&i);
    if (std::abs(q(i)) > 0.0) q *= std::conj(q(i)) / std::abs(q(i));
    return q;
}

struct Component {
    int     slot;
    double  power;
    CVector q;
};

// Rank-one roundings of lifted Gram blocks. The first keeps each block's top
// component. The second also stores a second component in the imaginary part
// of pair slots, where Re(G u u^H G^H) can hold two real directions, and moves
// the rest to free slots whose response to the same direction is closest.
std::vector<SlotVectors> round_lifted(const DesignProblem& pr, const std::vector<Slot>& slots,
                                      const std::vector<CMatrix>& P) {
    const int                n = static_cast<int>(slots.size());
    const int                p = pr.p();
    SlotVectors              top(static_cast<std::size_t>(n));
    SlotVectors              packed(static_cast<std::size_t>(n));
    std::vector<int>         room(static_cast<std::size_t>(n));
    std::vector<Component>   pool;
    for (int j = 0; j < n; ++j) room[static_cast<std::size_t>(j)] = slots[static_cast<std::size_t>(j)].self_conj ? 1 : 2;

    auto add_to = [&](int j, const Component& c) {
        CVector& u = packed[static_cast<std::size_t>(j)];
        const CVector q = dephase(c.q);
        if (u.size() == 0) u = std::sqrt(c.power) * q;
        else u += Complex(0.0, std::sqrt(c.power)) * q;
        --room[static_cast<std::size_t>(j)];
    };

    for (int j = 0; j < n; ++j) {
        const CMatrix& blk0 = P[static_cast<std::size_t>(j)];
        if (blk0.size() == 0 || blk0.trace().real() <= 0.0) continue;
        const CMatrix blk = slots[static_cast<std::size_t>(j)].self_conj ? CMatrix(blk0.real().cast<Complex>()) : blk0;
        Eigen::SelfAdjointEigenSolver<CMatrix> es(blk);
        const double tot = std::max(0.0, es.eigenvalues().sum());
        for (int i = p - 1; i >= 0; --i) {
            const double lam = es.eigenvalues()(i);
            if (lam <= 1e-9 * tot) break;
            const Component c{j, lam, es.eigenvectors().col(i)};
            if (i == p - 1) top[static_cast<std::size_t>(j)] = std::sqrt(lam) * dephase(c.q);
            if (room[static_cast<std::size_t>(j)] > 0) add_to(j, c);
            else pool.push_back(c);
        }
    }
    std::vector<SlotVectors> out{top};
    std::sort(pool.begin(), pool.end(), [](const Component& a, const Component& b) { return a.power > b.power; });
    for (const Component& c : pool) {
        const CVector g0     = slots[static_cast<std::size_t>(c.slot)].G * c.q;
        const Matrix  target = (g0 * g0.adjoint()).real();
        int           best   = -1;
        double        err    = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
            if (room[static_cast<std::size_t>(j)] <= 0) continue;
            const CVector g = slots[static_cast<std::size_t>(j)].G * c.q;
            const double  e = ((g * g.adjoint()).real() - target).norm();
            if (e < err) err = e, best = j;
        }
        if (best < 0) break;
        add_to(best, c);
    }
    out.push_back(packed);
    for (SlotVectors& u : out) normalize_power(u, pr.gamma2);
    return out;
}

// Riemannian gradient ascent of the soft-min objective over the slot vectors
// on the sphere sum ||u_j||^2 = gamma2. Unused slots stay unused.
SlotVectors polish(const DesignProblem& pr, const std::vector<Slot>& slots, SlotVectors u, const Matrix& base,
                   int max_iters, double& best_value) {
    const int    d     = pr.d();
    const double w     = pr.horizon_weight;
    auto         value = [&](const SlotVectors& v) -> Matrix { return covariates(slots, v, w, d) + base; };
    Matrix       F     = value(u);
    best_value         = min_eigenvalue(F);
    SlotVectors  best  = u;
    const double scale = std::max({1.0, std::abs(best_value), max_eigenvalue(F)});
    const double logd  = std::log(static_cast<double>(d));
    const double mu_min = 1e-11 * scale;
    double       mu     = (d > 1) ? std::max(mu_min, 1e-3 * scale / logd) : mu_min;
    double       t      = 0.1;
    const double radius = std::sqrt(pr.gamma2);

    for (int it = 0; it < max_iters; ++it) {
        const detail::SoftMin sm = detail::soft_min(F, mu, true);
        const Matrix          W  = sm.Vw * sm.Vw.transpose();
        SlotVectors           g(u.size());
        double                along = 0.0;
        for (std::size_t j = 0; j < u.size(); ++j) {
            if (u[j].size() == 0) continue;
            const CVector z = slots[j].G * u[j];
            g[j]            = 2.0 * w * (slots[j].G.adjoint() * (W.cast<Complex>() * z));
            if (slots[j].self_conj) g[j] = g[j].real().cast<Complex>();
            along += (u[j].dot(g[j])).real();
        }
        double gn = 0.0;
        for (std::size_t j = 0; j < u.size(); ++j) {
            if (u[j].size() == 0) continue;
            g[j] -= (along / pr.gamma2) * u[j];
            gn += g[j].squaredNorm();
        }
        gn = std::sqrt(gn);
        bool accepted = false;
        if (gn > 1e-300) {
            while (t > 1e-12) {
                SlotVectors trial = u;
                for (std::size_t j = 0; j < u.size(); ++j) {
                    if (u[j].size() != 0) trial[j] += (t * radius / gn) * g[j];
                }
                normalize_power(trial, pr.gamma2);
                const Matrix Ft = value(trial);
                if (detail::soft_min(Ft, mu, false).value > sm.value) {
                    u = std::move(trial);
                    F = Ft;
                    t = std::min(1.0, 1.5 * t);
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
        }
        if (accepted) {
            const double exact = min_eigenvalue(F);
            if (exact > best_value) best_value = exact, best = u;
        } else {
            if (mu <= mu_min) break;
            mu = std::max(mu_min, 0.25 * mu);
            t  = 0.1;
        }
    }
    return best;
}

std::vector<detail::Atom> random_start(const std::vector<Slot>& slots, const DesignOracle& oracle, int p,
                                       double budget, RandomStream& rng) {
    const int j = static_cast<int>(rng.uniform() * static_cast<double>(slots.size())) %
                  static_cast<int>(slots.size());
    CVector q(p);
    for (int i = 0; i < p; ++i) {
        const double re = rng.gaussian();
        const double im = slots[static_cast<std::size_t>(j)].self_conj ? 0.0 : rng.gaussian();
        q(i)            = Complex(re, im);
    }
    q /= q.norm();
    return {detail::Atom{j, q, 1.0, budget * oracle.image(j, q)}};
}

}  // namespace

void DesignProblem::validate() const {
    if (A_hat.rows() != A_hat.cols() || A_hat.rows() < 1) throw DimensionError("DesignProblem: A_hat not square");
    if (B.rows() != A_hat.rows() || B.cols() < 1) throw DimensionError("DesignProblem: B has wrong shape");
    if (past_cov.rows() != A_hat.rows() || past_cov.cols() != A_hat.rows()) {
        throw DimensionError("DesignProblem: past_cov has wrong shape");
    }
    if (!(gamma2 > 0.0)) throw FeasibilityError("DesignProblem: gamma2 must be positive");
    if (k < 1) throw DimensionError("DesignProblem: period must be positive");
    if (!(horizon_weight >= 0.0)) throw FeasibilityError("DesignProblem: negative horizon weight");
    if (support.empty()) throw FeasibilityError("DesignProblem: empty frequency support");
    for (int ell : support) {
        if (ell < 1 || ell > k) throw DimensionError("DesignProblem: support index out of 1..k");
    }
    const double scale = std::max(1.0, past_cov.cwiseAbs().maxCoeff());
    if ((past_cov - past_cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
        throw FeasibilityError("DesignProblem: past_cov not symmetric");
    }
    if (min_eigenvalue(0.5 * (past_cov + past_cov.transpose())) < -1e-9 * scale) {
        throw FeasibilityError("DesignProblem: past_cov not positive semidefinite");
    }
}

std::vector<int> all_frequencies(int k) {
    std::vector<int> out(static_cast<std::size_t>(std::max(k, 0)));
    std::iota(out.begin(), out.end(), 1);
    return out;
}

void check_feasible(const DesignProblem& pr, const PeriodicInput& input, double tol) {
    if (input.k() != pr.k) throw FeasibilityError("input period does not match the problem");
    if (input.p() != pr.p()) throw FeasibilityError("input dimension does not match B");
    if (input.power() > pr.gamma2 * (1.0 + tol)) {
        throw FeasibilityError("power constraint violated: " + std::to_string(input.power()) + " > " +
                               std::to_string(pr.gamma2));
    }
    const double scale = std::max(1.0, input.coeffs().cwiseAbs().maxCoeff());
    if (input.conjugate_asymmetry() > tol * scale) throw FeasibilityError("conjugate symmetry violated");
    if (pr.zero_mean && input.coeff(pr.k).norm() > tol * scale) throw FeasibilityError("zero-mean (DC) constraint violated");
    std::vector<bool> in(static_cast<std::size_t>(pr.k) + 1, false);
    for (int ell : pr.support) in[static_cast<std::size_t>(ell)] = true;
    for (int ell = 1; ell <= pr.k; ++ell) {
        if (!in[static_cast<std::size_t>(ell)] && input.coeff(ell).norm() > tol * scale) {
            throw FeasibilityError("support constraint violated at frequency " + std::to_string(ell));
        }
    }
}

double objective(const DesignProblem& pr, const PeriodicInput& input) {
    pr.validate();
    check_feasible(pr, input);
    const Matrix F = pr.horizon_weight * gamma_tilde(pr.A_hat, pr.B, input) + pr.past_cov;
    return min_eigenvalue(0.5 * (F + F.transpose()));
}

DesignResult opt_input(const DesignProblem& pr, std::uint64_t seed, const DesignOptions& options) {
    pr.validate();
    require_stable(pr.A_hat, "opt_input");
    const std::vector<Slot> slots = build_slots(pr);
    if (slots.empty()) throw FeasibilityError("opt_input: support has no usable frequency");
    const int    p    = pr.p();
    const Matrix base = 0.5 * (pr.past_cov + pr.past_cov.transpose());
    DesignOracle oracle(slots, p, pr.horizon_weight);

    detail::SpectraplexOptions so;
    so.max_iters    = options.max_iters;
    so.stall_tol    = options.stall_tol;
    so.stall_window = options.stall_window;

    const double floor_value = min_eigenvalue(base);
    DesignResult best;
    bool         have = false;
    for (int r = 0; r < std::max(1, options.restarts); ++r) {
        RandomStream rng(seed, streams::kDesign, static_cast<std::uint64_t>(r));
        const double scale = std::max({1.0, std::abs(floor_value), pr.horizon_weight * pr.gamma2});
        so.gap_tol         = 1e-9 * scale;
        auto lifted = detail::spectraplex_ascent(oracle, base, pr.gamma2, random_start(slots, oracle, p, pr.gamma2, rng), so);

        DesignResult res;
        bool         placed = false;
        for (SlotVectors& cand : round_lifted(pr, slots, lifted.blocks(static_cast<int>(slots.size()), p, pr.gamma2))) {
            double            val = 0.0;
            const SlotVectors u   = polish(pr, slots, std::move(cand), base, options.polish_iters, val);
            if (!placed || val > res.objective) {
                res.input     = to_input(pr, slots, u);
                res.objective = val;
                placed        = true;
            }
        }
        res.objective = objective(pr, res.input);
        res.lifted_objective = lifted.objective;
        res.truncation_loss  = std::max(0.0, lifted.objective - res.objective);
        res.gap_bound        = lifted.gap_bound;
        res.iterations       = lifted.iterations;
        res.trace            = std::move(lifted.trace);
        res.degenerate       = res.objective <= floor_value + 1e-12 * scale;
        if (!have || res.objective > best.objective) {
            best = std::move(res);
            have = true;
        }
    }
    return best;
}

bool DirectionEllipsoid::contains(const Vector& w, double tol) const {
    const double n2 = w.squaredNorm();
    if (std::abs(n2 - 1.0) > 1e-9) return false;
    return w.dot(Q * w) <= threshold + tol * std::max(1.0, std::abs(threshold));
}

bool frequency_certified(const Matrix& A, int ell, int k, double eps) {
    const CMatrix R = resolvent(A, grid_angle(ell, k));
    Eigen::JacobiSVD<CMatrix> svd(R);
    return eps * 4.0 * svd.singularValues()(0) <= 1.0;
}

namespace {

struct FreqData {
    int     ell;
    double  r_norm;   // ||R||
    double  rb_norm;  // ||R B||
    Matrix  RR;       // Re(R R^H)
    Matrix  GG;       // Re(G G^H)
};

std::vector<FreqData> frequency_data(const Matrix& A, const Matrix& B, int k) {
    std::vector<FreqData> out;
    for (int ell = 1; ell <= k; ++ell) {
        const CMatrix R = resolvent(A, grid_angle(ell, k));
        const CMatrix G = R * B.cast<Complex>();
        FreqData f;
        f.ell     = ell;
        f.r_norm  = Eigen::JacobiSVD<CMatrix>(R).singularValues()(0);
        f.rb_norm = Eigen::JacobiSVD<CMatrix>(G).singularValues()(0);
        f.RR      = (R * R.adjoint()).real();
        f.GG      = (G * G.adjoint()).real();
        out.push_back(std::move(f));
    }
    return out;
}

double max_over(const std::vector<Matrix>& Ps, const Vector& w) {
    double m = -std::numeric_limits<double>::infinity();
    for (const Matrix& P : Ps) m = std::max(m, w.dot(P * w));
    return m;
}

// Upper bound on min_{|w|=1} max_l w^T P_l w: eigenvector candidates, then descent.
double minmax_quadratics(const std::vector<Matrix>& Ps, const Matrix& Q) {
    const int           d = static_cast<int>(Q.rows());
    std::vector<Vector> cands;
    {
        Eigen::SelfAdjointEigenSolver<Matrix> es(Q);
        for (int i = 0; i < d; ++i) cands.push_back(es.eigenvectors().col(i));
    }
    for (const Matrix& P : Ps) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(P);
        cands.push_back(es.eigenvectors().col(0));
    }
    Vector w    = cands.front();
    double best = max_over(Ps, w);
    for (const Vector& c : cands) {
        const double v = max_over(Ps, c);
        if (v < best) best = v, w = c;
    }
    double step = 0.5;
    for (int it = 0; it < 500 && step > 1e-12; ++it) {
        int    arg = 0;
        double m   = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < Ps.size(); ++i) {
            const double v = w.dot(Ps[i] * w);
            if (v > m) m = v, arg = static_cast<int>(i);
        }
        Vector g = 2.0 * Ps[static_cast<std::size_t>(arg)] * w;
        g -= w.dot(g) * w;  // tangent component
        if (g.norm() < 1e-15) break;
        Vector       trial = w - step * g / g.norm();
        trial.normalize();
        const double v     = max_over(Ps, trial);
        if (v < best) {
            best = v;
            w    = trial;
            step *= 1.5;
        } else {
            step *= 0.5;
        }
    }
    return best;
}

}  // namespace

std::optional<DirectionEllipsoid> direction_set(const GatingContext& ctx) {
    const int d = static_cast<int>(ctx.A_hat.rows());
    if (ctx.traj_cov.rows() != d || ctx.traj_cov.cols() != d) throw DimensionError("direction_set: traj_cov shape");
    if (ctx.k < 1) throw DimensionError("direction_set: period must be positive");
    const double horizon = 2.0 * static_cast<double>(ctx.T) + static_cast<double>(ctx.T0);
    if (!(horizon > 0.0)) throw DimensionError("direction_set: 2T + T0 must be positive");

    DirectionEllipsoid set;
    set.Q = (static_cast<double>(ctx.k) * ctx.k / horizon) * 0.5 * (ctx.traj_cov + ctx.traj_cov.transpose());

    std::vector<Matrix> Ps;
    for (const FreqData& f : frequency_data(ctx.A_hat, ctx.B, ctx.k)) {
        if (!(ctx.eps * 4.0 * f.r_norm <= 1.0)) continue;
        // l and k - l give the same quadratic
        if (f.ell != ctx.k && 2 * f.ell > ctx.k) continue;
        Ps.push_back(set.Q + (4.0 / 3.0) * ctx.gamma2 * f.GG);
    }
    if (Ps.empty()) {
        // mirrors of certified frequencies are certified too, so this is only reached when none is
        return std::nullopt;
    }
    set.threshold = minmax_quadratics(Ps, set.Q);
    return set;
}

double max_quadratic_over(const DirectionEllipsoid& set, const Matrix& K) {
    const int d = static_cast<int>(K.rows());
    if (set.Q.rows() != d) throw DimensionError("max_quadratic_over: shape mismatch");
    const Matrix Ks = 0.5 * (K + K.transpose());
    const Matrix N  = 0.5 * (set.Q + set.Q.transpose()) - set.threshold * Matrix::Identity(d, d);
    const double tol = 1e-12 * std::max(1.0, std::abs(set.threshold));

    if (d == 1) return Ks(0, 0);

    Eigen::SelfAdjointEigenSolver<Matrix> ek(Ks);
    const Vector top = ek.eigenvectors().col(d - 1);
    if (top.dot(N * top) <= tol) return ek.eigenvalues()(d - 1);

    if (d == 2) {
        // Exact: on the circle the maximum sits at a feasible eigenvector or on the boundary w^T N w = 0.
        double              best = -std::numeric_limits<double>::infinity();
        std::vector<Vector> cands;
        for (int i = 0; i < 2; ++i) cands.push_back(ek.eigenvectors().col(i));
        const double a = N(0, 0), b = N(0, 1), e = N(1, 1);
        // w = (1, t): e t^2 + 2 b t + a = 0
        if (std::abs(e) > 1e-300) {
            const double disc = b * b - a * e;
            if (disc >= 0.0) {
                const double s = std::sqrt(disc);
                for (double t : {(-b + s) / e, (-b - s) / e}) cands.push_back(Vector::Unit(2, 0) + t * Vector::Unit(2, 1));
            }
        } else if (std::abs(b) > 1e-300) {
            cands.push_back(Vector::Unit(2, 0) - (a / (2.0 * b)) * Vector::Unit(2, 1));
        }
        if (std::abs(e) <= tol) cands.push_back(Vector::Unit(2, 1));
        for (Vector w : cands) {
            w.normalize();
            if (w.dot(N * w) <= 1e-9 * std::max(1.0, std::abs(set.threshold))) best = std::max(best, w.dot(Ks * w));
        }
        return best;
    }

    // d >= 3: weak dual min_{nu >= 0} lambda_max(K - nu N), exact for d >= 3 by the S-lemma on the sphere.
    auto         h      = [&](double nu) { return max_eigenvalue(Ks - nu * N); };
    const double kscale = std::max(ek.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
    const double nscale = std::max(N.cwiseAbs().maxCoeff(), 1e-300);
    double       hi     = kscale / nscale;
    while (h(2.0 * hi) < h(hi) && hi < 1e300) hi *= 2.0;
    hi *= 2.0;
    constexpr double g  = 0.6180339887498949;
    double           lo = 0.0, up = hi;
    double           c1 = up - g * (up - lo), c2 = lo + g * (up - lo);
    double           f1 = h(c1), f2 = h(c2);
    for (int it = 0; it < 120; ++it) {
        if (f1 > f2) {
            lo = c1, c1 = c2, f1 = f2, c2 = lo + g * (up - lo), f2 = h(c2);
        } else {
            up = c2, c2 = c1, f2 = f1, c1 = up - g * (up - lo), f1 = h(c1);
        }
    }
    return std::min({f1, f2, h(0.0)});
}

EligibleSet eligible_frequencies(const GatingContext& ctx, std::uint64_t seed, const DesignOptions& options) {
    EligibleSet out;
    if (ctx.eps == 0.0) {
        out.support         = all_frequencies(ctx.k);
        out.all_frequencies = true;
        return out;
    }
    if (!(ctx.eps > 0.0)) return out;  // infinite or NaN radius: nothing is certified
    const auto set = direction_set(ctx);
    if (!set) return out;

    const double          horizon = 2.0 * static_cast<double>(ctx.T) + static_cast<double>(ctx.T0);
    const double          factor  = (32.0 / 3.0) * ctx.eps * horizon * ctx.gamma2;
    const auto            data    = frequency_data(ctx.A_hat, ctx.B, ctx.k);
    std::vector<bool>     certified(data.size());
    std::vector<double>   f(data.size());
    bool                  all_certified = true;
    double                f_max         = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        certified[i] = ctx.eps * 4.0 * data[i].r_norm <= 1.0;
        all_certified = all_certified && certified[i];
        f[i] = factor * max_quadratic_over(*set, data[i].RR) * data[i].rb_norm * data[i].rb_norm / data[i].r_norm;
        f_max = std::max(f_max, f[i]);
    }

    if (all_certified) {
        DesignProblem pr{ctx.A_hat, ctx.B, 0.5 * ctx.gamma2, ctx.k, all_frequencies(ctx.k), ctx.traj_cov, horizon, true};
        const double  opt = opt_input(pr, seed, options).objective;
        if (f_max <= opt) {
            out.support         = all_frequencies(ctx.k);
            out.all_frequencies = true;
            return out;
        }
    }
    const double lam = min_eigenvalue(0.5 * (ctx.traj_cov + ctx.traj_cov.transpose()));
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (certified[i] && f[i] <= lam) out.support.push_back(data[i].ell);
    }
    return out;
}

std::string to_string(PlanMode mode) {
    switch (mode) {
        case PlanMode::FiniteTime: return "ft";
        case PlanMode::Asymptotic: return "asymptotic";
        case PlanMode::Greedy: return "greedy";
    }
    return "greedy";
}

PlanMode plan_mode_from_string(const std::string& s) {
    if (s == "ft" || s == "finite_time" || s == "FT") return PlanMode::FiniteTime;
    if (s == "asymptotic" || s == "Asymptotic") return PlanMode::Asymptotic;
    if (s == "greedy" || s == "Greedy") return PlanMode::Greedy;
    throw ConfigError("unknown planning mode '" + s + "'");
}

UpdateResult update_inputs(const UpdateRequest& req, std::uint64_t seed) {
    const GatingContext& g = req.gate;
    const int            p = static_cast<int>(g.B.cols());
    const int            d = static_cast<int>(g.A_hat.rows());
    if (g.B.rows() != d || g.A_hat.cols() != d) throw DimensionError("update_inputs: dimension mismatch");
    if (!(g.gamma2 > 0.0)) throw FeasibilityError("update_inputs: gamma2 must be positive");

    UpdateResult out;
    out.sigma_u2 = req.sigma_u2.value_or(g.gamma2 / (2.0 * p));
    if (out.sigma_u2 < 0.0) throw FeasibilityError("update_inputs: negative exploration variance");
    const double budget = g.gamma2 - p * out.sigma_u2;
    out.input           = PeriodicInput(g.k, p, std::max(budget, 0.0));

    if (!(spectral_radius(g.A_hat) < 1.0)) {
        out.fallback_unstable = true;
        return out;
    }
    if (!(budget > 0.0)) return out;

    if (req.mode == PlanMode::Greedy) {
        out.support         = all_frequencies(g.k);
        out.all_frequencies = true;
    } else {
        EligibleSet el      = eligible_frequencies(g, seed, req.options);
        out.support         = std::move(el.support);
        out.all_frequencies = el.all_frequencies;
    }
    if (out.support.empty()) return out;

    const double horizon = 2.0 * static_cast<double>(g.T) + static_cast<double>(g.T0);
    Matrix       past    = 0.5 * (g.traj_cov + g.traj_cov.transpose());
    if (req.mode == PlanMode::Asymptotic) past = horizon * req.sigma2 * gram_noise(g.A_hat, g.k);

    DesignProblem pr{g.A_hat, g.B, budget, g.k, out.support, past, horizon, true};
    // Eligible sets may consist of lone halves of conjugate pairs only.
    try {
        out.design = opt_input(pr, seed, req.options);
    } catch (const FeasibilityError&) {
        out.support.clear();
        out.all_frequencies = false;
        return out;
    }
    out.input   = out.design->input;
    out.problem = std::move(pr);
    return out;
}

namespace {

class NoiseOracle final : public detail::BlockOracle {
   public:
    // vec(sum_s C_s S C_s^T) = M vec(S) with C_s = A^s B.
    NoiseOracle(const Matrix& A, const Matrix& B, long K)
        : d_(static_cast<int>(A.rows())), p_(static_cast<int>(B.cols())), M_(Matrix::Zero(d_ * d_, p_ * p_)) {
        Matrix C = B;
        for (long s = 0; s < K; ++s) {
            for (int b = 0; b < p_; ++b)
                for (int a = 0; a < p_; ++a) {
                    // column (a, b) of the map is vec(C e_a e_b^T C^T) = vec(c_a c_b^T)
                    Eigen::Map<Matrix> col(M_.col(a + b * p_).data(), d_, d_);
                    col.noalias() += C.col(a) * C.col(b).transpose();
                }
            C = A * C;
        }
    }

    int slots() const override { return 1; }
    int block_dim() const override { return p_; }

    detail::Vertex best_vertex(const Matrix& Vw) const override {
        const Matrix W  = Vw * Vw.transpose();
        const Vector mv = M_.transpose() * Eigen::Map<const Vector>(W.data(), d_ * d_);
        Matrix       G  = Eigen::Map<const Matrix>(mv.data(), p_, p_);
        G               = 0.5 * (G + G.transpose());
        Eigen::SelfAdjointEigenSolver<Matrix> es(G);
        return {0, es.eigenvectors().col(p_ - 1).cast<Complex>(), es.eigenvalues()(p_ - 1)};
    }

    Matrix image(int, const CVector& q) const override {
        const Vector qr = q.real();
        return image_cov(qr * qr.transpose());
    }

    Matrix image_cov(const Matrix& S) const {
        const Vector x = M_ * Eigen::Map<const Vector>(S.data(), p_ * p_);
        Matrix       X = Eigen::Map<const Matrix>(x.data(), d_, d_);
        return 0.5 * (X + X.transpose());
    }

   private:
    int    d_, p_;
    Matrix M_;
};

}  // namespace

double noise_objective(const Matrix& A, const Matrix& B, const Matrix& cov, double sigma2, long K) {
    if (cov.rows() != B.cols() || cov.cols() != B.cols()) throw DimensionError("noise_objective: cov shape");
    if (K < 1) throw DimensionError("noise_objective: horizon must be positive");
    NoiseOracle oracle(A, B, K);
    return min_eigenvalue(sigma2 * gram_noise(A, K) + oracle.image_cov(cov));
}

NoiseDesign optimal_noise_cov(const Matrix& A, const Matrix& B, double gamma2, double sigma2, long K,
                              const NoiseDesignOptions& options) {
    if (A.rows() != A.cols() || B.rows() != A.rows()) throw DimensionError("optimal_noise_cov: dimension mismatch");
    require_stable(A, "optimal_noise_cov");
    if (!(gamma2 > 0.0)) throw FeasibilityError("optimal_noise_cov: gamma2 must be positive");
    if (K <= 0) K = truncation_horizon(A);
    const int    p = static_cast<int>(B.cols());
    NoiseOracle  oracle(A, B, K);
    const Matrix base = sigma2 * gram_noise(A, K);

    std::vector<detail::Atom> start;
    for (int i = 0; i < p; ++i) {
        const CVector q = CVector::Unit(p, i);
        start.push_back({0, q, 1.0 / p, gamma2 * oracle.image(0, q)});
    }

    detail::SpectraplexOptions so;
    so.max_iters    = options.max_iters;
    so.gap_tol      = options.gap_tol * gamma2;
    so.stall_tol    = 0.0;
    so.stall_window = options.max_iters + 1;
    auto res        = detail::spectraplex_ascent(oracle, base, gamma2, std::move(start), so);

    NoiseDesign out;
    out.cov        = res.blocks(1, p, gamma2)[0].real();
    out.cov        = 0.5 * (out.cov + out.cov.transpose());
    out.objective  = res.objective;
    out.gap        = res.gap_bound;
    out.iterations = res.iterations;
    return out;
}

Matrix hk_matrix(const Matrix& A, const Matrix& B, const PeriodicInput& input, const std::vector<int>& support) {
    const int d = static_cast<int>(A.rows());
    CMatrix   H = CMatrix::Zero(d, d);
    for (int ell : support) {
        if (ell < 1 || ell > input.k()) throw DimensionError("hk_matrix: support index out of range");
        const CVector x = transfer(A, B, grid_angle(ell, input.k())) * input.coeff(ell);
        H.noalias() += x * x.adjoint();
    }
    const Matrix R = H.real();
    return 0.5 * (R + R.transpose());
}

double hk_directional_derivative(const Matrix& A, const Matrix& B, const PeriodicInput& input,
                                 const std::vector<int>& support, const Vector& w, const Matrix& delta) {
    if (delta.rows() != A.rows() || delta.cols() != A.cols()) throw DimensionError("hk_directional_derivative: Delta shape");
    if (w.size() != A.rows()) throw DimensionError("hk_directional_derivative: w shape");
    const CMatrix Dc = delta.cast<Complex>();
    const CVector wc = w.cast<Complex>();
    double        acc = 0.0;
    for (int ell : support) {
        if (ell < 1 || ell > input.k()) throw DimensionError("hk_directional_derivative: support index out of range");
        const CMatrix R  = resolvent(A, grid_angle(ell, input.k()));
        const CVector x  = R * (B.cast<Complex>() * input.coeff(ell));  // R B U
        const Complex c  = wc.transpose() * x;                           // w^T R B U
        const Complex a  = wc.transpose() * (R * (Dc * x));              // w^T R Delta R B U
        acc += (a * std::conj(c)).real();
    }
    return 2.0 * acc;
}

double lower_bound_rate(const Matrix& A, const Matrix& B, double sigma2, double gamma2, long K, int k,
                        std::uint64_t seed, const DesignOptions& options) {
    require_stable(A, "lower_bound_rate");
    if (K <= 0) K = truncation_horizon(A);
    if (k <= 0) {
        k = 64;
        while (k < K && k < 1024) k *= 2;
    }
    DesignProblem pr{A, B, gamma2, k, all_frequencies(k), sigma2 * gram_noise(A, K), 1.0, false};
    return opt_input(pr, seed, options).objective;
}

double epsilon_s(const GatingContext& ctx, long epoch_length, std::uint64_t seed, const DesignOptions& options) {
    GatingContext all = ctx;
    all.eps           = 0.0;
    const auto   set  = direction_set(all);
    const double horizon = 2.0 * static_cast<double>(ctx.T) + static_cast<double>(ctx.T0);
    DesignProblem pr{ctx.A_hat, ctx.B, 0.5 * ctx.gamma2, ctx.k, all_frequencies(ctx.k), ctx.traj_cov, horizon, true};
    const double  opt    = opt_input(pr, seed, options).objective;
    const double  b_norm = Eigen::JacobiSVD<Matrix>(ctx.B).singularValues()(0);
    double        denom  = 0.0;
    double        r_max  = 0.0;
    for (const FreqData& f : frequency_data(ctx.A_hat, ctx.B, ctx.k)) {
        denom = std::max(denom, max_quadratic_over(*set, f.RR) * f.r_norm * b_norm * b_norm);
        r_max = std::max(r_max, f.r_norm);
    }
    const double first = 27.0 / (256.0 * static_cast<double>(epoch_length) * ctx.gamma2) * opt / denom;
    return std::min(first, 1.0 / (5.0 * r_max));
}

}  // namespace activeid
