#pragma once

// Frank-Wolfe ascent for
//   maximize lambda_min(base + sum_j L_j(P_j))  s.t.  P_j >= 0,  sum_j tr P_j <= budget,
// where each L_j is a linear PSD-preserving map from Hermitian p x p blocks to real
// symmetric d x d matrices. The iterate is kept as a convex combination of
// rank-one atoms budget * q q^H placed in one block each, which allows pairwise
// (away) steps. lambda_min is replaced by the soft-min
//   f_mu(F) = -mu log tr exp(-F / mu),
// which lies within mu log d below lambda_min, and mu is driven down as the
// Frank-Wolfe gap closes. Internal to the core library.

#include <vector>

#include "activeid/types.hpp"

namespace activeid::detail {

struct Vertex {
    int     slot  = -1;
    CVector q;             // unit vector
    double  value = 0.0;   // q^H L_j^*(W) q
};

class BlockOracle {
   public:
    virtual ~BlockOracle() = default;
    virtual int    slots() const = 0;
    virtual int    block_dim() const = 0;
    // Best rank-one direction against the weight matrix W = Vw Vw^T.
    virtual Vertex best_vertex(const Matrix& Vw) const = 0;
    // L_j(q q^H)
    virtual Matrix image(int slot, const CVector& q) const = 0;
};

struct Atom {
    int     slot;
    CVector q;
    double  weight;  // fraction of the budget
    Matrix  image;   // budget * L_slot(q q^H)
};

struct SpectraplexOptions {
    int    max_iters    = 400;
    double gap_tol      = 1e-9;  // absolute, on the certified gap
    double stall_tol    = 1e-9;  // absolute incumbent gain ...
    int    stall_window = 50;    // ... over this many iterations
};

struct SpectraplexResult {
    std::vector<Atom>   atoms;      // incumbent
    double              objective  = 0.0;  // lambda_min(base + sum of atom images)
    double              gap_bound  = 0.0;  // optimum - objective <= gap_bound
    int                 iterations = 0;
    std::vector<double> trace;

    // Per-slot Gram blocks budget * sum w q q^H.
    std::vector<CMatrix> blocks(int slots, int p, double budget) const;
};

double min_eigenvalue(const Matrix& S);

// Soft-min value and gradient factor (W = Vw Vw^T).
struct SoftMin {
    double value;
    double exact;
    Matrix Vw;
};
SoftMin soft_min(const Matrix& F, double mu, bool want_weights);

SpectraplexResult spectraplex_ascent(const BlockOracle& oracle, const Matrix& base, double budget,
                                     std::vector<Atom> start, const SpectraplexOptions& options);

}  // namespace activeid::detail
