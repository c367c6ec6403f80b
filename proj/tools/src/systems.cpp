#include "activeid/tools/systems.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "activeid/errors.hpp"
#include "activeid/rng.hpp"

namespace activeid::tools {
namespace {

Matrix gaussian(RandomStream& r, int rows, int cols) {
    Matrix M(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) M(i, j) = r.gaussian();
    return M;
}

void check_rho(double rho, const char* where) {
    if (!(rho >= 0.0 && rho < 1.0))
        throw ConfigError(std::string(where) + ": target spectral radius must lie in [0, 1), got " + std::to_string(rho));
}

Matrix random_orthogonal(RandomStream& r, int d) {
    Eigen::HouseholderQR<Matrix> qr(gaussian(r, d, d));
    Matrix Q = qr.householderQ();
    // fix column signs so Q is Haar distributed and deterministic
    const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < d; ++i)
        if (R(i, i) < 0.0) Q.col(i) = -Q.col(i);
    return Q;
}

}  // namespace

std::string to_string(SystemSpec::Kind kind) {
    switch (kind) {
        case SystemSpec::Kind::Jordan: return "jordan";
        case SystemSpec::Kind::UnitaryDiag: return "unitary_diag";
        case SystemSpec::Kind::RandomStable: return "random_stable";
        case SystemSpec::Kind::BlockDiag: return "block_diag";
        case SystemSpec::Kind::Explicit: return "explicit";
    }
    return "?";
}

SystemSpec::Kind system_kind_from_string(const std::string& s) {
    if (s == "jordan") return SystemSpec::Kind::Jordan;
    if (s == "unitary_diag") return SystemSpec::Kind::UnitaryDiag;
    if (s == "random_stable") return SystemSpec::Kind::RandomStable;
    if (s == "block_diag") return SystemSpec::Kind::BlockDiag;
    if (s == "explicit") return SystemSpec::Kind::Explicit;
    throw ConfigError("unknown system kind '" + s + "'");
}

std::string SystemSpec::describe() const {
    std::ostringstream os;
    os << to_string(kind);
    switch (kind) {
        case Kind::Jordan: os << "(d=" << d << ",rho=" << rho << ")"; break;
        case Kind::RandomStable: os << "(d=" << d << ",rho=" << rho << ",seed=" << seed << ")"; break;
        case Kind::UnitaryDiag: os << "(d=" << lambda.size() << ")"; break;
        case Kind::BlockDiag:
            os << "(";
            for (std::size_t i = 0; i < blocks.size(); ++i) os << (i ? "," : "") << blocks[i].describe();
            os << ")";
            break;
        case Kind::Explicit: os << "(d=" << A.rows() << ")"; break;
    }
    return os.str();
}

Matrix gen_dynamics(const SystemSpec& spec, std::uint64_t seed) {
    switch (spec.kind) {
        case SystemSpec::Kind::Jordan: {
            if (spec.d < 1) throw ConfigError("jordan: d must be positive");
            check_rho(spec.rho, "jordan");
            Matrix A = spec.rho * Matrix::Identity(spec.d, spec.d);
            for (int i = 0; i + 1 < spec.d; ++i) A(i, i + 1) = 1.0;
            return A;
        }
        case SystemSpec::Kind::UnitaryDiag: {
            const int d = static_cast<int>(spec.lambda.size());
            if (d < 1) throw ConfigError("unitary_diag: empty lambda");
            check_rho(spec.lambda.cwiseAbs().maxCoeff(), "unitary_diag");
            RandomStream r(seed ^ spec.seed, streams::kSystem, 1);
            const Matrix V = random_orthogonal(r, d);
            return V * spec.lambda.asDiagonal() * V.transpose();
        }
        case SystemSpec::Kind::RandomStable: {
            if (spec.d < 1) throw ConfigError("random_stable: d must be positive");
            check_rho(spec.rho, "random_stable");
            RandomStream r(seed ^ spec.seed, streams::kSystem, 2);
            const Matrix G   = gaussian(r, spec.d, spec.d);
            const double cur = spectral_radius(G);
            if (cur == 0.0) return Matrix::Zero(spec.d, spec.d);
            return G * (spec.rho / cur);
        }
        case SystemSpec::Kind::BlockDiag: {
            if (spec.blocks.empty()) throw ConfigError("block_diag: no blocks");
            std::vector<Matrix> parts;
            int                 d = 0;
            for (std::size_t i = 0; i < spec.blocks.size(); ++i) {
                parts.push_back(gen_dynamics(spec.blocks[i], RandomStream::derive_key(seed, streams::kSystem, 100 + i)));
                d += static_cast<int>(parts.back().rows());
            }
            Matrix A   = Matrix::Zero(d, d);
            int    off = 0;
            for (const auto& P : parts) {
                A.block(off, off, P.rows(), P.cols()) = P;
                off += static_cast<int>(P.rows());
            }
            return A;
        }
        case SystemSpec::Kind::Explicit: {
            if (spec.A.rows() < 1 || spec.A.rows() != spec.A.cols()) throw ConfigError("explicit: A must be square");
            check_rho(spectral_radius(spec.A), "explicit");
            return spec.A;
        }
    }
    throw ConfigError("unknown system kind");
}

Matrix gen_input_matrix(const InputMatrixSpec& spec, int d, std::uint64_t seed) {
    switch (spec.kind) {
        case InputMatrixSpec::Kind::Identity: return Matrix::Identity(d, d);
        case InputMatrixSpec::Kind::Random: {
            const int    p = spec.p > 0 ? spec.p : d;
            RandomStream r(seed ^ spec.seed, streams::kSystem, 3);
            return gaussian(r, d, p);
        }
        case InputMatrixSpec::Kind::Explicit:
            if (spec.matrix.rows() != d || spec.matrix.cols() < 1)
                throw ConfigError("explicit B must have d = " + std::to_string(d) + " rows");
            return spec.matrix;
    }
    throw ConfigError("unknown input matrix kind");
}

LinSys gen_system(const SystemSpec& spec, std::uint64_t seed) {
    Matrix A = gen_dynamics(spec, seed);
    Matrix B = gen_input_matrix(spec.B, static_cast<int>(A.rows()), seed);
    return LinSys(std::move(A), std::move(B));
}

}  // namespace activeid::tools
