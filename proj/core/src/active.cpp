#include "activeid/active.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "activeid/errors.hpp"
#include "activeid/freq.hpp"

namespace activeid {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

double spectral_norm(const Matrix& M) { return Eigen::JacobiSVD<Matrix>(M).singularValues()(0); }

double realized_power(const Trajectory& seg) {
    return seg.inputs.squaredNorm() / static_cast<double>(seg.steps());
}

void append(std::optional<Trajectory>& whole, const Trajectory& seg) {
    if (!whole) {
        whole = seg;
        return;
    }
    const long T0 = whole->steps();
    const long T1 = seg.steps();
    whole->states.conservativeResize(Eigen::NoChange, T0 + T1 + 1);
    whole->states.rightCols(T1) = seg.states.rightCols(T1);
    whole->inputs.conservativeResize(Eigen::NoChange, T0 + T1);
    whole->inputs.rightCols(T1) = seg.inputs;
    whole->process_noise.conservativeResize(Eigen::NoChange, T0 + T1);
    whole->process_noise.rightCols(T1) = seg.process_noise;
}

struct Fit {
    Estimate est;
    Matrix   B;  // B used for planning
};

Fit fit(const LsAccumulator& acc, const Matrix& B_true, bool joint) {
    Fit f{acc.solve(RankPolicy::Ridge), B_true};
    if (joint) f.B = *f.est.B_hat;
    return f;
}

double radius(const Fit& f, const NoiseModel& noise, const ActiveConfig& cfg, int k, double sigma_u2,
              const Matrix& gt, long T) {
    const int    d = static_cast<int>(f.est.A_hat.rows());
    RadiusInputs in;
    in.A           = f.est.A_hat;
    in.B           = f.B;
    in.k           = k;
    in.sigma2      = noise.sigma_proc * noise.sigma_proc;
    in.sigma_u2    = sigma_u2;
    in.gamma2      = cfg.gamma2;
    in.gamma_tilde = gt.size() ? gt : Matrix::Zero(d, d);
    in.T           = T;
    in.delta       = cfg.delta;
    in.form        = cfg.gamma_bar_form;
    try {
        return epsilon_bound(f.est, in);
    } catch (const Error&) {
        return kInf;
    }
}

RunRecord run_policy(const LinSys& sys, const NoiseModel& noise, const ActiveConfig& cfg, std::uint64_t seed,
                     bool oracle) {
    cfg.validate();
    noise.validate();
    const int d = sys.d();
    const int p = sys.p();

    RunRecord rec;
    rec.policy = oracle ? "oracle" : "active";
    rec.seed   = seed;

    NoiseStreams  streams(seed);
    LsAccumulator acc(d, p, cfg.joint);
    auto          add = [&](const Trajectory& seg) {
        if (cfg.joint) acc.add(seg);
        else acc.add(seg, sys.B());
    };

    // Warmup: u ~ N(0, gamma2/p I).
    const double warm_u2 = cfg.gamma2 / p;
    Trajectory   seg     = simulate_segment(sys, noise.sigma_proc, std::sqrt(warm_u2) * Matrix::Identity(p, p), {},
                                            cfg.T0, Vector::Zero(d), streams, 0);
    add(seg);
    if (cfg.keep_trajectory) append(rec.trajectory, seg);
    long T   = cfg.T0;
    long T_i = cfg.T0;
    Fit  f   = fit(acc, sys.B(), cfg.joint);

    EpochRecord e0;
    e0.epoch          = 0;
    e0.T              = T;
    e0.k              = cfg.k0;
    e0.eps            = radius(f, noise, cfg, cfg.k0, warm_u2, Matrix(), T);
    e0.spectral_error = spectral_norm(f.est.A_hat - sys.A());
    e0.power          = realized_power(seg);
    e0.objective      = kNaN;
    e0.objective_true = kNaN;
    e0.sigma_u2       = warm_u2;
    e0.ridge          = f.est.ridge;
    rec.epochs.push_back(e0);

    double eps = e0.eps;
    for (int i = 1; i < cfg.epochs; ++i) {
        const int     k    = epoch_period(cfg, i);
        UpdateRequest req;
        req.gate.A_hat    = oracle ? sys.A() : f.est.A_hat;
        req.gate.B        = oracle ? sys.B() : f.B;
        req.gate.traj_cov = f.est.cov.topLeftCorner(d, d);
        req.gate.k        = k;
        req.gate.gamma2   = cfg.gamma2;
        req.gate.eps      = oracle ? 0.0 : eps;
        req.gate.T        = T;
        req.gate.T0       = cfg.T0;
        req.mode          = cfg.mode;
        req.sigma2        = noise.sigma_proc * noise.sigma_proc;
        req.sigma_u2      = cfg.sigma_u2;
        req.options       = cfg.design;
        const UpdateResult up = update_inputs(req, RandomStream::derive_key(seed, streams::kDesign, static_cast<std::uint64_t>(i)));

        EpochRecord er;
        er.epoch        = i;
        er.k            = k;
        er.sigma_u2     = up.sigma_u2;
        er.support_size = static_cast<int>(up.support.size());
        er.fallback     = up.fallback_unstable || !up.design;
        if (up.design && up.problem) {
            er.objective = up.design->objective;
            DesignProblem truth = *up.problem;
            truth.A_hat         = sys.A();
            truth.B             = sys.B();
            er.objective_true   = objective(truth, up.input);
        } else {
            er.objective      = kNaN;
            er.objective_true = kNaN;
        }

        T_i *= 3;
        const SignalFn sig = up.design ? up.input.signal() : SignalFn{};
        seg = simulate_segment(sys, noise.sigma_proc, std::sqrt(up.sigma_u2) * Matrix::Identity(p, p), sig, T_i,
                               seg.states.col(seg.steps()), streams, 0);
        add(seg);
        if (cfg.keep_trajectory) append(rec.trajectory, seg);
        T += T_i;
        f = fit(acc, sys.B(), cfg.joint);

        Matrix gt;
        if (up.design) {
            try {
                gt = gamma_tilde(f.est.A_hat, f.B, up.input);
            } catch (const Error&) {
                gt = Matrix();
            }
        }
        eps               = radius(f, noise, cfg, k, up.sigma_u2, gt, T);
        er.T              = T;
        er.eps            = eps;
        er.spectral_error = spectral_norm(f.est.A_hat - sys.A());
        er.power          = realized_power(seg);
        er.ridge          = f.est.ridge;
        rec.epochs.push_back(er);
    }
    rec.A_hat = f.est.A_hat;
    rec.B_hat = f.est.B_hat;
    return rec;
}

}  // namespace

void ActiveConfig::validate() const {
    if (k0 < 2) throw ConfigError("ActiveConfig: k0 must be at least 2");
    if (T0 < k0) throw ConfigError("ActiveConfig: T0 must be at least k0");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("ActiveConfig: delta must lie in (0, 1)");
    if (!(gamma2 > 0.0)) throw ConfigError("ActiveConfig: gamma2 must be positive");
    if (epochs < 1) throw ConfigError("ActiveConfig: at least one epoch");
    if (k_cap < k0) throw ConfigError("ActiveConfig: k_cap below k0");
    if (sigma_u2 && !(*sigma_u2 >= 0.0)) throw ConfigError("ActiveConfig: sigma_u2 must be nonnegative");
}

std::vector<long> epoch_checkpoints(const ActiveConfig& cfg) {
    std::vector<long> out;
    long              T = 0, Ti = cfg.T0;
    for (int i = 0; i < cfg.epochs; ++i) {
        T += Ti;
        out.push_back(T);
        Ti *= 3;
    }
    return out;
}

int epoch_period(const ActiveConfig& cfg, int epoch) {
    long k = cfg.k0;
    for (int i = 0; i < epoch && k < cfg.k_cap; ++i) k *= 2;
    return static_cast<int>(std::min<long>(k, cfg.k_cap));
}

Matrix psd_sqrt(const Matrix& S) {
    if (S.rows() != S.cols()) throw DimensionError("psd_sqrt: matrix not square");
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()));
    const Vector s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
}

RunRecord run_active(const LinSys& sys, const NoiseModel& noise, const ActiveConfig& config, std::uint64_t seed) {
    return run_policy(sys, noise, config, seed, false);
}

RunRecord run_oracle(const LinSys& sys, const NoiseModel& noise, const ActiveConfig& config, std::uint64_t seed) {
    return run_policy(sys, noise, config, seed, true);
}

RunRecord run_noise_baseline(const LinSys& sys, const NoiseModel& noise, const Matrix& input_cov,
                             const std::vector<long>& checkpoints, std::uint64_t seed, bool joint,
                             bool keep_trajectory) {
    noise.validate();
    const int d = sys.d();
    const int p = sys.p();
    if (input_cov.rows() != p || input_cov.cols() != p) throw DimensionError("run_noise_baseline: input_cov must be p x p");
    if (checkpoints.empty()) throw ConfigError("run_noise_baseline: no checkpoints");

    RunRecord rec;
    rec.policy = "noise";
    rec.seed   = seed;
    NoiseStreams  streams(seed);
    LsAccumulator acc(d, p, joint);
    const Matrix  factor = psd_sqrt(input_cov);
    const double  u2     = input_cov.trace() / p;
    Vector        x      = Vector::Zero(d);
    long          T      = 0;
    Fit           f;
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        const long len = checkpoints[i] - T;
        if (len < 1) throw ConfigError("run_noise_baseline: checkpoints must increase");
        Trajectory seg = simulate_segment(sys, noise.sigma_proc, factor, {}, len, x, streams, 0);
        if (joint) acc.add(seg);
        else acc.add(seg, sys.B());
        if (keep_trajectory) append(rec.trajectory, seg);
        x = seg.states.col(len);
        T = checkpoints[i];
        f = fit(acc, sys.B(), joint);

        EpochRecord er;
        er.epoch          = static_cast<int>(i);
        er.T              = T;
        er.k              = 0;
        er.eps            = kNaN;
        er.spectral_error = spectral_norm(f.est.A_hat - sys.A());
        er.power          = realized_power(seg);
        er.objective      = kNaN;
        er.objective_true = kNaN;
        er.sigma_u2       = u2;
        er.fallback       = false;
        er.ridge          = f.est.ridge;
        rec.epochs.push_back(er);
    }
    rec.A_hat = f.est.A_hat;
    rec.B_hat = f.est.B_hat;
    return rec;
}

}  // namespace activeid
