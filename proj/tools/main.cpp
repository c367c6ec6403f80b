#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "activeid/design.hpp"
#include "activeid/errors.hpp"
#include "activeid/freq.hpp"
#include "activeid/tools/config.hpp"
#include "activeid/tools/experiment.hpp"
#include "activeid/tools/plot.hpp"
#include "activeid/tools/serialize.hpp"
#include "activeid/tools/systems.hpp"
#include "activeid/tools/verify.hpp"

namespace fs = std::filesystem;
using namespace activeid;
using namespace activeid::tools;

namespace {

constexpr int kOk = 0, kFailed = 1, kConfigError = 2;

struct Common {
    std::string                  config;
    std::optional<std::uint64_t> seed;
    std::string                  out = ".";
    int                          threads = 0;
};

ExperimentConfig load(const Common& c) {
    ExperimentConfig cfg = c.config.empty() ? parse_config("", "defaults") : load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (c.threads > 0) cfg.threads = c.threads;
    return cfg;
}

fs::path out_path(const Common& c, const std::string& name) {
    fs::create_directories(c.out);
    return fs::path(c.out) / name;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + p.string() + "'");
    f << text;
}

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

// Design for the true system over the simulate horizon: the budget left after
// exploration noise, with the noise Gramian as past covariates.
struct PlannedInput {
    DesignProblem problem;
    DesignResult  result;
    double        sigma_u2;
};

PlannedInput plan(const LinSys& sys, const ExperimentConfig& cfg) {
    const ActiveConfig ac = cfg.active_config(sys.p());
    const int          k  = cfg.design_k > 0 ? cfg.design_k : ac.k0;
    const double       su = ac.sigma_u2.value_or(ac.gamma2 / (2.0 * sys.p()));
    const double       T  = static_cast<double>(cfg.simulate_T);
    DesignProblem      pr;
    pr.A_hat          = sys.A();
    pr.B              = sys.B();
    pr.gamma2         = ac.gamma2 - sys.p() * su;
    pr.k              = k;
    pr.support        = all_frequencies(k);
    pr.past_cov       = T * gram_eta(sys.A(), sys.B(), cfg.sigma * cfg.sigma, su, k);
    pr.horizon_weight = T;
    if (!(pr.gamma2 > 0.0)) throw ConfigError("sigma_u2 leaves no budget for the periodic input");
    return {pr, opt_input(pr, RandomStream::derive_key(cfg.seed, streams::kDesign, 0), ac.design), su};
}

int cmd_simulate(const Common& c) {
    const auto   cfg = load(c);
    const LinSys sys = gen_system(cfg.system, cfg.seed);
    const auto   ac  = cfg.active_config(sys.p());
    Trajectory   tr;
    if (cfg.simulate_input == "design") {
        const auto pl = plan(sys, cfg);
        NoiseStreams ns(cfg.seed);
        tr = simulate_segment(sys, cfg.sigma, std::sqrt(pl.sigma_u2) * Matrix::Identity(sys.p(), sys.p()),
                              pl.result.input.signal(), cfg.simulate_T, Vector::Zero(sys.d()), ns, 0);
        write_file(out_path(c, "input.json"), to_json(pl.result.input) + "\n");
    } else {
        tr = simulate(sys, NoiseModel{cfg.sigma, std::sqrt(ac.gamma2 / sys.p())}, {}, cfg.simulate_T,
                      Vector::Zero(sys.d()), cfg.seed);
    }
    std::ostringstream os;
    os << "# schema=1\nt";
    for (int i = 0; i < sys.d(); ++i) os << ",x" << i;
    for (int i = 0; i < sys.p(); ++i) os << ",u" << i;
    os << '\n';
    for (long t = 0; t <= tr.steps(); ++t) {
        os << t;
        for (int i = 0; i < sys.d(); ++i) os << ',' << num(tr.states(i, t));
        for (int i = 0; i < sys.p(); ++i) os << ',' << (t < tr.steps() ? num(tr.inputs(i, t)) : "");
        os << '\n';
    }
    const auto path = out_path(c, "trajectory.csv");
    write_file(path, os.str());
    std::cerr << "wrote " << path.string() << " (" << tr.steps() << " steps, " << cfg.system.describe() << ")\n";
    return kOk;
}

int cmd_design(const Common& c) {
    const auto   cfg = load(c);
    const LinSys sys = gen_system(cfg.system, cfg.seed);
    const auto   pl  = plan(sys, cfg);
    write_file(out_path(c, "design.json"),
               "{\"problem\": " + to_json(pl.problem) + ",\n \"result\": " + to_json(pl.result) + "}\n");
    std::ostringstream os;
    os << "# schema=1\nell,theta,power\n";
    const auto& in = pl.result.input;
    for (int ell = 1; ell <= in.k(); ++ell)
        os << ell << ',' << num(grid_angle(ell, in.k())) << ',' << num(in.coeff(ell).squaredNorm() / (double(in.k()) * in.k()))
           << '\n';
    write_file(out_path(c, "design.csv"), os.str());
    std::cerr << "objective " << pl.result.objective << " (lifted " << pl.result.lifted_objective << ", gap bound "
              << pl.result.gap_bound << ")\n";
    return kOk;
}

int run_policies(const Common& c, const std::vector<Policy>& only, bool meta) {
    auto cfg = load(c);
    if (!only.empty()) {
        std::vector<Policy> keep;
        for (Policy p : cfg.policies)
            if (std::find(only.begin(), only.end(), p) != only.end()) keep.push_back(p);
        cfg.policies = keep.empty() ? std::vector<Policy>{only.front()} : keep;
    }
    const auto res = run_experiment(cfg);
    {
        std::ofstream f(out_path(c, cfg.output.raw_csv), std::ios::binary);
        write_raw_csv(f, res.raw);
    }
    {
        std::ofstream f(out_path(c, cfg.output.report_csv), std::ios::binary);
        write_report_csv(f, res.report);
    }
    if (cfg.output.plot && !res.report.rows.empty()) emit_plot(res.report, out_path(c, cfg.output.svg).string());
    if (meta) write_file(out_path(c, cfg.output.meta_json), report_meta_json(res.report, cfg));
    for (const auto& r : res.report.rows)
        if (r.epoch == res.report.rows.back().epoch || r.epoch == 0)
            std::cerr << r.policy << " T=" << r.T << " median " << r.median << " [" << r.p10 << ", " << r.p90 << "]\n";
    if (res.report.failed_trials) std::cerr << res.report.failed_trials << " trial(s) failed\n";
    return kOk;
}

int cmd_verify(const Common& c, const std::string& level) {
    const auto cfg = load(c);
    const auto rep = verify_suite(verify_level_from_string(level), cfg.seed, cfg.verify);
    {
        std::ofstream f(out_path(c, "verify.csv"), std::ios::binary);
        write_verify_csv(f, rep);
    }
    for (const auto& ch : rep.checks)
        std::cout << (ch.passed ? "PASS " : "FAIL ") << ch.name << "  measured " << ch.measured << "  threshold "
                  << ch.threshold << "  " << ch.detail << "\n";
    return rep.passed() ? kOk : kFailed;
}

int cmd_plot(const Common& c, const std::string& report_path) {
    const auto    cfg = load(c);
    const auto    src = report_path.empty() ? (fs::path(c.out) / cfg.output.report_csv) : fs::path(report_path);
    std::ifstream in(src, std::ios::binary);
    if (!in) throw ConfigError("cannot open report '" + src.string() + "'");
    const Report rep = read_report_csv(in);
    const auto   dst = out_path(c, cfg.output.svg);
    emit_plot(rep, dst.string());
    std::cerr << "wrote " << dst.string() << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Active identification of linear dynamical systems with periodic inputs"};
    app.require_subcommand(1);
    Common      common;
    std::string level = "fast";
    std::string report_path;

    auto add_common = [&](CLI::App* sub, bool threads) {
        sub->add_option("--config", common.config, "TOML configuration file")->check(CLI::ExistingFile);
        sub->add_option("--seed", common.seed, "override the configured seed");
        sub->add_option("--out", common.out, "output directory");
        if (threads) sub->add_option("--threads", common.threads, "worker threads for trials")->check(CLI::PositiveNumber);
    };
    auto* simulate   = app.add_subcommand("simulate", "simulate the configured system and write trajectory.csv");
    auto* design     = app.add_subcommand("design", "solve the input design on the true system");
    auto* active     = app.add_subcommand("run-active", "run the adaptive algorithm over trials");
    auto* baseline   = app.add_subcommand("run-baseline", "run the noise baselines over trials");
    auto* experiment = app.add_subcommand("experiment", "run every configured policy and plot");
    auto* verify     = app.add_subcommand("verify", "run the theory verification suite");
    auto* plot       = app.add_subcommand("plot", "render a report CSV as SVG");
    for (auto* s : {simulate, design, verify, plot}) add_common(s, false);
    for (auto* s : {active, baseline, experiment}) add_common(s, true);
    verify->add_option("--level", level, "fast or full")->check(CLI::IsMember({"fast", "full"}));
    plot->add_option("--report", report_path, "report CSV (default: <out>/report.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        if (*simulate) return cmd_simulate(common);
        if (*design) return cmd_design(common);
        if (*active) return run_policies(common, {Policy::Active}, false);
        if (*baseline) return run_policies(common, {Policy::IsoNoise, Policy::OptNoise}, false);
        if (*experiment) return run_policies(common, {}, true);
        if (*verify) return cmd_verify(common, level);
        if (*plot) return cmd_plot(common, report_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailed;
    }
    return kOk;
}
