#include "activeid/tools/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "activeid/errors.hpp"

#ifndef ACTIVEID_VERSION
#define ACTIVEID_VERSION "0.1.0"
#endif

namespace activeid::tools {
namespace {

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string              cur;
    std::istringstream       is(line);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

double parse_double(const std::string& s) {
    if (s == "nan" || s == "-nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    try {
        std::size_t pos = 0;
        const double v  = std::stod(s, &pos);
        if (pos != s.size()) throw ConfigError("bad number '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        throw ConfigError("bad number '" + s + "'");
    }
}

}  // namespace

Matrix opt_noise_cov(const LinSys& sys, const ExperimentConfig& cfg) {
    const ActiveConfig ac = cfg.active_config(sys.p());
    const long K = std::min(epoch_checkpoints(ac).back(), std::max<long>(ac.k0, truncation_horizon(sys.A())));
    return optimal_noise_cov(sys.A(), sys.B(), ac.gamma2, cfg.sigma * cfg.sigma, K, cfg.noise_design).cov;
}

std::string version_string() { return ACTIVEID_VERSION; }

RunRecord run_trial(Policy policy, const TrialContext& ctx, std::uint64_t seed) {
    const LinSys&           sys = ctx.sys;
    const ExperimentConfig& cfg = ctx.config;
    const ActiveConfig      ac  = cfg.active_config(sys.p());
    RunRecord          rec;
    switch (policy) {
        case Policy::Active: rec = run_active(sys, cfg.noise(), ac, seed); break;
        case Policy::Oracle: rec = run_oracle(sys, cfg.noise(), ac, seed); break;
        case Policy::IsoNoise:
            rec = run_noise_baseline(sys, cfg.noise(), (ac.gamma2 / sys.p()) * Matrix::Identity(sys.p(), sys.p()),
                                     epoch_checkpoints(ac), seed, ac.joint);
            break;
        case Policy::OptNoise:
            if (ctx.opt_noise_cov.size() == 0) throw ConfigError("opt_noise policy without a noise design");
            rec = run_noise_baseline(sys, cfg.noise(), ctx.opt_noise_cov, epoch_checkpoints(ac), seed, ac.joint);
            break;
    }
    rec.policy = to_string(policy);
    return rec;
}

double percentile(std::vector<double> v, double q) {
    if (v.empty()) throw ConfigError("percentile of an empty sample");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto   lo  = static_cast<std::size_t>(std::floor(pos));
    const auto   hi  = std::min(lo + 1, v.size() - 1);
    const double f   = pos - static_cast<double>(lo);
    return v[lo] + f * (v[hi] - v[lo]);
}

Report aggregate(const std::vector<RawRow>& raw) {
    std::map<std::pair<std::string, int>, std::vector<double>> by;
    std::map<std::pair<std::string, int>, long>                T;
    for (const auto& r : raw) {
        const auto key = std::make_pair(r.policy, r.record.epoch);
        by[key].push_back(r.record.spectral_error);
        T[key] = r.record.T;
    }
    Report rep;
    for (const auto& [key, vals] : by) {
        PercentileRow row;
        row.policy = key.first;
        row.epoch  = key.second;
        row.T      = T[key];
        row.n      = static_cast<int>(vals.size());
        row.p10    = percentile(vals, 0.1);
        row.median = percentile(vals, 0.5);
        row.p90    = percentile(vals, 0.9);
        rep.rows.push_back(row);
    }
    return rep;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const TrialRunner& runner) {
    cfg.validate();
    const auto   start = std::chrono::steady_clock::now();
    const LinSys sys   = gen_system(cfg.system, cfg.seed);
    TrialContext ctx{sys, cfg, Matrix()};
    if (std::find(cfg.policies.begin(), cfg.policies.end(), Policy::OptNoise) != cfg.policies.end())
        ctx.opt_noise_cov = opt_noise_cov(sys, cfg);

    struct Job {
        Policy policy;
        int    trial;
    };
    std::vector<Job> jobs;
    for (Policy p : cfg.policies)
        for (int t = 0; t < cfg.trials; ++t) jobs.push_back({p, t});

    std::vector<std::vector<RawRow>> rows(jobs.size());
    std::vector<std::string>         errors(jobs.size());
    std::atomic<std::size_t>         next{0};
    std::mutex                       log_mutex;

    auto worker = [&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
            const Job& job = jobs[j];
            try {
                const RunRecord rec = runner(job.policy, ctx, trial_seed(cfg.seed, static_cast<std::uint64_t>(job.trial)));
                for (const auto& e : rec.epochs) rows[j].push_back(RawRow{job.trial, to_string(job.policy), e});
            } catch (const std::exception& ex) {
                rows[j].clear();
                errors[j] = ex.what();
                std::lock_guard<std::mutex> lock(log_mutex);
                std::cerr << "trial " << job.trial << " of " << to_string(job.policy) << " failed: " << ex.what() << "\n";
            }
        }
    };
    const int n_threads = std::max(1, std::min<int>(cfg.threads, static_cast<int>(jobs.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    ExperimentResult res;
    std::vector<std::string> failures;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        for (auto& r : rows[j]) res.raw.push_back(std::move(r));
        if (!errors[j].empty()) failures.push_back(to_string(jobs[j].policy) + " " + std::to_string(jobs[j].trial) + ": " + errors[j]);
    }
    std::sort(res.raw.begin(), res.raw.end(), [](const RawRow& a, const RawRow& b) {
        return std::tie(a.policy, a.trial, a.record.epoch) < std::tie(b.policy, b.trial, b.record.epoch);
    });
    std::sort(failures.begin(), failures.end());

    res.report               = aggregate(res.raw);
    res.report.config_hash   = cfg.hash();
    res.report.version       = version_string();
    res.report.failed_trials = static_cast<int>(failures.size());
    res.report.failures      = std::move(failures);
    res.report.wall_seconds  = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

void write_raw_csv(std::ostream& os, const std::vector<RawRow>& raw) {
    os << "# schema=1\n";
    os << "trial,policy,epoch,T,k,eps,spectral_error,objective,power\n";
    for (const auto& r : raw) {
        const auto& e = r.record;
        os << r.trial << ',' << r.policy << ',' << e.epoch << ',' << e.T << ',' << e.k << ',' << num(e.eps) << ','
           << num(e.spectral_error) << ',' << num(e.objective) << ',' << num(e.power) << '\n';
    }
}

void write_report_csv(std::ostream& os, const Report& rep) {
    os << "# schema=1\n";
    os << "# config_hash=" << rep.config_hash << "\n";
    os << "# version=" << rep.version << "\n";
    os << "# failed_trials=" << rep.failed_trials << "\n";
    os << "policy,epoch,T,n,p10,median,p90\n";
    for (const auto& r : rep.rows)
        os << r.policy << ',' << r.epoch << ',' << r.T << ',' << r.n << ',' << num(r.p10) << ',' << num(r.median) << ','
           << num(r.p90) << '\n';
}

Report read_report_csv(std::istream& is) {
    Report      rep;
    std::string line;
    bool        header = false, schema = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq  = line.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = line.substr(2, eq - 2);
            const std::string val = line.substr(eq + 1);
            if (key == "schema") {
                if (val != "1") throw ConfigError("unsupported report schema " + val);
                schema = true;
            } else if (key == "config_hash") rep.config_hash = val;
            else if (key == "version") rep.version = val;
            else if (key == "failed_trials") rep.failed_trials = std::stoi(val);
            continue;
        }
        if (!header) {
            if (line != "policy,epoch,T,n,p10,median,p90") throw ConfigError("unexpected report header: " + line);
            header = true;
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 7) throw ConfigError("malformed report row: " + line);
        PercentileRow r;
        r.policy = f[0];
        r.epoch  = std::stoi(f[1]);
        r.T      = std::stol(f[2]);
        r.n      = std::stoi(f[3]);
        r.p10    = parse_double(f[4]);
        r.median = parse_double(f[5]);
        r.p90    = parse_double(f[6]);
        rep.rows.push_back(r);
    }
    if (!schema || !header) throw ConfigError("not a report file (missing schema or header)");
    return rep;
}

std::string report_meta_json(const Report& rep, const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["config_hash"]   = rep.config_hash;
    j["version"]       = rep.version;
    j["seed"]          = cfg.seed;
    j["trials"]        = cfg.trials;
    j["system"]        = cfg.system.describe();
    j["wall_seconds"]  = rep.wall_seconds;
    j["failed_trials"] = rep.failed_trials;
    j["failures"]      = rep.failures;
    return j.dump(2) + "\n";
}

}  // namespace activeid::tools
