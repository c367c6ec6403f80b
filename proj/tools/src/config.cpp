#include "activeid/tools/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "activeid/errors.hpp"

namespace activeid::tools {
namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

void only_keys(const toml::table& t, const std::string& where, std::initializer_list<std::string_view> allowed) {
    const std::set<std::string_view> ok(allowed);
    for (const auto& [key, node] : t) {
        (void)node;
        if (!ok.count(key.str())) fail("unknown key '" + std::string(key.str()) + "' in " + where);
    }
}

template <class T>
void read(const toml::table& t, std::string_view key, T& out, const std::string& where) {
    const toml::node* n = t.get(key);
    if (!n) return;
    if constexpr (std::is_same_v<T, double>) {
        if (auto v = n->value<double>()) {
            out = *v;
            return;
        }
    } else if constexpr (std::is_same_v<T, bool>) {
        if (auto v = n->value_exact<bool>()) {
            out = *v;
            return;
        }
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (auto v = n->value_exact<std::string>()) {
            out = *v;
            return;
        }
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (auto v = n->value_exact<std::int64_t>(); v && *v >= 0) {
            out = static_cast<std::uint64_t>(*v);
            return;
        }
    } else {
        if (auto v = n->value_exact<std::int64_t>()) {
            out = static_cast<T>(*v);
            return;
        }
    }
    fail("key '" + std::string(key) + "' in " + where + " has the wrong type");
}

const toml::table* sub(const toml::table& t, std::string_view key) {
    const toml::node* n = t.get(key);
    if (!n) return nullptr;
    if (!n->is_table()) fail("'" + std::string(key) + "' must be a table");
    return n->as_table();
}

Vector read_vector(const toml::node& n, const std::string& what) {
    const toml::array* a = n.as_array();
    if (!a || a->empty()) fail(what + " must be a non-empty array of numbers");
    Vector v(static_cast<int>(a->size()));
    for (std::size_t i = 0; i < a->size(); ++i) {
        auto x = (*a)[i].value<double>();
        if (!x) fail(what + " must contain numbers");
        v(static_cast<int>(i)) = *x;
    }
    return v;
}

Matrix read_matrix(const toml::node& n, const std::string& what) {
    const toml::array* a = n.as_array();
    if (!a || a->empty()) fail(what + " must be an array of rows");
    Matrix M;
    for (std::size_t i = 0; i < a->size(); ++i) {
        const Vector row = read_vector((*a)[i], what + " row");
        if (i == 0) M.resize(static_cast<int>(a->size()), row.size());
        if (row.size() != M.cols()) fail(what + " rows have different lengths");
        M.row(static_cast<int>(i)) = row.transpose();
    }
    return M;
}

InputMatrixSpec parse_b(const toml::table& t) {
    only_keys(t, "[system.B]", {"kind", "p", "seed", "matrix"});
    InputMatrixSpec b;
    std::string     kind = "identity";
    read(t, "kind", kind, "[system.B]");
    if (kind == "identity") b.kind = InputMatrixSpec::Kind::Identity;
    else if (kind == "random") b.kind = InputMatrixSpec::Kind::Random;
    else if (kind == "explicit") b.kind = InputMatrixSpec::Kind::Explicit;
    else fail("unknown B kind '" + kind + "'");
    read(t, "p", b.p, "[system.B]");
    read(t, "seed", b.seed, "[system.B]");
    if (const toml::node* m = t.get("matrix")) b.matrix = read_matrix(*m, "B matrix");
    if (b.kind == InputMatrixSpec::Kind::Explicit && b.matrix.size() == 0) fail("explicit B needs 'matrix'");
    return b;
}

SystemSpec parse_system(const toml::table& t, const std::string& where) {
    only_keys(t, where, {"kind", "d", "rho", "lambda", "seed", "blocks", "A", "B"});
    SystemSpec  s;
    std::string kind = "jordan";
    read(t, "kind", kind, where);
    s.kind = system_kind_from_string(kind);
    read(t, "d", s.d, where);
    read(t, "rho", s.rho, where);
    read(t, "seed", s.seed, where);
    if (const toml::node* l = t.get("lambda")) s.lambda = read_vector(*l, "lambda");
    if (const toml::node* a = t.get("A")) s.A = read_matrix(*a, "A");
    if (const toml::node* b = t.get("blocks")) {
        const toml::array* arr = b->as_array();
        if (!arr) fail("blocks must be an array of tables");
        for (std::size_t i = 0; i < arr->size(); ++i) {
            const toml::table* bt = (*arr)[i].as_table();
            if (!bt) fail("blocks must be an array of tables");
            s.blocks.push_back(parse_system(*bt, where + ".blocks[" + std::to_string(i) + "]"));
        }
    }
    if (const toml::table* b = sub(t, "B")) s.B = parse_b(*b);
    if (s.kind == SystemSpec::Kind::UnitaryDiag && s.lambda.size() == 0) fail("unitary_diag needs 'lambda'");
    if (s.kind == SystemSpec::Kind::Explicit && s.A.size() == 0) fail("explicit system needs 'A'");
    return s;
}

}  // namespace

std::string to_string(Policy p) {
    switch (p) {
        case Policy::Active: return "active";
        case Policy::Oracle: return "oracle";
        case Policy::IsoNoise: return "iso_noise";
        case Policy::OptNoise: return "opt_noise";
    }
    return "?";
}

Policy policy_from_string(const std::string& s) {
    if (s == "active") return Policy::Active;
    if (s == "oracle") return Policy::Oracle;
    if (s == "iso_noise") return Policy::IsoNoise;
    if (s == "opt_noise") return Policy::OptNoise;
    throw ConfigError("unknown policy '" + s + "'");
}

void ExperimentConfig::validate() const {
    if (trials < 1) fail("trials must be at least 1");
    if (threads < 1) fail("threads must be at least 1");
    if (policies.empty()) fail("at least one policy is required");
    if (!(sigma >= 0.0)) fail("sigma must be nonnegative");
    if (gamma2 && !(*gamma2 > 0.0)) fail("gamma2 must be positive");
    if (simulate_T < 1) fail("simulate.T must be positive");
    if (simulate_input != "noise" && simulate_input != "design") fail("simulate.input must be 'noise' or 'design'");
    if (design_k < 0 || design_k == 1) fail("design.k must be 0 (use k0) or at least 2");
    if (noise_design.max_iters < 1 || !(noise_design.gap_tol > 0.0)) fail("invalid noise_design options");
    if (algorithm.design.max_iters < 1 || algorithm.design.restarts < 1) fail("invalid design options");
    ActiveConfig probe = algorithm;
    probe.gamma2       = gamma2.value_or(1.0);
    probe.validate();
}

ActiveConfig ExperimentConfig::active_config(int p) const {
    ActiveConfig c = algorithm;
    c.gamma2       = gamma2.value_or(static_cast<double>(p));
    return c;
}

std::string ExperimentConfig::hash() const {
    // FNV-1a over the normalized config and the effective seed
    std::uint64_t h    = 1469598103934665603ULL;
    auto          feed = [&](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
    };
    feed(canonical);
    feed("\nseed=" + std::to_string(seed));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ExperimentConfig parse_config(std::string_view text, std::string_view source) {
    toml::table root;
    try {
        root = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << e.description() << " (" << e.source().begin << ")";
        fail("cannot parse " + std::string(source) + ": " + os.str());
    }
    only_keys(root, "top level",
              {"seed", "trials", "threads", "policies", "system", "noise", "algorithm", "design", "noise_design",
               "simulate", "verify", "output"});

    ExperimentConfig c;
    read(root, "seed", c.seed, "top level");
    read(root, "trials", c.trials, "top level");
    read(root, "threads", c.threads, "top level");
    if (const toml::node* p = root.get("policies")) {
        const toml::array* a = p->as_array();
        if (!a) fail("policies must be an array of strings");
        c.policies.clear();
        for (const auto& n : *a) {
            auto s = n.value_exact<std::string>();
            if (!s) fail("policies must be an array of strings");
            c.policies.push_back(policy_from_string(*s));
        }
    }

    if (const toml::table* t = sub(root, "system")) c.system = parse_system(*t, "[system]");
    if (const toml::table* t = sub(root, "noise")) {
        only_keys(*t, "[noise]", {"sigma"});
        read(*t, "sigma", c.sigma, "[noise]");
    }
    if (const toml::table* t = sub(root, "algorithm")) {
        const std::string w = "[algorithm]";
        only_keys(*t, w, {"T0", "k0", "delta", "gamma2", "mode", "sigma_u2", "epochs", "k_cap", "joint", "gamma_bar"});
        auto& a = c.algorithm;
        read(*t, "T0", a.T0, w);
        read(*t, "k0", a.k0, w);
        read(*t, "delta", a.delta, w);
        read(*t, "epochs", a.epochs, w);
        read(*t, "k_cap", a.k_cap, w);
        read(*t, "joint", a.joint, w);
        if (t->get("gamma2")) {
            double g = 0.0;
            read(*t, "gamma2", g, w);
            c.gamma2 = g;
        }
        if (t->get("sigma_u2")) {
            double s = 0.0;
            read(*t, "sigma_u2", s, w);
            a.sigma_u2 = s;
        }
        std::string mode = to_string(a.mode);
        read(*t, "mode", mode, w);
        a.mode = plan_mode_from_string(mode);
        std::string gb = "trajectory";
        read(*t, "gamma_bar", gb, w);
        if (gb == "trajectory") a.gamma_bar_form = GammaBarForm::Trajectory;
        else if (gb == "uniform") a.gamma_bar_form = GammaBarForm::Uniform;
        else fail("gamma_bar must be 'trajectory' or 'uniform'");
    }
    if (const toml::table* t = sub(root, "design")) {
        const std::string w = "[design]";
        only_keys(*t, w, {"k", "max_iters", "restarts", "tie_tol", "stall_tol", "stall_window", "polish_iters"});
        auto& d = c.algorithm.design;
        read(*t, "k", c.design_k, w);
        read(*t, "max_iters", d.max_iters, w);
        read(*t, "restarts", d.restarts, w);
        read(*t, "tie_tol", d.tie_tol, w);
        read(*t, "stall_tol", d.stall_tol, w);
        read(*t, "stall_window", d.stall_window, w);
        read(*t, "polish_iters", d.polish_iters, w);
    }
    if (const toml::table* t = sub(root, "noise_design")) {
        only_keys(*t, "[noise_design]", {"max_iters", "gap_tol"});
        read(*t, "max_iters", c.noise_design.max_iters, "[noise_design]");
        read(*t, "gap_tol", c.noise_design.gap_tol, "[noise_design]");
    }
    if (const toml::table* t = sub(root, "simulate")) {
        only_keys(*t, "[simulate]", {"T", "input"});
        read(*t, "T", c.simulate_T, "[simulate]");
        read(*t, "input", c.simulate_input, "[simulate]");
    }
    if (const toml::table* t = sub(root, "verify")) {
        const std::string w = "[verify]";
        only_keys(*t, w,
                  {"parseval", "gamma_oracle", "optinput", "colored_noise", "noise_gap", "tail_sigmas", "rate",
                   "jordan_noise", "jordan_oracle", "power_sigmas", "gradient"});
        auto& v = c.verify;
        read(*t, "parseval", v.parseval, w);
        read(*t, "gamma_oracle", v.gamma_oracle, w);
        read(*t, "optinput", v.optinput, w);
        read(*t, "colored_noise", v.colored_noise, w);
        read(*t, "noise_gap", v.noise_gap, w);
        read(*t, "tail_sigmas", v.tail_sigmas, w);
        read(*t, "rate", v.rate, w);
        read(*t, "jordan_noise", v.jordan_noise, w);
        read(*t, "jordan_oracle", v.jordan_oracle, w);
        read(*t, "power_sigmas", v.power_sigmas, w);
        read(*t, "gradient", v.gradient, w);
    }
    if (const toml::table* t = sub(root, "output")) {
        const std::string w = "[output]";
        only_keys(*t, w, {"raw_csv", "report_csv", "svg", "meta_json", "plot"});
        read(*t, "raw_csv", c.output.raw_csv, w);
        read(*t, "report_csv", c.output.report_csv, w);
        read(*t, "svg", c.output.svg, w);
        read(*t, "meta_json", c.output.meta_json, w);
        read(*t, "plot", c.output.plot, w);
    }

    std::ostringstream os;
    os << root;
    c.canonical = os.str();
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

}  // namespace activeid::tools
