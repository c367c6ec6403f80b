#include "activeid/tools/serialize.hpp"

#include <json.hpp>

#include "activeid/errors.hpp"

namespace activeid::tools {
namespace {

using json = nlohmann::json;

json mat(const Matrix& M) {
    json rows = json::array();
    for (int i = 0; i < M.rows(); ++i) {
        json r = json::array();
        for (int j = 0; j < M.cols(); ++j) r.push_back(M(i, j));
        rows.push_back(std::move(r));
    }
    return rows;
}

Matrix mat(const json& j) {
    if (!j.is_array()) throw ConfigError("matrix must be an array of rows");
    if (j.empty()) return Matrix();
    const auto rows = static_cast<int>(j.size());
    const auto cols = static_cast<int>(j[0].size());
    Matrix     M(rows, cols);
    for (int i = 0; i < rows; ++i) {
        if (!j[i].is_array() || static_cast<int>(j[i].size()) != cols) throw ConfigError("ragged matrix");
        for (int c = 0; c < cols; ++c) M(i, c) = j[i][c].get<double>();
    }
    return M;
}

json input_json(const PeriodicInput& in) {
    json coeffs = json::array();
    for (int ell = 1; ell <= in.k(); ++ell) {
        json col = json::array();
        for (int i = 0; i < in.p(); ++i) col.push_back({in.coeffs()(i, ell - 1).real(), in.coeffs()(i, ell - 1).imag()});
        coeffs.push_back(std::move(col));
    }
    return {{"k", in.k()}, {"gamma2", in.gamma2()}, {"coeffs", std::move(coeffs)}};
}

PeriodicInput input_from(const json& j) {
    const int k = j.at("k").get<int>();
    const auto& c = j.at("coeffs");
    if (!c.is_array() || static_cast<int>(c.size()) != k || k < 1) throw ConfigError("coeffs must hold k columns");
    const int p = static_cast<int>(c[0].size());
    CMatrix   U(p, k);
    for (int l = 0; l < k; ++l) {
        if (static_cast<int>(c[l].size()) != p) throw ConfigError("coefficient columns differ in length");
        for (int i = 0; i < p; ++i) U(i, l) = Complex(c[l][i].at(0).get<double>(), c[l][i].at(1).get<double>());
    }
    return PeriodicInput(U, j.at("gamma2").get<double>());
}

template <class F>
auto guarded(const std::string& text, const char* what, F&& f) {
    try {
        return f(json::parse(text));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed ") + what + " JSON: " + e.what());
    }
}

}  // namespace

std::string to_json(const PeriodicInput& input) { return input_json(input).dump(); }

PeriodicInput periodic_input_from_json(const std::string& text) {
    return guarded(text, "PeriodicInput", [](const json& j) { return input_from(j); });
}

std::string to_json(const DesignProblem& p) {
    json j;
    j["A_hat"]          = mat(p.A_hat);
    j["B"]              = mat(p.B);
    j["gamma2"]         = p.gamma2;
    j["k"]              = p.k;
    j["support"]        = p.support;
    j["past_cov"]       = mat(p.past_cov);
    j["horizon_weight"] = p.horizon_weight;
    j["zero_mean"]      = p.zero_mean;
    return j.dump();
}

DesignProblem design_problem_from_json(const std::string& text) {
    return guarded(text, "DesignProblem", [](const json& j) {
        DesignProblem p;
        p.A_hat          = mat(j.at("A_hat"));
        p.B              = mat(j.at("B"));
        p.gamma2         = j.at("gamma2").get<double>();
        p.k              = j.at("k").get<int>();
        p.support        = j.at("support").get<std::vector<int>>();
        p.past_cov       = mat(j.at("past_cov"));
        p.horizon_weight = j.at("horizon_weight").get<double>();
        p.zero_mean      = j.at("zero_mean").get<bool>();
        return p;
    });
}

std::string to_json(const DesignResult& r) {
    json j;
    j["input"]            = input_json(r.input);
    j["objective"]        = r.objective;
    j["lifted_objective"] = r.lifted_objective;
    j["truncation_loss"]  = r.truncation_loss;
    j["gap_bound"]        = r.gap_bound;
    j["iterations"]       = r.iterations;
    j["trace"]            = r.trace;
    j["degenerate"]       = r.degenerate;
    return j.dump();
}

DesignResult design_result_from_json(const std::string& text) {
    return guarded(text, "DesignResult", [](const json& j) {
        DesignResult r;
        r.input            = input_from(j.at("input"));
        r.objective        = j.at("objective").get<double>();
        r.lifted_objective = j.at("lifted_objective").get<double>();
        r.truncation_loss  = j.at("truncation_loss").get<double>();
        r.gap_bound        = j.at("gap_bound").get<double>();
        r.iterations       = j.at("iterations").get<int>();
        r.trace            = j.at("trace").get<std::vector<double>>();
        r.degenerate       = j.at("degenerate").get<bool>();
        return r;
    });
}

std::string to_json(const Estimate& e) {
    json j;
    j["A_hat"]         = mat(e.A_hat);
    j["B_hat"]         = e.B_hat ? mat(*e.B_hat) : json(nullptr);
    j["residual_norm"] = e.residual_norm;
    j["cov"]           = mat(e.cov);
    j["ridge"]         = e.ridge;
    return j.dump();
}

Estimate estimate_from_json(const std::string& text) {
    return guarded(text, "Estimate", [](const json& j) {
        Estimate e;
        e.A_hat = mat(j.at("A_hat"));
        if (!j.at("B_hat").is_null()) e.B_hat = mat(j.at("B_hat"));
        e.residual_norm = j.at("residual_norm").get<double>();
        e.cov           = mat(j.at("cov"));
        e.ridge         = j.at("ridge").get<bool>();
        return e;
    });
}

}  // namespace activeid::tools
