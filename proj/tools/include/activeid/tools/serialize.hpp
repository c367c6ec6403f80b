#pragma once

#include <string>

#include "activeid/design.hpp"
#include "activeid/estimate.hpp"
#include "activeid/freq.hpp"

namespace activeid::tools {

// JSON text. Doubles are written with enough digits to round-trip exactly.
// Readers throw ConfigError on malformed input.

// {"k": .., "gamma2": .., "coeffs": [[[re, im] x p] x k]}
std::string   to_json(const PeriodicInput& input);
PeriodicInput periodic_input_from_json(const std::string& text);

std::string   to_json(const DesignProblem& problem);
DesignProblem design_problem_from_json(const std::string& text);

std::string  to_json(const DesignResult& result);
DesignResult design_result_from_json(const std::string& text);

std::string to_json(const Estimate& estimate);
Estimate    estimate_from_json(const std::string& text);

}  // namespace activeid::tools
